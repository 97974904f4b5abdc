#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace sonalign::sonic {

struct Endpoint {
  std::string host = "127.0.0.1";
  uint16_t port = 4557;
};

// "host:port"; throws ConfigError on malformed input.
Endpoint parse_endpoint(const std::string& text);

constexpr size_t kMaxUdpPayload = 65507;
constexpr const char* kDefaultOscAddress = "/run-code";

struct RenderJob {
  std::string program_text;
  Endpoint endpoint;
  double record_seconds = 10.0;
  std::string output_wav;  // recording target; dry-run capture lands beside it
};

enum class SubmitMode { kLive, kDryRun };

struct SubmitResult {
  size_t packet_bytes = 0;
  std::string capture_path;  // set in dry-run mode
};

// Encodes the program as a single OSC message (one string argument) and either
// sends it over UDP fire-and-forget, waiting record_seconds afterwards, or
// writes the exact packet bytes to a `.osc` capture file next to output_wav.
// Packets beyond one UDP datagram raise TransportError before anything is sent.
SubmitResult submit_program(const RenderJob& job, SubmitMode mode,
                            const std::string& osc_address = kDefaultOscAddress);

// One datagram to the endpoint; throws TransportError on resolution or send
// failure.
void send_udp(const Endpoint& endpoint, const std::vector<uint8_t>& payload);

struct RecordingCheck {
  bool valid = false;
  std::string reason;  // empty when valid
  double seconds = 0.0;
  double peak = 0.0;
};

// A recording passes when it parses as PCM WAV, covers at least 0.9 x the
// expected duration, and peaks above the silence threshold. Unparseable files
// come back invalid with the reason, never as an exception.
RecordingCheck validate_recording(const std::string& wav_path, double expected_seconds,
                                  double silence_threshold = 1e-3);

}  // namespace sonalign::sonic
