#include "sonalign/soniclink.hpp"

#include <chrono>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <thread>

#include <netdb.h>
#include <sys/socket.h>
#include <unistd.h>

#include "sonalign/errors.hpp"
#include "sonalign/osc.hpp"
#include "sonalign/wav.hpp"

namespace sonalign::sonic {

namespace fs = std::filesystem;

Endpoint parse_endpoint(const std::string& text) {
  const size_t colon = text.rfind(':');
  if (colon == std::string::npos || colon == 0 || colon + 1 == text.size()) {
    throw ConfigError("endpoint must be host:port, got '" + text + "'");
  }
  Endpoint ep;
  ep.host = text.substr(0, colon);
  const std::string port_s = text.substr(colon + 1);
  try {
    const int port = std::stoi(port_s);
    if (port < 1 || port > 65535) throw std::out_of_range("port");
    ep.port = static_cast<uint16_t>(port);
  } catch (const std::exception&) {
    throw ConfigError("invalid port '" + port_s + "' in endpoint '" + text + "'");
  }
  return ep;
}

void send_udp(const Endpoint& endpoint, const std::vector<uint8_t>& payload) {
  addrinfo hints{};
  hints.ai_family = AF_INET;
  hints.ai_socktype = SOCK_DGRAM;
  addrinfo* res = nullptr;
  const std::string port_s = std::to_string(endpoint.port);
  const int rc = getaddrinfo(endpoint.host.c_str(), port_s.c_str(), &hints, &res);
  if (rc != 0) {
    throw TransportError("cannot resolve endpoint " + endpoint.host + ":" + port_s + ": " +
                         gai_strerror(rc));
  }

  const int fd = socket(res->ai_family, res->ai_socktype, res->ai_protocol);
  if (fd < 0) {
    freeaddrinfo(res);
    throw TransportError(std::string("cannot create UDP socket: ") + std::strerror(errno));
  }
  const ssize_t sent =
      sendto(fd, payload.data(), payload.size(), 0, res->ai_addr, res->ai_addrlen);
  const int send_errno = errno;
  close(fd);
  freeaddrinfo(res);
  if (sent != static_cast<ssize_t>(payload.size())) {
    throw TransportError("UDP send to " + endpoint.host + ":" + port_s + " failed: " +
                         std::strerror(send_errno));
  }
}

SubmitResult submit_program(const RenderJob& job, SubmitMode mode,
                            const std::string& osc_address) {
  if (job.record_seconds <= 0.0) {
    throw ConfigError("record_seconds must be > 0");
  }
  osc::Message msg;
  msg.address = osc_address;
  msg.args.emplace_back(job.program_text);
  const std::vector<uint8_t> packet = osc::encode(msg);
  if (packet.size() > kMaxUdpPayload) {
    throw TransportError("encoded program is " + std::to_string(packet.size()) +
                         " bytes, beyond the " + std::to_string(kMaxUdpPayload) +
                         "-byte UDP payload limit; nothing sent");
  }

  SubmitResult result;
  result.packet_bytes = packet.size();
  if (mode == SubmitMode::kDryRun) {
    fs::path capture = job.output_wav.empty() ? fs::path("capture.osc") : fs::path(job.output_wav);
    capture.replace_extension(".osc");
    std::ofstream out(capture, std::ios::binary);
    if (!out) throw IoError("cannot write capture file: " + capture.string());
    out.write(reinterpret_cast<const char*>(packet.data()),
              static_cast<std::streamsize>(packet.size()));
    if (!out) throw IoError("write failure on capture file: " + capture.string());
    result.capture_path = capture.string();
    return result;
  }

  send_udp(job.endpoint, packet);
  // the protocol offers no acknowledgment; hold the line while the external
  // recorder runs, then let the caller validate the recording
  std::this_thread::sleep_for(std::chrono::duration<double>(job.record_seconds));
  return result;
}

RecordingCheck validate_recording(const std::string& wav_path, double expected_seconds,
                                  double silence_threshold) {
  RecordingCheck check;
  wav::Audio audio;
  try {
    audio = wav::read_wav(wav_path);
  } catch (const std::exception& e) {
    check.reason = std::string("unreadable: ") + e.what();
    return check;
  }
  check.seconds = audio.seconds();
  for (double s : audio.samples) check.peak = std::max(check.peak, std::abs(s));

  if (check.seconds < 0.9 * expected_seconds) {
    char buf[96];
    std::snprintf(buf, sizeof(buf), "duration %.2fs below 0.9 x %.2fs", check.seconds,
                  expected_seconds);
    check.reason = buf;
    return check;
  }
  if (check.peak <= silence_threshold) {
    char buf[96];
    std::snprintf(buf, sizeof(buf), "peak %.6f at or below silence threshold %.6f", check.peak,
                  silence_threshold);
    check.reason = buf;
    return check;
  }
  check.valid = true;
  return check;
}

}  // namespace sonalign::sonic
