#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <thread>

#include <netinet/in.h>
#include <sys/socket.h>
#include <unistd.h>

#include <doctest.h>

#include "sonalign/errors.hpp"
#include "sonalign/osc.hpp"
#include "sonalign/soniclink.hpp"
#include "sonalign/wav.hpp"

using namespace sonalign;
using namespace sonalign::sonic;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  explicit TempDir(const char* name) : path(fs::temp_directory_path() / name) {
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string file(const char* name) const { return (path / name).string(); }
};

std::vector<uint8_t> slurp_bytes(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  return std::vector<uint8_t>((std::istreambuf_iterator<char>(in)),
                              std::istreambuf_iterator<char>());
}

// loopback UDP listener bound to an ephemeral port
struct UdpListener {
  int fd = -1;
  uint16_t port = 0;

  UdpListener() {
    fd = socket(AF_INET, SOCK_DGRAM, 0);
    REQUIRE(fd >= 0);
    sockaddr_in addr{};
    addr.sin_family = AF_INET;
    addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
    addr.sin_port = 0;
    REQUIRE(bind(fd, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) == 0);
    socklen_t len = sizeof(addr);
    REQUIRE(getsockname(fd, reinterpret_cast<sockaddr*>(&addr), &len) == 0);
    port = ntohs(addr.sin_port);
  }
  ~UdpListener() { close(fd); }

  std::vector<uint8_t> receive() {
    std::vector<uint8_t> buf(70000);
    const ssize_t n = recv(fd, buf.data(), buf.size(), 0);
    REQUIRE(n >= 0);
    buf.resize(static_cast<size_t>(n));
    return buf;
  }
};

std::vector<double> sine_wave(double freq, double amplitude, double seconds, int rate) {
  std::vector<double> samples(static_cast<size_t>(seconds * rate));
  for (size_t i = 0; i < samples.size(); ++i) {
    samples[i] = amplitude * std::sin(2.0 * M_PI * freq * i / rate);
  }
  return samples;
}

}  // namespace

TEST_CASE("endpoint parsing") {
  const Endpoint ep = parse_endpoint("192.168.1.5:4557");
  CHECK(ep.host == "192.168.1.5");
  CHECK(ep.port == 4557);
  CHECK_THROWS_AS(parse_endpoint("nohost"), ConfigError);
  CHECK_THROWS_AS(parse_endpoint(":123"), ConfigError);
  CHECK_THROWS_AS(parse_endpoint("host:"), ConfigError);
  CHECK_THROWS_AS(parse_endpoint("host:99999"), ConfigError);
}

TEST_CASE("dry run captures the exact packet bytes") {
  TempDir dir("sonalign_dryrun");
  RenderJob job;
  job.program_text = "play 60\nsleep 1\n";
  job.record_seconds = 10.0;
  job.output_wav = dir.file("take.wav");

  const SubmitResult result = submit_program(job, SubmitMode::kDryRun);
  CHECK(result.capture_path == dir.file("take.osc"));

  osc::Message expected;
  expected.address = "/run-code";
  expected.args.emplace_back(job.program_text);
  CHECK(slurp_bytes(result.capture_path) == osc::encode(expected));
  CHECK(result.packet_bytes % 4 == 0);
}

TEST_CASE("live submit delivers the same bytes as the dry-run capture") {
  TempDir dir("sonalign_live");
  UdpListener listener;

  RenderJob job;
  job.program_text = "live_loop :t do\n  play 52\n  sleep 0.5\nend\n";
  job.endpoint = {"127.0.0.1", listener.port};
  job.record_seconds = 0.01;  // keep the post-send wait short
  job.output_wav = dir.file("take.wav");

  const SubmitResult dry = submit_program(job, SubmitMode::kDryRun, "/custom-addr");
  const SubmitResult live = submit_program(job, SubmitMode::kLive, "/custom-addr");
  CHECK(live.packet_bytes == dry.packet_bytes);
  CHECK(listener.receive() == slurp_bytes(dry.capture_path));
}

TEST_CASE("oversize programs fail before anything is sent") {
  TempDir dir("sonalign_oversize");
  RenderJob job;
  job.program_text.assign(70000, 'x');
  job.record_seconds = 1.0;
  job.output_wav = dir.file("big.wav");
  CHECK_THROWS_WITH_AS(submit_program(job, SubmitMode::kDryRun),
                       doctest::Contains("nothing sent"), TransportError);
  CHECK_FALSE(fs::exists(dir.file("big.osc")));
  CHECK_THROWS_AS(submit_program(job, SubmitMode::kLive), TransportError);
}

TEST_CASE("unresolvable endpoints surface as transport errors") {
  RenderJob job;
  job.program_text = "play 60";
  job.endpoint = {"no.such.host.invalid", 4557};
  job.record_seconds = 0.01;
  job.output_wav = "unused.wav";
  CHECK_THROWS_AS(submit_program(job, SubmitMode::kLive), TransportError);
}

TEST_CASE("record_seconds must be positive") {
  RenderJob job;
  job.program_text = "play 60";
  job.record_seconds = 0.0;
  CHECK_THROWS_AS(submit_program(job, SubmitMode::kDryRun), ConfigError);
}

TEST_CASE("recording validation") {
  TempDir dir("sonalign_validate");
  const int rate = 4000;

  wav::write_wav16(dir.file("silence.wav"), std::vector<double>(rate * 10, 0.0), rate);
  const RecordingCheck silent = validate_recording(dir.file("silence.wav"), 10.0);
  CHECK_FALSE(silent.valid);
  CHECK(silent.reason.find("silence threshold") != std::string::npos);

  wav::write_wav16(dir.file("tone.wav"), sine_wave(440, 0.5, 10.0, rate), rate);
  const RecordingCheck tone = validate_recording(dir.file("tone.wav"), 10.0);
  CHECK(tone.valid);
  CHECK(tone.peak == doctest::Approx(0.5).epsilon(1e-3));
  CHECK(tone.seconds == doctest::Approx(10.0).epsilon(1e-6));

  wav::write_wav16(dir.file("short.wav"), sine_wave(440, 0.5, 2.0, rate), rate);
  const RecordingCheck truncated = validate_recording(dir.file("short.wav"), 10.0);
  CHECK_FALSE(truncated.valid);
  CHECK(truncated.reason.find("duration") != std::string::npos);

  std::ofstream(dir.file("junk.wav"), std::ios::binary) << "not a wav";
  const RecordingCheck junk = validate_recording(dir.file("junk.wav"), 10.0);
  CHECK_FALSE(junk.valid);
  CHECK(junk.reason.find("unreadable") != std::string::npos);
}

TEST_CASE("validation is monotone in duration and peak") {
  TempDir dir("sonalign_monotone");
  const int rate = 2000;
  bool was_valid = false;
  for (double seconds : {1.0, 4.0, 8.0, 9.5, 10.0}) {
    wav::write_wav16(dir.file("probe.wav"), sine_wave(330, 0.4, seconds, rate), rate);
    const bool valid = validate_recording(dir.file("probe.wav"), 10.0).valid;
    CHECK((was_valid ? valid : true));  // once valid, longer stays valid
    was_valid = valid;
  }
  CHECK(was_valid);

  was_valid = false;
  for (double peak : {1e-5, 5e-4, 2e-3, 0.1, 0.9}) {
    wav::write_wav16(dir.file("probe.wav"), sine_wave(330, peak, 10.0, rate), rate);
    const bool valid = validate_recording(dir.file("probe.wav"), 10.0).valid;
    CHECK((was_valid ? valid : true));
    was_valid = valid;
  }
  CHECK(was_valid);
}
