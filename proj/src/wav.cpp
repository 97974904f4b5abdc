#include "sonalign/wav.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>

#include "sonalign/errors.hpp"

namespace sonalign::wav {

namespace {

struct FmtChunk {
  uint16_t format = 0;  // 1 = PCM, 3 = IEEE float (0xFFFE resolved via extension)
  uint16_t channels = 0;
  uint32_t sample_rate = 0;
  uint16_t bits_per_sample = 0;
};

uint16_t u16le(const uint8_t* p) { return static_cast<uint16_t>(p[0] | (p[1] << 8)); }
uint32_t u32le(const uint8_t* p) {
  return static_cast<uint32_t>(p[0]) | (static_cast<uint32_t>(p[1]) << 8) |
         (static_cast<uint32_t>(p[2]) << 16) | (static_cast<uint32_t>(p[3]) << 24);
}

}  // namespace

Audio read_wav(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open wav file: " + path);
  std::vector<uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                             std::istreambuf_iterator<char>());

  auto fail = [&](const std::string& why) -> void {
    throw ParseError("wav " + path + ": " + why);
  };

  if (bytes.size() < 12 || std::memcmp(bytes.data(), "RIFF", 4) != 0 ||
      std::memcmp(bytes.data() + 8, "WAVE", 4) != 0) {
    fail("not a RIFF/WAVE file");
  }

  FmtChunk fmt;
  bool have_fmt = false;
  const uint8_t* data = nullptr;
  size_t data_size = 0;

  size_t pos = 12;
  while (pos + 8 <= bytes.size()) {
    const char* id = reinterpret_cast<const char*>(bytes.data() + pos);
    const uint32_t chunk_size = u32le(bytes.data() + pos + 4);
    const size_t body = pos + 8;
    if (body + chunk_size > bytes.size()) {
      fail("chunk '" + std::string(id, 4) + "' overruns file");
    }
    if (std::memcmp(id, "fmt ", 4) == 0) {
      if (chunk_size < 16) fail("fmt chunk too small");
      fmt.format = u16le(bytes.data() + body);
      fmt.channels = u16le(bytes.data() + body + 2);
      fmt.sample_rate = u32le(bytes.data() + body + 4);
      fmt.bits_per_sample = u16le(bytes.data() + body + 14);
      if (fmt.format == 0xFFFE && chunk_size >= 40) {
        fmt.format = u16le(bytes.data() + body + 24);  // sub-format GUID leads with the tag
      }
      have_fmt = true;
    } else if (std::memcmp(id, "data", 4) == 0) {
      data = bytes.data() + body;
      data_size = chunk_size;
    }
    pos = body + chunk_size + (chunk_size & 1);  // chunks are word-aligned
  }

  if (!have_fmt) fail("missing fmt chunk");
  if (data == nullptr) fail("missing data chunk");
  if (fmt.channels == 0) fail("zero channels");
  if (fmt.sample_rate == 0) fail("zero sample rate");

  Audio audio;
  audio.sample_rate = static_cast<int>(fmt.sample_rate);

  if (fmt.format == 1 && fmt.bits_per_sample == 16) {
    const size_t frame_bytes = 2u * fmt.channels;
    const size_t frames = data_size / frame_bytes;
    audio.samples.resize(frames);
    for (size_t i = 0; i < frames; ++i) {
      const int16_t s = static_cast<int16_t>(u16le(data + i * frame_bytes));
      audio.samples[i] = static_cast<double>(s) / 32768.0;
    }
  } else if (fmt.format == 3 && fmt.bits_per_sample == 32) {
    const size_t frame_bytes = 4u * fmt.channels;
    const size_t frames = data_size / frame_bytes;
    audio.samples.resize(frames);
    for (size_t i = 0; i < frames; ++i) {
      audio.samples[i] = static_cast<double>(std::bit_cast<float>(u32le(data + i * frame_bytes)));
    }
  } else {
    fail("unsupported format: tag " + std::to_string(fmt.format) + ", " +
         std::to_string(fmt.bits_per_sample) + " bits");
  }
  return audio;
}

void write_wav16(const std::string& path, const std::vector<double>& samples, int sample_rate) {
  if (sample_rate <= 0) throw ConfigError("write_wav16: sample rate must be > 0");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open wav file for writing: " + path);

  auto u16 = [&](uint16_t v) {
    char b[2] = {static_cast<char>(v & 0xFF), static_cast<char>(v >> 8)};
    out.write(b, 2);
  };
  auto u32 = [&](uint32_t v) {
    char b[4] = {static_cast<char>(v & 0xFF), static_cast<char>((v >> 8) & 0xFF),
                 static_cast<char>((v >> 16) & 0xFF), static_cast<char>((v >> 24) & 0xFF)};
    out.write(b, 4);
  };

  const uint32_t data_bytes = static_cast<uint32_t>(samples.size() * 2);
  out.write("RIFF", 4);
  u32(36 + data_bytes);
  out.write("WAVE", 4);
  out.write("fmt ", 4);
  u32(16);
  u16(1);  // PCM
  u16(1);  // mono
  u32(static_cast<uint32_t>(sample_rate));
  u32(static_cast<uint32_t>(sample_rate) * 2);
  u16(2);
  u16(16);
  out.write("data", 4);
  u32(data_bytes);
  for (double s : samples) {
    const double clipped = std::clamp(s, -1.0, 1.0);
    u16(static_cast<uint16_t>(static_cast<int16_t>(std::lrint(clipped * 32767.0))));
  }
  if (!out) throw IoError("write failure on wav file: " + path);
}

}  // namespace sonalign::wav
