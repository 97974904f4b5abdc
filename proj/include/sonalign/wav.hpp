#pragma once

#include <string>
#include <vector>

namespace sonalign::wav {

struct Audio {
  std::vector<double> samples;  // first channel, full scale [-1, 1]
  int sample_rate = 0;

  double seconds() const {
    return sample_rate > 0 ? static_cast<double>(samples.size()) / sample_rate : 0.0;
  }
};

// PCM WAV reader: 16-bit integer or 32-bit float, mono or first channel of
// multi-channel files. Throws ParseError on anything it cannot interpret.
Audio read_wav(const std::string& path);

// 16-bit PCM mono writer; samples are clipped to [-1, 1].
void write_wav16(const std::string& path, const std::vector<double>& samples, int sample_rate);

}  // namespace sonalign::wav
