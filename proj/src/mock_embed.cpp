#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <vector>

#include "sonalign/dataset.hpp"
#include "sonalign/errors.hpp"
#include "sonalign/rng.hpp"

// Deterministic stand-ins for pretrained embedders, used when no precomputed
// embeddings are supplied. Both are total over arbitrary inputs and emit unit
// vectors of width 768.

namespace sonalign::data {

namespace {

constexpr int kFrameSize = 1024;
constexpr int kHopSize = 512;
constexpr int kBands = 96;
constexpr int kStatsPerBand = 8;
constexpr int kTargetRate = 16000;
static_assert(kBands * kStatsPerBand == kMockDim);

std::vector<double> unit_sentinel() {
  std::vector<double> v(kMockDim, 0.0);
  v[0] = 1.0;
  return v;
}

void l2_normalize(std::vector<double>& v) {
  double ss = 0.0;
  for (double x : v) ss += x * x;
  if (ss == 0.0) {
    v = unit_sentinel();
    return;
  }
  const double inv = 1.0 / std::sqrt(ss);
  for (double& x : v) x *= inv;
}

uint64_t fnv1a64(const unsigned char* p, size_t n) {
  uint64_t h = 1469598103934665603ULL;
  for (size_t i = 0; i < n; ++i) {
    h ^= p[i];
    h *= 1099511628211ULL;
  }
  return h;
}

// In-place iterative radix-2 FFT; size must be a power of two.
void fft(std::vector<std::complex<double>>& a) {
  const size_t n = a.size();
  for (size_t i = 1, j = 0; i < n; ++i) {
    size_t bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(a[i], a[j]);
  }
  for (size_t len = 2; len <= n; len <<= 1) {
    const double ang = -2.0 * M_PI / static_cast<double>(len);
    const std::complex<double> wl(std::cos(ang), std::sin(ang));
    for (size_t i = 0; i < n; i += len) {
      std::complex<double> w(1.0);
      for (size_t k = 0; k < len / 2; ++k) {
        const std::complex<double> u = a[i + k];
        const std::complex<double> v = a[i + k + len / 2] * w;
        a[i + k] = u + v;
        a[i + k + len / 2] = u - v;
        w *= wl;
      }
    }
  }
}

std::vector<double> resample_linear(const std::vector<double>& in, int from_rate, int to_rate) {
  if (from_rate == to_rate) return in;
  const double ratio = static_cast<double>(from_rate) / to_rate;
  const size_t out_len =
      std::max<size_t>(1, static_cast<size_t>(std::llround(in.size() / ratio)));
  std::vector<double> out(out_len);
  for (size_t i = 0; i < out_len; ++i) {
    const double t = i * ratio;
    const size_t i0 = std::min(static_cast<size_t>(t), in.size() - 1);
    const size_t i1 = std::min(i0 + 1, in.size() - 1);
    const double frac = t - static_cast<double>(i0);
    out[i] = in[i0] * (1.0 - frac) + in[i1] * frac;
  }
  return out;
}

double quantile(const std::vector<double>& sorted, double q) {
  if (sorted.size() == 1) return sorted[0];
  const double pos = q * static_cast<double>(sorted.size() - 1);
  const size_t i = static_cast<size_t>(pos);
  const double frac = pos - static_cast<double>(i);
  if (i + 1 >= sorted.size()) return sorted.back();
  return sorted[i] * (1.0 - frac) + sorted[i + 1] * frac;
}

}  // namespace

std::vector<double> mock_code_embed(const std::string& text) {
  std::vector<double> v(kMockDim, 0.0);
  if (text.size() >= 3) {
    const unsigned char* p = reinterpret_cast<const unsigned char*>(text.data());
    for (size_t i = 0; i + 3 <= text.size(); ++i) {
      const uint64_t h = mix64(fnv1a64(p + i, 3));
      const double sign = (h >> 63) ? -1.0 : 1.0;
      v[h % kMockDim] += sign;
    }
  }
  l2_normalize(v);  // the trigram-free text falls through to the e0 sentinel
  return v;
}

std::vector<double> mock_audio_embed(const std::vector<double>& samples, int sample_rate) {
  if (sample_rate <= 0) throw ConfigError("mock_audio_embed: sample rate must be > 0");
  if (samples.empty()) throw DegenerateInputError("mock_audio_embed: empty signal");

  std::vector<double> pcm = resample_linear(samples, sample_rate, kTargetRate);
  double peak = 0.0;
  for (double s : pcm) peak = std::max(peak, std::abs(s));
  if (peak == 0.0) return unit_sentinel();  // digital silence

  if (pcm.size() < kFrameSize) pcm.resize(kFrameSize, 0.0);
  const size_t num_frames = 1 + (pcm.size() - kFrameSize) / kHopSize;

  // periodic Hann window
  std::vector<double> window(kFrameSize);
  for (int i = 0; i < kFrameSize; ++i) {
    window[i] = 0.5 - 0.5 * std::cos(2.0 * M_PI * i / kFrameSize);
  }

  constexpr int kBins = kFrameSize / 2 + 1;
  // log band energies, band-major: band_log[b][frame]
  std::vector<std::vector<double>> band_log(kBands, std::vector<double>(num_frames));
  std::vector<std::complex<double>> buf(kFrameSize);
  for (size_t f = 0; f < num_frames; ++f) {
    const size_t start = f * kHopSize;
    for (int i = 0; i < kFrameSize; ++i) {
      buf[i] = std::complex<double>(pcm[start + i] * window[i], 0.0);
    }
    fft(buf);
    for (int b = 0; b < kBands; ++b) {
      const int lo = b * kBins / kBands;
      const int hi = (b + 1) * kBins / kBands;
      double energy = 0.0;
      for (int k = lo; k < hi; ++k) energy += std::norm(buf[k]);
      band_log[b][f] = std::log(energy + 1e-12);
    }
  }

  std::vector<double> v(kMockDim);
  std::vector<double> sorted(num_frames);
  for (int b = 0; b < kBands; ++b) {
    const std::vector<double>& x = band_log[b];
    double mean = 0.0;
    for (double e : x) mean += e;
    mean /= static_cast<double>(num_frames);
    double var = 0.0;
    for (double e : x) var += (e - mean) * (e - mean);
    var /= static_cast<double>(num_frames);
    sorted = x;
    std::sort(sorted.begin(), sorted.end());
    // mean absolute first difference and its spread capture temporal movement
    double dmean = 0.0, dvar = 0.0;
    if (num_frames > 1) {
      std::vector<double> diffs(num_frames - 1);
      for (size_t f = 1; f < num_frames; ++f) diffs[f - 1] = std::abs(x[f] - x[f - 1]);
      for (double d : diffs) dmean += d;
      dmean /= static_cast<double>(diffs.size());
      for (double d : diffs) dvar += (d - dmean) * (d - dmean);
      dvar /= static_cast<double>(diffs.size());
    }
    double* out = v.data() + b * kStatsPerBand;
    out[0] = mean;
    out[1] = std::sqrt(var);
    out[2] = sorted.front();
    out[3] = sorted.back();
    out[4] = quantile(sorted, 0.25);
    out[5] = quantile(sorted, 0.75);
    out[6] = dmean;
    out[7] = std::sqrt(dvar);
  }
  l2_normalize(v);
  return v;
}

}  // namespace sonalign::data
