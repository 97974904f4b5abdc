#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "sonalign/matrix.hpp"

namespace sonalign::data {

// One paired sample: identifiers, optional source text, one embedding per
// modality, and free-form provenance tags.
struct PairRecord {
  std::string id;
  std::optional<std::string> code_text;
  std::vector<double> code_embedding;
  std::vector<double> audio_embedding;
  std::map<std::string, std::string> meta;
};

struct Dataset {
  std::vector<PairRecord> records;

  size_t size() const { return records.size(); }
  bool empty() const { return records.empty(); }
  Index code_dim() const {
    return records.empty() ? 0 : static_cast<Index>(records.front().code_embedding.size());
  }
  Index audio_dim() const {
    return records.empty() ? 0 : static_cast<Index>(records.front().audio_embedding.size());
  }
  Mat code_matrix() const;
  Mat audio_matrix() const;
};

// Enforces the record invariants: non-empty finite embeddings with uniform
// widths per modality. Throws SchemaError naming the offending record.
void validate_dataset(const Dataset& ds);

// Line-delimited records, one JSON object per line with fields `id`,
// optional `code_text`, `code_embedding`, `audio_embedding`, `meta`.
Dataset load_records(const std::string& path);
void save_records(const Dataset& ds, const std::string& path);

struct SplitSpec {
  double train = 0.8;
  double val = 0.1;
  double test = 0.1;
  uint64_t seed = 0;

  void validate() const;  // fractions >= 0 summing to 1
};

struct Splits {
  Dataset train, val, test;
};

// Seeded shuffle then contiguous partition with largest-remainder rounding.
Splits split(const Dataset& ds, const SplitSpec& spec);

// Ground-truth generator: a shared latent z ~ N(0, I) drives both modalities,
// code linearly and audio through a tanh, plus isotropic noise. `scramble`
// applies a fixed anisotropic scaling and permutation to the code side so the
// raw cross-modal linear CKA starts low.
struct SynthSpec {
  int n = 0;
  int latent_dim = 0;
  int code_dim = 0;
  int audio_dim = 0;
  double noise = 0.0;
  bool scramble = false;
  uint64_t seed = 0;
  bool linear = false;                // skip the tanh on the audio side
  bool identity_projections = false;  // requires latent_dim == code_dim == audio_dim

  void validate() const;
};

struct SynthResult {
  Dataset dataset;
  Mat latents;  // n x latent_dim, exposed for generator diagnostics
};

SynthResult synth_pairs_full(const SynthSpec& spec);
Dataset synth_pairs(const SynthSpec& spec);

constexpr int kMockDim = 768;

// Signed feature hash of byte trigrams over 768 buckets, L2-normalized.
// Total and deterministic; text without trigrams maps to the unit vector e0.
std::vector<double> mock_code_embed(const std::string& text);

// Band-energy summary features: resample to 16 kHz, 1024-sample Hann frames
// with hop 512, 96 log-energy bands, 8 summary statistics per band
// (96 x 8 = 768), L2-normalized. Digital silence maps to the unit vector e0.
std::vector<double> mock_audio_embed(const std::vector<double>& samples, int sample_rate);

}  // namespace sonalign::data
