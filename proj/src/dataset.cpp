#include "sonalign/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <cstdlib>

#include <json.hpp>

#include "sonalign/errors.hpp"
#include "sonalign/rng.hpp"

namespace sonalign::data {

using nlohmann::json;

Mat Dataset::code_matrix() const {
  Mat m(static_cast<Index>(records.size()), code_dim());
  for (size_t i = 0; i < records.size(); ++i) {
    for (size_t j = 0; j < records[i].code_embedding.size(); ++j) {
      m(static_cast<Index>(i), static_cast<Index>(j)) = records[i].code_embedding[j];
    }
  }
  return m;
}

Mat Dataset::audio_matrix() const {
  Mat m(static_cast<Index>(records.size()), audio_dim());
  for (size_t i = 0; i < records.size(); ++i) {
    for (size_t j = 0; j < records[i].audio_embedding.size(); ++j) {
      m(static_cast<Index>(i), static_cast<Index>(j)) = records[i].audio_embedding[j];
    }
  }
  return m;
}

namespace {

void validate_record(const PairRecord& rec, size_t code_dim, size_t audio_dim,
                     const std::string& where) {
  if (rec.code_embedding.empty() || rec.audio_embedding.empty()) {
    throw SchemaError(where + ": embeddings must be non-empty");
  }
  if (rec.code_embedding.size() != code_dim) {
    throw SchemaError(where + ": code_embedding width " +
                      std::to_string(rec.code_embedding.size()) + " != " +
                      std::to_string(code_dim));
  }
  if (rec.audio_embedding.size() != audio_dim) {
    throw SchemaError(where + ": audio_embedding width " +
                      std::to_string(rec.audio_embedding.size()) + " != " +
                      std::to_string(audio_dim));
  }
  auto finite = [](const std::vector<double>& v) {
    return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
  };
  if (!finite(rec.code_embedding) || !finite(rec.audio_embedding)) {
    throw SchemaError(where + ": embedding contains non-finite values");
  }
}

PairRecord parse_record(const json& j, const std::string& where) {
  PairRecord rec;
  if (!j.is_object()) throw SchemaError(where + ": line is not an object");
  if (!j.contains("id") || !j["id"].is_string()) {
    throw SchemaError(where + ": missing string field 'id'");
  }
  rec.id = j["id"].get<std::string>();
  if (j.contains("code_text")) {
    if (!j["code_text"].is_string()) throw SchemaError(where + ": 'code_text' must be a string");
    rec.code_text = j["code_text"].get<std::string>();
  }
  for (const char* key : {"code_embedding", "audio_embedding"}) {
    if (!j.contains(key) || !j[key].is_array()) {
      throw SchemaError(where + ": missing array field '" + key + "'");
    }
    std::vector<double>& dst =
        std::string(key) == "code_embedding" ? rec.code_embedding : rec.audio_embedding;
    dst.reserve(j[key].size());
    for (const json& v : j[key]) {
      if (!v.is_number()) throw SchemaError(where + ": '" + key + "' has a non-numeric entry");
      dst.push_back(v.get<double>());
    }
  }
  if (j.contains("meta")) {
    if (!j["meta"].is_object()) throw SchemaError(where + ": 'meta' must be an object");
    for (auto it = j["meta"].begin(); it != j["meta"].end(); ++it) {
      if (!it.value().is_string()) {
        throw SchemaError(where + ": meta value for '" + it.key() + "' must be a string");
      }
      rec.meta[it.key()] = it.value().get<std::string>();
    }
  }
  return rec;
}

json record_to_json(const PairRecord& rec) {
  json j;
  j["id"] = rec.id;
  if (rec.code_text) j["code_text"] = *rec.code_text;
  j["code_embedding"] = rec.code_embedding;
  j["audio_embedding"] = rec.audio_embedding;
  j["meta"] = json::object();
  for (const auto& [k, v] : rec.meta) j["meta"][k] = v;
  return j;
}

bool blank(const std::string& line) {
  return std::all_of(line.begin(), line.end(),
                     [](unsigned char c) { return std::isspace(c); });
}

}  // namespace

void validate_dataset(const Dataset& ds) {
  if (ds.empty()) return;
  const size_t dc = ds.records.front().code_embedding.size();
  const size_t da = ds.records.front().audio_embedding.size();
  for (size_t i = 0; i < ds.records.size(); ++i) {
    validate_record(ds.records[i], dc, da, "record " + std::to_string(i + 1) +
                    " (id '" + ds.records[i].id + "')");
  }
}

Dataset load_records(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open dataset file: " + path);

  Dataset ds;
  std::string line;
  size_t line_no = 0;
  size_t dc = 0, da = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (blank(line)) continue;
    const std::string where = path + ":" + std::to_string(line_no);
    json j;
    try {
      j = json::parse(line);
    } catch (const json::parse_error& e) {
      throw ParseError(where + ": " + e.what());
    }
    PairRecord rec = parse_record(j, where);
    if (ds.records.empty()) {
      dc = rec.code_embedding.size();
      da = rec.audio_embedding.size();
      if (dc == 0 || da == 0) throw SchemaError(where + ": embeddings must be non-empty");
    }
    validate_record(rec, dc, da, where);
    ds.records.push_back(std::move(rec));
  }
  return ds;
}

void save_records(const Dataset& ds, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open dataset file for writing: " + path);
  for (const PairRecord& rec : ds.records) {
    out << record_to_json(rec).dump() << '\n';
  }
  if (!out) throw IoError("write failure on dataset file: " + path);
}

void SplitSpec::validate() const {
  if (train < 0 || val < 0 || test < 0) {
    throw ConfigError("split fractions must be >= 0");
  }
  if (std::abs(train + val + test - 1.0) > 1e-9) {
    throw ConfigError("split fractions must sum to 1");
  }
}

Splits split(const Dataset& ds, const SplitSpec& spec) {
  spec.validate();
  if (ds.empty()) throw ConfigError("cannot split an empty dataset");

  const size_t n = ds.size();
  std::vector<size_t> order(n);
  std::iota(order.begin(), order.end(), size_t{0});
  Rng rng(spec.seed);
  rng.shuffle(order);

  // largest-remainder apportionment of n across the three fractions
  const double fracs[3] = {spec.train, spec.val, spec.test};
  size_t counts[3];
  double remainders[3];
  size_t assigned = 0;
  for (int i = 0; i < 3; ++i) {
    const double exact = fracs[i] * static_cast<double>(n);
    counts[i] = static_cast<size_t>(std::floor(exact));
    remainders[i] = exact - std::floor(exact);
    assigned += counts[i];
  }
  int by_remainder[3] = {0, 1, 2};
  std::stable_sort(std::begin(by_remainder), std::end(by_remainder),
                   [&](int a, int b) { return remainders[a] > remainders[b]; });
  for (size_t leftover = n - assigned, i = 0; i < leftover; ++i) {
    counts[by_remainder[i % 3]] += 1;
  }

  Splits out;
  Dataset* parts[3] = {&out.train, &out.val, &out.test};
  size_t cursor = 0;
  for (int i = 0; i < 3; ++i) {
    parts[i]->records.reserve(counts[i]);
    for (size_t k = 0; k < counts[i]; ++k) {
      parts[i]->records.push_back(ds.records[order[cursor++]]);
    }
  }
  return out;
}

void SynthSpec::validate() const {
  if (n < 4) throw ConfigError("synth spec: n must be >= 4");
  if (latent_dim < 1) throw ConfigError("synth spec: latent_dim must be >= 1");
  if (latent_dim > std::min(code_dim, audio_dim)) {
    throw ConfigError("synth spec: latent_dim must be <= min(code_dim, audio_dim)");
  }
  if (noise < 0) throw ConfigError("synth spec: noise must be >= 0");
  if (identity_projections && (latent_dim != code_dim || latent_dim != audio_dim)) {
    throw ConfigError("synth spec: identity projections need equal dims");
  }
}

SynthResult synth_pairs_full(const SynthSpec& spec) {
  spec.validate();
  Rng latent_rng(derive_seed(spec.seed, 1));
  Rng proj_rng(derive_seed(spec.seed, 2));
  Rng noise_rng(derive_seed(spec.seed, 3));
  Rng scramble_rng(derive_seed(spec.seed, 4));

  const Index n = spec.n, dz = spec.latent_dim, dc = spec.code_dim, da = spec.audio_dim;
  const double proj_scale = 1.0 / std::sqrt(static_cast<double>(dz));

  Mat pc, pa;
  if (spec.identity_projections) {
    pc = Mat::Identity(dc, dz);
    pa = Mat::Identity(da, dz);
  } else {
    pc = gaussian_matrix(dc, dz, proj_rng) * proj_scale;
    pa = gaussian_matrix(da, dz, proj_rng) * proj_scale;
  }

  Mat z = gaussian_matrix(n, dz, latent_rng);
  Mat code = z * pc.transpose();
  Mat audio = z * pa.transpose();
  if (!spec.linear) {
    audio = audio.unaryExpr([](double v) { return std::tanh(v); });
  }
  if (spec.scramble && spec.noise > 0) {
    // sink the code signal to the noise floor before scrambling; together with
    // the anisotropic scaling below this is what pushes the raw cross-modal
    // linear CKA low while the pairing stays recoverable by a nonlinear head
    code *= spec.noise;
  }
  if (spec.noise > 0) {
    for (Index i = 0; i < n; ++i) {
      for (Index j = 0; j < dc; ++j) code(i, j) += spec.noise * noise_rng.normal();
      for (Index j = 0; j < da; ++j) audio(i, j) += spec.noise * noise_rng.normal();
    }
  }
  if (spec.scramble) {
    // per-dimension scales spread over three decades each way, then a
    // dimension permutation
    std::vector<double> scales(dc);
    for (Index j = 0; j < dc; ++j) {
      scales[j] = std::pow(10.0, scramble_rng.uniform(-3.0, 3.0));
    }
    std::vector<size_t> perm(dc);
    std::iota(perm.begin(), perm.end(), size_t{0});
    scramble_rng.shuffle(perm);
    Mat scrambled(n, dc);
    for (Index j = 0; j < dc; ++j) {
      scrambled.col(static_cast<Index>(perm[j])) = code.col(j) * scales[j];
    }
    code = std::move(scrambled);
  }

  SynthResult out;
  out.latents = std::move(z);
  out.dataset.records.resize(n);
  char id_buf[32];
  for (Index i = 0; i < n; ++i) {
    PairRecord& rec = out.dataset.records[i];
    std::snprintf(id_buf, sizeof(id_buf), "synth-%06lld", static_cast<long long>(i));
    rec.id = id_buf;
    rec.code_embedding.assign(code.row(i).begin(), code.row(i).end());
    rec.audio_embedding.assign(audio.row(i).begin(), audio.row(i).end());
    rec.meta["source"] = "synth";
  }
  validate_dataset(out.dataset);
  return out;
}

Dataset synth_pairs(const SynthSpec& spec) { return synth_pairs_full(spec).dataset; }

}  // namespace sonalign::data
