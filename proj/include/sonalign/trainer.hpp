#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "sonalign/dataset.hpp"
#include "sonalign/mlp.hpp"

namespace sonalign::trainer {

enum class EvalSplit { kTrain, kVal, kTest };

struct TrainConfig {
  int d_hidden = 128;
  int d_out = 64;
  int num_layers = 3;
  double temperature = 0.07;
  bool symmetric = false;
  double lr = 1e-3;
  int batch_size = 256;
  int epochs = 100;
  uint64_t seed = 0;
  data::SplitSpec split;  // fractions and the shuffle seed for partitioning
  EvalSplit eval_split = EvalSplit::kTest;
  double cca_ridge = 1e-6;

  void validate() const;
};

struct BaselineMetrics {
  double cka = 0.0;
  double cca = 0.0;
};

struct EvalMetrics {
  double cka = 0.0;
  double cca = 0.0;
  double mean_diag_cosine = 0.0;
  double retrieval_at_1 = 0.0;
};

struct TrainOutcome {
  nn::MlpParams code_head;
  nn::MlpParams audio_head;
  std::vector<double> epoch_loss;  // mean InfoNCE loss per epoch
};

// Metrics straight on the raw embedding matrices; widths may differ.
BaselineMetrics baseline_metrics(const data::Dataset& eval_ds, double ridge = 1e-6);

// Contrastive training of both projection heads: per epoch a seeded shuffle,
// fixed-size batches (ragged tail dropped), train-mode forwards, InfoNCE loss
// and its exact gradient chained through the cosine similarity, Adam updates.
// Deterministic per seed.
TrainOutcome train(const data::Dataset& train_ds, const TrainConfig& cfg);

// Eval-mode projection of the split through both heads, then linear CKA, mean
// CCA, mean diagonal cosine, and retrieval-at-1 (fraction of rows whose own
// pair is the nearest audio row by cosine).
EvalMetrics evaluate(const nn::MlpParams& code_head, const nn::MlpParams& audio_head,
                     const data::Dataset& eval_ds, double ridge = 1e-6);

struct RunArtifacts {
  TrainConfig config;
  BaselineMetrics baseline;
  EvalMetrics metrics;
  std::vector<double> epoch_loss;
  nn::MlpParams code_head;
  nn::MlpParams audio_head;
};

// split -> baseline on the eval split -> train -> evaluate.
RunArtifacts run_training(const data::Dataset& full, const TrainConfig& cfg);

struct SweepGrid {
  std::vector<int> d_hidden{128, 256};
  std::vector<int> d_out{64, 128};
  std::vector<int> num_layers{1, 3, 5};
  std::vector<double> lr{1e-3, 1e-4};
  int seeds_per_config = 3;
  uint64_t master_seed = 0;
  TrainConfig base;  // epochs, batch size, temperature, split fractions

  void validate() const;  // the grid must stay at 24 configurations
};

struct RunResult {
  int config_id = 0;  // 0 marks the pre-alignment baseline row
  int d_hidden = 0, d_out = 0, num_layers = 0;
  double lr = 0.0;
  std::vector<double> cka_runs, cca_runs;
  double cka_mean = 0.0, cka_std = 0.0;
  double cca_mean = 0.0, cca_std = 0.0;
  std::string error;  // per-row failure note; empty on success
};

struct SweepReport {
  std::vector<RunResult> rows;  // baseline first, then configs 1..24
};

// Every configuration x seed, sequentially and deterministically; per-seed
// splits are shared across configurations so comparisons are paired. Failures
// are recorded per row and the sweep continues.
SweepReport sweep(const data::Dataset& full, const SweepGrid& grid);

std::string sweep_csv(const SweepReport& report);
std::string sweep_table(const SweepReport& report);  // marks best and second-best per metric

}  // namespace sonalign::trainer
