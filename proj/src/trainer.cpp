#include "sonalign/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <sstream>

#include "sonalign/contrastive.hpp"
#include "sonalign/errors.hpp"
#include "sonalign/metrics.hpp"
#include "sonalign/rng.hpp"

namespace sonalign::trainer {

namespace {

Mat gather_rows(const Mat& src, const std::vector<size_t>& order, size_t begin, size_t count) {
  Mat out(static_cast<Index>(count), src.cols());
  for (size_t i = 0; i < count; ++i) {
    out.row(static_cast<Index>(i)) = src.row(static_cast<Index>(order[begin + i]));
  }
  return out;
}

// Per-feature standardization fitted on the train split. After training the
// affine map is folded into the first linear layer, so checkpoints stay plain
// MLPs and evaluation needs no side state.
struct Standardizer {
  RowVec mean;
  RowVec inv_std;

  static Standardizer fit(const Mat& x) {
    Standardizer s;
    s.mean = x.colwise().mean();
    const Mat centered = x.rowwise() - s.mean;
    RowVec std_dev = centered.array().square().colwise().mean().sqrt();
    // constant features pass through unscaled
    s.inv_std = (std_dev.array() > 0.0).select(std_dev.array().inverse(), 1.0);
    return s;
  }

  Mat apply(const Mat& x) const {
    Mat out = x.rowwise() - mean;
    out.array().rowwise() *= inv_std.array();
    return out;
  }

  void fold_into_first_layer(nn::MlpParams& params) const {
    nn::Layer& first = params.layers.front();
    first.bias -= (mean.array() * inv_std.array()).matrix() * first.weight.transpose();
    first.weight.array().rowwise() *= inv_std.array();
  }
};

const data::Dataset& pick_split(const data::Splits& splits, EvalSplit which) {
  switch (which) {
    case EvalSplit::kTrain: return splits.train;
    case EvalSplit::kVal: return splits.val;
    default: return splits.test;
  }
}

double sample_std(const std::vector<double>& v, double mean) {
  if (v.size() < 2) return 0.0;
  double ss = 0.0;
  for (double x : v) ss += (x - mean) * (x - mean);
  return std::sqrt(ss / static_cast<double>(v.size() - 1));
}

std::string format_double(const char* fmt, double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), fmt, v);
  return buf;
}

}  // namespace

void TrainConfig::validate() const {
  if (batch_size < 2) throw ConfigError("batch_size must be >= 2");
  if (epochs < 1) throw ConfigError("epochs must be >= 1");
  if (d_out < 1 || d_hidden < 1 || num_layers < 1) {
    throw ConfigError("head dimensions and num_layers must be >= 1");
  }
  if (!(temperature > 0.0)) throw ConfigError("temperature must be > 0");
  if (!(lr > 0.0)) throw ConfigError("lr must be > 0");
  if (cca_ridge < 0.0) throw ConfigError("cca_ridge must be >= 0");
  split.validate();
}

BaselineMetrics baseline_metrics(const data::Dataset& eval_ds, double ridge) {
  if (eval_ds.empty()) throw ConfigError("baseline_metrics: empty split");
  const Mat code = eval_ds.code_matrix();
  const Mat audio = eval_ds.audio_matrix();
  BaselineMetrics out;
  out.cka = metrics::linear_cka(code, audio);
  out.cca = metrics::mean_cca(code, audio, ridge);
  return out;
}

TrainOutcome train(const data::Dataset& train_ds, const TrainConfig& cfg) {
  cfg.validate();
  const size_t n = train_ds.size();
  if (n < static_cast<size_t>(cfg.batch_size)) {
    throw ConfigError("train split of " + std::to_string(n) +
                      " records is smaller than batch_size " + std::to_string(cfg.batch_size));
  }

  nn::MlpConfig code_cfg{train_ds.code_dim(), cfg.d_hidden, cfg.d_out, cfg.num_layers,
                         derive_seed(cfg.seed, 0x10)};
  nn::MlpConfig audio_cfg{train_ds.audio_dim(), cfg.d_hidden, cfg.d_out, cfg.num_layers,
                          derive_seed(cfg.seed, 0x20)};

  TrainOutcome out;
  out.code_head = nn::init_mlp(code_cfg);
  out.audio_head = nn::init_mlp(audio_cfg);
  nn::AdamState code_opt = nn::init_adam(out.code_head);
  nn::AdamState audio_opt = nn::init_adam(out.audio_head);

  const Standardizer code_scaler = Standardizer::fit(train_ds.code_matrix());
  const Standardizer audio_scaler = Standardizer::fit(train_ds.audio_matrix());
  const Mat code_all = code_scaler.apply(train_ds.code_matrix());
  const Mat audio_all = audio_scaler.apply(train_ds.audio_matrix());
  const contrastive::InfoNceConfig loss_cfg{cfg.temperature, cfg.symmetric};

  const size_t batches = n / static_cast<size_t>(cfg.batch_size);  // ragged tail dropped
  std::vector<size_t> order(n);
  std::iota(order.begin(), order.end(), size_t{0});

  out.epoch_loss.reserve(cfg.epochs);
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    Rng shuffle_rng(derive_seed(cfg.seed, 0x30, static_cast<uint64_t>(epoch)));
    shuffle_rng.shuffle(order);

    double epoch_total = 0.0;
    for (size_t b = 0; b < batches; ++b) {
      const size_t at = b * static_cast<size_t>(cfg.batch_size);
      const Mat code_batch = gather_rows(code_all, order, at, cfg.batch_size);
      const Mat audio_batch = gather_rows(audio_all, order, at, cfg.batch_size);

      nn::ForwardCache code_cache, audio_cache;
      const Mat code_proj = nn::forward_train(out.code_head, code_batch, code_cache);
      const Mat audio_proj = nn::forward_train(out.audio_head, audio_batch, audio_cache);

      const Mat sim = contrastive::cosine_sim_matrix(code_proj, audio_proj);
      const double loss = contrastive::infonce_loss(sim, loss_cfg);
      if (!std::isfinite(loss)) {
        throw NumericError("non-finite loss at epoch " + std::to_string(epoch + 1) + ", batch " +
                           std::to_string(b + 1) + ": " + std::to_string(loss));
      }
      epoch_total += loss;

      const Mat d_sim = contrastive::infonce_grad(sim, loss_cfg);
      const contrastive::CosineBackward d_proj =
          contrastive::cosine_sim_backward(code_proj, audio_proj, d_sim);
      const nn::Gradients code_grads = nn::backward(out.code_head, code_cache, d_proj.d_code);
      const nn::Gradients audio_grads = nn::backward(out.audio_head, audio_cache, d_proj.d_audio);
      nn::adam_step(out.code_head, code_grads, code_opt, cfg.lr);
      nn::adam_step(out.audio_head, audio_grads, audio_opt, cfg.lr);
    }
    out.epoch_loss.push_back(epoch_total / static_cast<double>(batches));
  }
  code_scaler.fold_into_first_layer(out.code_head);
  audio_scaler.fold_into_first_layer(out.audio_head);
  return out;
}

EvalMetrics evaluate(const nn::MlpParams& code_head, const nn::MlpParams& audio_head,
                     const data::Dataset& eval_ds, double ridge) {
  if (eval_ds.empty()) throw ConfigError("evaluate: empty split");
  const Mat code_proj = nn::forward_eval(code_head, eval_ds.code_matrix());
  const Mat audio_proj = nn::forward_eval(audio_head, eval_ds.audio_matrix());

  EvalMetrics out;
  out.cka = metrics::linear_cka(code_proj, audio_proj);
  out.cca = metrics::mean_cca(code_proj, audio_proj, ridge);

  const Mat sim = contrastive::cosine_sim_matrix(code_proj, audio_proj);
  out.mean_diag_cosine = sim.diagonal().mean();
  const Index n = sim.rows();
  Index hits = 0;
  for (Index i = 0; i < n; ++i) {
    Index best = 0;
    sim.row(i).maxCoeff(&best);
    if (best == i) ++hits;
  }
  out.retrieval_at_1 = static_cast<double>(hits) / static_cast<double>(n);
  return out;
}

RunArtifacts run_training(const data::Dataset& full, const TrainConfig& cfg) {
  cfg.validate();
  const data::Splits splits = data::split(full, cfg.split);
  const data::Dataset& eval_ds = pick_split(splits, cfg.eval_split);

  RunArtifacts artifacts;
  artifacts.config = cfg;
  artifacts.baseline = baseline_metrics(eval_ds, cfg.cca_ridge);
  TrainOutcome outcome = train(splits.train, cfg);
  artifacts.metrics = evaluate(outcome.code_head, outcome.audio_head, eval_ds, cfg.cca_ridge);
  artifacts.epoch_loss = std::move(outcome.epoch_loss);
  artifacts.code_head = std::move(outcome.code_head);
  artifacts.audio_head = std::move(outcome.audio_head);
  return artifacts;
}

void SweepGrid::validate() const {
  const size_t cells = d_hidden.size() * d_out.size() * num_layers.size() * lr.size();
  if (cells != 24) {
    throw ConfigError("sweep grid must span exactly 24 configurations, got " +
                      std::to_string(cells));
  }
  if (seeds_per_config < 1) throw ConfigError("seeds_per_config must be >= 1");
}

SweepReport sweep(const data::Dataset& full, const SweepGrid& grid) {
  grid.validate();
  const int seeds = grid.seeds_per_config;

  // one split per seed index, shared by the baseline row and every config
  std::vector<data::Splits> splits(seeds);
  std::vector<const data::Dataset*> eval_sets(seeds);
  for (int s = 0; s < seeds; ++s) {
    data::SplitSpec spec = grid.base.split;
    spec.seed = derive_seed(grid.master_seed, 0x5117, static_cast<uint64_t>(s));
    splits[s] = data::split(full, spec);
    eval_sets[s] = &pick_split(splits[s], grid.base.eval_split);
  }

  SweepReport report;
  RunResult baseline;
  baseline.config_id = 0;
  for (int s = 0; s < seeds; ++s) {
    const BaselineMetrics bm = baseline_metrics(*eval_sets[s], grid.base.cca_ridge);
    baseline.cka_runs.push_back(bm.cka);
    baseline.cca_runs.push_back(bm.cca);
  }
  baseline.cka_mean =
      std::accumulate(baseline.cka_runs.begin(), baseline.cka_runs.end(), 0.0) / seeds;
  baseline.cca_mean =
      std::accumulate(baseline.cca_runs.begin(), baseline.cca_runs.end(), 0.0) / seeds;
  baseline.cka_std = sample_std(baseline.cka_runs, baseline.cka_mean);
  baseline.cca_std = sample_std(baseline.cca_runs, baseline.cca_mean);
  report.rows.push_back(std::move(baseline));

  int config_id = 0;
  for (int dh : grid.d_hidden) {
    for (int dout : grid.d_out) {
      for (int layers : grid.num_layers) {
        for (double lr : grid.lr) {
          ++config_id;
          RunResult row;
          row.config_id = config_id;
          row.d_hidden = dh;
          row.d_out = dout;
          row.num_layers = layers;
          row.lr = lr;
          for (int s = 0; s < seeds; ++s) {
            TrainConfig cfg = grid.base;
            cfg.d_hidden = dh;
            cfg.d_out = dout;
            cfg.num_layers = layers;
            cfg.lr = lr;
            cfg.seed = derive_seed(grid.master_seed, static_cast<uint64_t>(config_id),
                                   static_cast<uint64_t>(s));
            try {
              TrainOutcome outcome = train(splits[s].train, cfg);
              const EvalMetrics em =
                  evaluate(outcome.code_head, outcome.audio_head, *eval_sets[s], cfg.cca_ridge);
              row.cka_runs.push_back(em.cka);
              row.cca_runs.push_back(em.cca);
            } catch (const std::exception& e) {
              row.error = std::string("seed ") + std::to_string(s) + ": " + e.what();
            }
          }
          if (!row.cka_runs.empty()) {
            row.cka_mean = std::accumulate(row.cka_runs.begin(), row.cka_runs.end(), 0.0) /
                           static_cast<double>(row.cka_runs.size());
            row.cca_mean = std::accumulate(row.cca_runs.begin(), row.cca_runs.end(), 0.0) /
                           static_cast<double>(row.cca_runs.size());
            row.cka_std = sample_std(row.cka_runs, row.cka_mean);
            row.cca_std = sample_std(row.cca_runs, row.cca_mean);
          }
          report.rows.push_back(std::move(row));
        }
      }
    }
  }
  return report;
}

std::string sweep_csv(const SweepReport& report) {
  std::ostringstream out;
  out << "config,d_hidden,d_out,L,lr,cka_mean,cka_std,cca_mean,cca_std\n";
  for (const RunResult& row : report.rows) {
    if (row.config_id == 0) {
      out << "baseline,,,,";
    } else {
      out << row.config_id << ',' << row.d_hidden << ',' << row.d_out << ',' << row.num_layers
          << ',' << format_double("%g", row.lr);
    }
    if (row.cka_runs.empty()) {
      out << ",nan,nan,nan,nan\n";
      continue;
    }
    out << ',' << format_double("%.6f", row.cka_mean) << ',' << format_double("%.6f", row.cka_std)
        << ',' << format_double("%.6f", row.cca_mean) << ',' << format_double("%.6f", row.cca_std)
        << '\n';
  }
  return out.str();
}

std::string sweep_table(const SweepReport& report) {
  // best and runner-up per metric among config rows, mirroring the usual
  // bold/underline table convention
  int best_cka = -1, second_cka = -1, best_cca = -1, second_cca = -1;
  for (size_t i = 0; i < report.rows.size(); ++i) {
    const RunResult& row = report.rows[i];
    if (row.config_id == 0 || row.cka_runs.empty()) continue;
    const int idx = static_cast<int>(i);
    if (best_cka < 0 || row.cka_mean > report.rows[best_cka].cka_mean) {
      second_cka = best_cka;
      best_cka = idx;
    } else if (second_cka < 0 || row.cka_mean > report.rows[second_cka].cka_mean) {
      second_cka = idx;
    }
    if (best_cca < 0 || row.cca_mean > report.rows[best_cca].cca_mean) {
      second_cca = best_cca;
      best_cca = idx;
    } else if (second_cca < 0 || row.cca_mean > report.rows[second_cca].cca_mean) {
      second_cca = idx;
    }
  }

  auto mark = [](int idx, int best, int second) {
    if (idx == best) return " [1st]";
    if (idx == second) return " [2nd]";
    return "";
  };

  std::ostringstream out;
  char line[256];
  std::snprintf(line, sizeof(line), "%-8s %-8s %-6s %-3s %-8s %-24s %-24s\n", "config", "d_hidden",
                "d_out", "L", "lr", "cka (mean +- std)", "cca (mean +- std)");
  out << line;
  for (size_t i = 0; i < report.rows.size(); ++i) {
    const RunResult& row = report.rows[i];
    std::string id = row.config_id == 0 ? "baseline" : std::to_string(row.config_id);
    std::string dh = row.config_id == 0 ? "--" : std::to_string(row.d_hidden);
    std::string dout = row.config_id == 0 ? "--" : std::to_string(row.d_out);
    std::string layers = row.config_id == 0 ? "--" : std::to_string(row.num_layers);
    std::string lr = row.config_id == 0 ? "--" : format_double("%g", row.lr);
    std::string cka, cca;
    if (row.cka_runs.empty()) {
      cka = "failed: " + row.error;
      cca = "";
    } else {
      cka = format_double("%.3f", row.cka_mean) + " +- " + format_double("%.3f", row.cka_std) +
            mark(static_cast<int>(i), best_cka, second_cka);
      cca = format_double("%.3f", row.cca_mean) + " +- " + format_double("%.3f", row.cca_std) +
            mark(static_cast<int>(i), best_cca, second_cca);
    }
    std::snprintf(line, sizeof(line), "%-8s %-8s %-6s %-3s %-8s %-24s %-24s\n", id.c_str(),
                  dh.c_str(), dout.c_str(), layers.c_str(), lr.c_str(), cka.c_str(), cca.c_str());
    out << line;
  }
  return out.str();
}

}  // namespace sonalign::trainer
