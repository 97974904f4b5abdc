// Acceptance suite: every criterion prints one PASS/FAIL line with its
// runtime; the process exits non-zero when any criterion fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <numeric>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "sonalign/cli.hpp"
#include "sonalign/contrastive.hpp"
#include "sonalign/dataset.hpp"
#include "sonalign/metrics.hpp"
#include "sonalign/mlp.hpp"
#include "sonalign/osc.hpp"
#include "sonalign/rng.hpp"
#include "sonalign/soniclink.hpp"
#include "sonalign/templater.hpp"
#include "sonalign/trainer.hpp"

using namespace sonalign;
namespace fs = std::filesystem;

namespace {

struct Harness {
  int failures = 0;

  void run(int id, const std::string& name, double budget_seconds,
           const std::function<void()>& body) {
    const auto start = std::chrono::steady_clock::now();
    std::string error;
    try {
      body();
    } catch (const std::exception& e) {
      error = e.what();
    }
    const double elapsed =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    const bool in_budget = elapsed < budget_seconds;
    const bool pass = error.empty() && in_budget;
    if (!pass) ++failures;
    std::printf("%s  criterion %d: %s (%.1fs of %.0fs budget)\n", pass ? "PASS" : "FAIL", id,
                name.c_str(), elapsed, budget_seconds);
    if (!error.empty()) std::printf("      %s\n", error.c_str());
    if (error.empty() && !in_budget) std::printf("      over time budget\n");
    std::fflush(stdout);
  }
};

void require(bool condition, const std::string& what) {
  if (!condition) throw std::runtime_error(what);
}

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), f, v);
  return buf;
}

struct TempDir {
  fs::path path;
  explicit TempDir(const char* name) : path(fs::temp_directory_path() / name) {
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

Mat random_matrix(Index rows, Index cols, uint64_t seed) {
  Rng rng(seed);
  return gaussian_matrix(rows, cols, rng);
}

double rel_error(double a, double b) {
  return std::abs(a - b) / std::max({1.0, std::abs(a), std::abs(b)});
}

// ---------------------------------------------------------------------------
// criterion 1: full-pipeline gradient check

double pipeline_loss(nn::MlpParams code_head, nn::MlpParams audio_head, const Mat& code_in,
                     const Mat& audio_in, const contrastive::InfoNceConfig& cfg) {
  nn::ForwardCache cc, ca;
  const Mat c = nn::forward_train(code_head, code_in, cc);
  const Mat a = nn::forward_train(audio_head, audio_in, ca);
  return contrastive::infonce_loss(contrastive::cosine_sim_matrix(c, a), cfg);
}

void criterion_gradients() {
  Rng pick(20240810);
  double worst = 0.0;
  for (int instance = 0; instance < 20; ++instance) {
    nn::MlpConfig code_cfg, audio_cfg;
    code_cfg.d_in = 1 + static_cast<Index>(pick.below(8));
    audio_cfg.d_in = 1 + static_cast<Index>(pick.below(8));
    code_cfg.d_hidden = audio_cfg.d_hidden = 1 + static_cast<Index>(pick.below(8));
    code_cfg.d_out = audio_cfg.d_out = 1 + static_cast<Index>(pick.below(8));
    code_cfg.num_layers = audio_cfg.num_layers = 1 + static_cast<int>(pick.below(3));
    code_cfg.seed = pick.next_u64();
    audio_cfg.seed = pick.next_u64();
    const Index batch = 2 + static_cast<Index>(pick.below(7));
    const contrastive::InfoNceConfig loss_cfg{0.07 + pick.uniform(0, 0.5), pick.below(2) == 0};

    Rng data_rng(pick.next_u64());
    const Mat code_in = gaussian_matrix(batch, code_cfg.d_in, data_rng);
    const Mat audio_in = gaussian_matrix(batch, audio_cfg.d_in, data_rng);

    nn::MlpParams code_head = nn::init_mlp(code_cfg);
    nn::MlpParams audio_head = nn::init_mlp(audio_cfg);

    nn::ForwardCache cc, ca;
    nn::MlpParams code_fwd = code_head, audio_fwd = audio_head;
    const Mat c = nn::forward_train(code_fwd, code_in, cc);
    const Mat a = nn::forward_train(audio_fwd, audio_in, ca);
    const Mat sim = contrastive::cosine_sim_matrix(c, a);
    const Mat d_sim = contrastive::infonce_grad(sim, loss_cfg);
    const contrastive::CosineBackward d_proj = contrastive::cosine_sim_backward(c, a, d_sim);
    const nn::Gradients code_grads = nn::backward(code_fwd, cc, d_proj.d_code);
    const nn::Gradients audio_grads = nn::backward(audio_fwd, ca, d_proj.d_audio);

    const double h = 1e-5;
    auto sweep_head = [&](const nn::MlpParams& head, const nn::Gradients& grads, bool is_code) {
      for (size_t l = 0; l < head.layers.size(); ++l) {
        auto probe = [&](auto access, const auto& analytic) {
          for (Index i = 0; i < analytic.rows(); ++i) {
            for (Index j = 0; j < analytic.cols(); ++j) {
              nn::MlpParams plus = head, minus = head;
              access(plus.layers[l])(i, j) += h;
              access(minus.layers[l])(i, j) -= h;
              const double fp =
                  is_code ? pipeline_loss(plus, audio_head, code_in, audio_in, loss_cfg)
                          : pipeline_loss(code_head, plus, code_in, audio_in, loss_cfg);
              const double fm =
                  is_code ? pipeline_loss(minus, audio_head, code_in, audio_in, loss_cfg)
                          : pipeline_loss(code_head, minus, code_in, audio_in, loss_cfg);
              worst = std::max(worst, rel_error(analytic(i, j), (fp - fm) / (2 * h)));
            }
          }
        };
        probe([](nn::Layer& layer) -> Mat& { return layer.weight; }, grads.layers[l].d_weight);
        probe([](nn::Layer& layer) -> RowVec& { return layer.bias; }, grads.layers[l].d_bias);
        if (head.layers[l].has_norm) {
          probe([](nn::Layer& layer) -> RowVec& { return layer.gamma; }, grads.layers[l].d_gamma);
          probe([](nn::Layer& layer) -> RowVec& { return layer.beta; }, grads.layers[l].d_beta);
        }
      }
    };
    sweep_head(code_head, code_grads, true);
    sweep_head(audio_head, audio_grads, false);
  }
  require(worst < 1e-5, "max relative gradient error " + fmt("%.3g", worst) + " >= 1e-5");
}

// ---------------------------------------------------------------------------
// criterion 2: metric oracles

double pearson_oracle(const std::vector<double>& x, const std::vector<double>& y) {
  const size_t n = x.size();
  double mx = 0, my = 0;
  for (size_t i = 0; i < n; ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxy = 0, sxx = 0, syy = 0;
  for (size_t i = 0; i < n; ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  return sxy / std::sqrt(sxx * syy);
}

std::vector<double> ranks_oracle(const std::vector<double>& v) {
  std::vector<double> ranks(v.size());
  for (size_t i = 0; i < v.size(); ++i) {
    size_t below = 0, equal = 0;
    for (size_t j = 0; j < v.size(); ++j) {
      if (v[j] < v[i]) ++below;
      if (v[j] == v[i]) ++equal;
    }
    ranks[i] = below + 0.5 * (equal + 1);
  }
  return ranks;
}

void criterion_metric_oracles() {
  Rng rng(777);
  for (int trial = 0; trial < 100; ++trial) {
    const size_t n = 4 + rng.below(60);
    std::vector<double> x(n), y(n);
    for (size_t i = 0; i < n; ++i) {
      // half the trials use quantized values so ties are frequent
      x[i] = trial % 2 == 0 ? std::floor(rng.uniform(-4, 4)) : rng.normal();
      y[i] = trial % 2 == 0 ? std::floor(rng.uniform(-4, 4)) : rng.normal();
    }
    x[0] += 1.0;  // guards against all-equal draws
    y[0] += 1.0;
    require(std::abs(metrics::pearson(x, y) - pearson_oracle(x, y)) < 1e-12,
            "pearson oracle mismatch");
    require(std::abs(metrics::spearman(x, y) -
                     pearson_oracle(ranks_oracle(x), ranks_oracle(y))) < 1e-12,
            "spearman oracle mismatch");
  }

  const Mat x = random_matrix(60, 7, 101);
  require(std::abs(metrics::linear_cka(x, x) - 1.0) < 1e-9, "cka self-similarity");
  require(std::abs(metrics::linear_cka(x, Mat(3.0 * x)) - 1.0) < 1e-9, "cka isotropic scaling");
  Eigen::HouseholderQR<Mat> qr(random_matrix(7, 7, 102));
  const Mat q = qr.householderQ() * Mat::Identity(7, 7);
  require(std::abs(metrics::linear_cka(x, Mat(x * q)) - 1.0) < 1e-9,
          "cka orthogonal invariance");

  Mat r = random_matrix(7, 7, 103);
  r += 2.0 * Mat::Identity(7, 7);
  require(std::abs(metrics::mean_cca(x, Mat(x * r), 1e-8) - 1.0) < 1e-6,
          "mean_cca invertible-map identity");
}

// ---------------------------------------------------------------------------
// criterion 3: InfoNCE closed forms

void criterion_infonce_closed_forms() {
  const contrastive::InfoNceConfig unit{1.0, false};
  Mat one(1, 1);
  one << 0.2;
  require(contrastive::infonce_loss(one, unit) == 0.0, "n=1 loss must be exactly 0");

  for (Index n : {2, 3, 7}) {
    const Mat uniform = Mat::Constant(n, n, 0.42);
    require(std::abs(contrastive::infonce_loss(uniform, unit) - std::log(double(n))) < 1e-12,
            "uniform similarities must give log n");
  }

  Mat id2(2, 2);
  id2 << 1, 0, 0, 1;
  require(std::abs(contrastive::infonce_loss(id2, unit) - std::log(1.0 + std::exp(-1.0))) < 1e-9,
          "n=2 identity case must give log(1+e^-1)");
}

// ---------------------------------------------------------------------------
// criterion 4: qualitative reproduction on the synthetic oracle

void criterion_synthetic_alignment() {
  const data::Dataset ds = data::synth_pairs(cli::synthetic_spec(0));
  for (uint64_t seed : {1u, 2u, 3u}) {
    trainer::TrainConfig cfg;
    cfg.d_hidden = 128;
    cfg.d_out = 32;
    cfg.num_layers = 3;
    cfg.lr = 1e-3;
    cfg.temperature = 0.07;
    cfg.batch_size = 256;
    cfg.epochs = 200;
    cfg.seed = seed;
    cfg.split.seed = seed;
    const trainer::RunArtifacts artifacts = trainer::run_training(ds, cfg);
    require(artifacts.baseline.cka < 0.3,
            "seed " + std::to_string(seed) + ": baseline cka " +
                fmt("%.3f", artifacts.baseline.cka) + " not < 0.3");
    require(artifacts.metrics.cka >= 0.6,
            "seed " + std::to_string(seed) + ": post-training cka " +
                fmt("%.3f", artifacts.metrics.cka) + " not >= 0.6");
    require(artifacts.metrics.cca >= 0.8,
            "seed " + std::to_string(seed) + ": post-training cca " +
                fmt("%.3f", artifacts.metrics.cca) + " not >= 0.8");
    require(artifacts.metrics.retrieval_at_1 >= 0.5,
            "seed " + std::to_string(seed) + ": retrieval@1 " +
                fmt("%.3f", artifacts.metrics.retrieval_at_1) + " not >= 0.5");
  }
}

// ---------------------------------------------------------------------------
// criterion 5: sweep harness shape and reproducibility

void criterion_sweep_harness() {
  TempDir dir("sonalign_accept_sweep");
  auto run_sweep = [&](const char* sub) {
    cli::SweepArgs args;
    args.data.synthetic = true;
    args.data.synth_seed = 0;
    args.out_dir = (dir.path / sub).string();
    args.grid.base.epochs = 10;
    args.grid.master_seed = 7;
    std::ostringstream out, err;
    require(cli::cmd_sweep(args, out, err) == 0, "sweep exited non-zero");
    std::ifstream csv(args.out_dir + "/sweep.csv", std::ios::binary);
    return std::string((std::istreambuf_iterator<char>(csv)), std::istreambuf_iterator<char>());
  };

  const std::string first = run_sweep("one");
  std::istringstream lines(first);
  std::string line;
  int rows = 0, baseline_rows = 0;
  std::getline(lines, line);
  require(line == "config,d_hidden,d_out,L,lr,cka_mean,cka_std,cca_mean,cca_std",
          "unexpected csv header: " + line);
  while (std::getline(lines, line)) {
    if (line.empty()) continue;
    ++rows;
    if (line.rfind("baseline,", 0) == 0) ++baseline_rows;
    // mean +- std over 3 seeds means 9 comma-separated fields
    require(std::count(line.begin(), line.end(), ',') == 8, "row with wrong field count: " + line);
  }
  require(rows == 25, "expected 25 data rows, got " + std::to_string(rows));
  require(baseline_rows == 1, "expected exactly 1 baseline row");

  const std::string second = run_sweep("two");
  require(first == second, "two sweeps with the same master seed differ byte-wise");
}

// ---------------------------------------------------------------------------
// criterion 6: corpus arithmetic

uint64_t hash_dir_contents(const fs::path& dir) {
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir)) files.push_back(entry.path());
  std::sort(files.begin(), files.end());
  uint64_t h = 1469598103934665603ULL;
  auto feed = [&h](const std::string& s) {
    for (unsigned char c : s) {
      h ^= c;
      h *= 1099511628211ULL;
    }
  };
  for (const fs::path& file : files) {
    feed(file.filename().string());
    std::ifstream in(file, std::ios::binary);
    feed(std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>()));
  }
  return h;
}

void criterion_corpus_arithmetic() {
  TempDir dir("sonalign_accept_corpus");

  // 28 templates x 200 variants
  std::vector<tpl::Template> templates;
  for (int t = 0; t < 28; ++t) {
    std::ostringstream body;
    body << "use_bpm {{ bpm }}\n";
    body << "live_loop :part" << t << " do\n";
    if (t % 3 == 0) body << "  synth :{{ synths }}\n";
    if (t % 3 == 1) body << "  sample :{{ samples }}, attack: {{ attack }}\n";
    body << "  play scale(:{{ note }}, :{{ character }}).tick\n";
    body << "  sleep {% sleep %}\nend\n";
    templates.push_back(tpl::parse_template("tpl" + std::to_string(t), body.str()));
  }
  const tpl::ParamSpace space = tpl::default_param_space();

  const fs::path big1 = dir.path / "big1";
  const auto manifest = tpl::generate_corpus(templates, space, 200, 11, big1.string());
  require(manifest.size() == 5600, "expected 5600 programs, got " +
                                       std::to_string(manifest.size()));
  size_t pi_files = 0;
  for (const auto& entry : fs::directory_iterator(big1)) {
    if (entry.path().extension() == ".pi") ++pi_files;
  }
  require(pi_files == 5600, "expected 5600 .pi files on disk");

  const fs::path big2 = dir.path / "big2";
  tpl::generate_corpus(templates, space, 200, 11, big2.string());
  require(hash_dir_contents(big1) == hash_dir_contents(big2),
          "same seed produced different corpora");

  // smoke check over the shipped templates
  const std::vector<tpl::Template> shipped =
      tpl::load_templates(std::string(SONALIGN_ASSET_DIR) + "/templates");
  require(shipped.size() == 8, "expected 8 shipped templates, found " +
                                   std::to_string(shipped.size()));
  const auto smoke =
      tpl::generate_corpus(shipped, space, 200, 1, (dir.path / "smoke").string());
  require(smoke.size() == 1600, "expected 8 x 200 = 1600 programs");
}

// ---------------------------------------------------------------------------
// criterion 7: OSC conformance

void criterion_osc_conformance() {
  const osc::Message run_code{"/run-code", {osc::Arg{std::string("play 60")}}};
  const std::vector<uint8_t> packet = osc::encode(run_code);
  require(packet.size() == 24, "run-code packet must be 24 bytes, got " +
                                   std::to_string(packet.size()));
  const uint8_t expected[24] = {'/', 'r', 'u', 'n', '-', 'c', 'o', 'd', 'e', 0,   0,   0,
                                ',', 's', 0,   0,   'p', 'l', 'a', 'y', ' ', '6', '0', 0};
  require(std::equal(packet.begin(), packet.end(), expected), "run-code packet layout mismatch");

  Rng rng(31415);
  for (int i = 0; i < 1000; ++i) {
    osc::Message msg;
    msg.address = "/";
    for (uint64_t k = rng.below(10); k > 0; --k) {
      msg.address.push_back(static_cast<char>('a' + rng.below(26)));
    }
    for (uint64_t a = rng.below(5); a > 0; --a) {
      switch (rng.below(4)) {
        case 0: msg.args.emplace_back(static_cast<int32_t>(rng.next_u64())); break;
        case 1: msg.args.emplace_back(static_cast<float>(rng.uniform(-1e5, 1e5))); break;
        case 2: {
          std::string s;
          for (uint64_t c = rng.below(24); c > 0; --c) {
            s.push_back(static_cast<char>(' ' + rng.below(94)));
          }
          msg.args.emplace_back(std::move(s));
          break;
        }
        default: {
          osc::Blob b(rng.below(20));
          for (auto& byte : b) byte = static_cast<uint8_t>(rng.below(256));
          msg.args.emplace_back(std::move(b));
          break;
        }
      }
    }
    const std::vector<uint8_t> bytes = osc::encode(msg);
    require(bytes.size() % 4 == 0, "encoded packet not 4-byte aligned");
    require(osc::decode(bytes) == msg, "round-trip mismatch");
  }
}

// ---------------------------------------------------------------------------
// criterion 8: correlation study shape

void criterion_correlation_study() {
  TempDir dir("sonalign_accept_analyze");
  data::SynthSpec spec;
  spec.n = 28;
  spec.latent_dim = 4;
  spec.code_dim = 12;
  spec.audio_dim = 10;
  spec.noise = 0.1;
  spec.seed = 8;
  const data::Dataset ds = data::synth_pairs(spec);
  data::save_records(ds, (dir.path / "data.jsonl").string());

  cli::AnalyzeArgs args;
  args.data_file = (dir.path / "data.jsonl").string();
  args.out_csv = (dir.path / "pairs.csv").string();
  args.trials = 1000;
  std::ostringstream out, err;
  require(cli::cmd_analyze(args, out, err) == 0, "analyze exited non-zero");

  std::ifstream csv(args.out_csv);
  std::string line;
  int data_rows = 0;
  bool header = true;
  while (std::getline(csv, line)) {
    if (header) {
      header = false;
      continue;
    }
    if (!line.empty() && line[0] != '#') ++data_rows;
  }
  require(data_rows == 378, "expected 378 pair rows, got " + std::to_string(data_rows));

  // identical modalities: perfect correlations, permutation p at its floor
  data::Dataset mirrored = ds;
  for (data::PairRecord& rec : mirrored.records) rec.audio_embedding = rec.code_embedding;
  const std::vector<double> sims = metrics::pairwise_cosine_vector(mirrored.code_matrix());
  require(std::abs(metrics::pearson(sims, sims) - 1.0) < 1e-12, "pearson must be 1");
  require(std::abs(metrics::spearman(sims, sims) - 1.0) < 1e-12, "spearman must be 1");
  const double p =
      metrics::perm_pvalue(sims, sims, metrics::Statistic::kPearson, 1000, 3);
  require(p <= 0.01, "permutation p " + fmt("%.4f", p) + " not <= 0.01");
}

// ---------------------------------------------------------------------------
// criterion 9: recording validity filter

void criterion_recording_filter() {
  const std::string fixtures = SONALIGN_FIXTURE_DIR;
  const sonic::RecordingCheck silence =
      sonic::validate_recording(fixtures + "/silence.wav", 1.0);
  require(!silence.valid, "silence fixture must be invalid");

  const sonic::RecordingCheck sine =
      sonic::validate_recording(fixtures + "/sine_-6dbfs.wav", 1.0);
  require(sine.valid, "sine fixture must be valid: " + sine.reason);
  require(std::abs(sine.peak - 0.5) < 0.01, "sine fixture peak should be about 0.5");

  const sonic::RecordingCheck truncated =
      sonic::validate_recording(fixtures + "/truncated.wav", 1.0);
  require(!truncated.valid, "truncated fixture must be invalid");
  require(truncated.reason.find("duration") != std::string::npos,
          "truncated fixture must fail on duration");
}

}  // namespace

int main() {
  Harness harness;
  harness.run(1, "full-pipeline gradient check", 30, criterion_gradients);
  harness.run(2, "metric oracles", 30, criterion_metric_oracles);
  harness.run(3, "InfoNCE closed forms", 30, criterion_infonce_closed_forms);
  harness.run(4, "synthetic alignment reproduction", 300, criterion_synthetic_alignment);
  harness.run(5, "sweep harness shape", 900, criterion_sweep_harness);
  harness.run(6, "corpus arithmetic", 10, criterion_corpus_arithmetic);
  harness.run(7, "OSC conformance", 5, criterion_osc_conformance);
  harness.run(8, "correlation study shape", 30, criterion_correlation_study);
  harness.run(9, "recording validity filter", 30, criterion_recording_filter);

  if (harness.failures > 0) {
    std::printf("%d criterion(s) failed\n", harness.failures);
    return 1;
  }
  std::printf("all 9 criteria passed\n");
  return 0;
}
