#include "sonalign/cli.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "sonalign/config.hpp"
#include "sonalign/errors.hpp"
#include "sonalign/metrics.hpp"
#include "sonalign/soniclink.hpp"
#include "sonalign/wav.hpp"
#include "sonalign/templater.hpp"

namespace sonalign::cli {

namespace fs = std::filesystem;
using nlohmann::json;

int guarded(const std::function<int()>& body, std::ostream& err) {
  try {
    return body();
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  } catch (const DimensionError& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  } catch (const DegenerateInputError& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  } catch (const ParseError& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  } catch (const SchemaError& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  } catch (const ResolutionError& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
}

int cmd_gen_corpus(const GenCorpusArgs& args, std::ostream& out, std::ostream& err) {
  if (args.per_template < 1) {
    throw ConfigError("per-template count must be >= 1");
  }
  const std::vector<tpl::Template> templates = tpl::load_templates(args.template_dir);
  if (templates.empty()) {
    err << "no *.pi.tpl templates in " << args.template_dir << '\n';
    return 1;
  }
  const tpl::ParamSpace space =
      args.params_file.empty() ? tpl::default_param_space() : tpl::load_param_space(args.params_file);
  const std::vector<tpl::ManifestEntry> manifest =
      tpl::generate_corpus(templates, space, args.per_template, args.seed, args.out_dir);
  out << "rendered " << manifest.size() << " programs from " << templates.size()
      << " templates into " << args.out_dir << '\n';
  return 0;
}

namespace {

std::string substitute(std::string text, const std::string& key, const std::string& value) {
  size_t pos = 0;
  while ((pos = text.find(key, pos)) != std::string::npos) {
    text.replace(pos, key.size(), value);
    pos += value.size();
  }
  return text;
}

}  // namespace

int cmd_render_audio(const RenderAudioArgs& args, std::ostream& out, std::ostream& err) {
  const std::vector<tpl::ManifestEntry> manifest = tpl::load_manifest(args.manifest);
  if (manifest.empty()) {
    err << "nothing to render: manifest is empty\n";
    return 1;
  }
  const sonic::Endpoint endpoint = sonic::parse_endpoint(args.endpoint);
  const fs::path corpus_dir = fs::path(args.manifest).parent_path();
  fs::create_directories(args.out_dir);

  size_t ok = 0, failed = 0;
  for (const tpl::ManifestEntry& entry : manifest) {
    const fs::path program_path = corpus_dir / entry.file_name;
    std::ifstream in(program_path, std::ios::binary);
    if (!in) {
      err << entry.file_name << ": missing program file\n";
      ++failed;
      continue;
    }
    std::ostringstream text;
    text << in.rdbuf();

    sonic::RenderJob job;
    job.program_text = text.str();
    job.endpoint = endpoint;
    job.record_seconds = args.record_seconds;
    job.output_wav =
        (fs::path(args.out_dir) / fs::path(entry.file_name).stem()).string() + ".wav";

    try {
      if (args.dry_run) {
        sonic::submit_program(job, sonic::SubmitMode::kDryRun, args.osc_address);
        ++ok;
        continue;
      }
      // a shared audio server renders one program at a time, so jobs stay sequential
      std::thread recorder;
      if (!args.recorder_cmd.empty()) {
        std::string cmd = substitute(args.recorder_cmd, "{out}", job.output_wav);
        char secs[32];
        std::snprintf(secs, sizeof(secs), "%g", args.record_seconds);
        cmd = substitute(cmd, "{seconds}", secs);
        recorder = std::thread([cmd] { std::system(cmd.c_str()); });  // NOLINT
      }
      sonic::submit_program(job, sonic::SubmitMode::kLive, args.osc_address);
      if (recorder.joinable()) recorder.join();

      const sonic::RecordingCheck check =
          sonic::validate_recording(job.output_wav, args.record_seconds, args.silence_threshold);
      if (check.valid) {
        ++ok;
      } else {
        ++failed;
        err << entry.file_name << ": invalid recording: " << check.reason << '\n';
      }
    } catch (const TransportError& e) {
      ++failed;
      err << entry.file_name << ": " << e.what() << '\n';
    }
  }

  out << (args.dry_run ? "captured " : "rendered ") << ok << " of " << manifest.size()
      << " programs (" << failed << " failed)\n";
  return ok > 0 ? 0 : 1;
}

int cmd_embed(const EmbedArgs& args, std::ostream& out, std::ostream& err) {
  if (!fs::is_directory(args.corpus_dir)) {
    throw ConfigError("corpus dir does not exist: " + args.corpus_dir);
  }
  std::vector<fs::path> programs;
  for (const auto& entry : fs::directory_iterator(args.corpus_dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".pi") {
      programs.push_back(entry.path());
    }
  }
  std::sort(programs.begin(), programs.end());

  // manifest metadata, when the corpus ships one
  std::map<std::string, const tpl::ManifestEntry*> by_file;
  std::vector<tpl::ManifestEntry> manifest;
  const fs::path manifest_path = fs::path(args.corpus_dir) / "manifest.jsonl";
  if (fs::exists(manifest_path)) {
    manifest = tpl::load_manifest(manifest_path.string());
    for (const tpl::ManifestEntry& entry : manifest) by_file[entry.file_name] = &entry;
  }

  auto load_sidecar = [&](const std::string& stem) -> json {
    for (const fs::path dir : {fs::path(args.corpus_dir), fs::path(args.wav_dir)}) {
      const fs::path sidecar = dir / (stem + ".emb.json");
      if (fs::exists(sidecar)) {
        std::ifstream in(sidecar);
        try {
          return json::parse(in);
        } catch (const json::parse_error& e) {
          throw ParseError(sidecar.string() + ": " + e.what());
        }
      }
    }
    return json();
  };

  data::Dataset ds;
  for (const fs::path& program : programs) {
    const std::string stem = program.stem().string();
    const fs::path wav_path = fs::path(args.wav_dir) / (stem + ".wav");
    if (!fs::exists(wav_path)) {
      err << "warning: no recording for " << program.filename().string() << ", skipped\n";
      continue;
    }

    std::ifstream in(program, std::ios::binary);
    std::ostringstream text;
    text << in.rdbuf();

    data::PairRecord rec;
    rec.id = stem;
    rec.code_text = text.str();

    const json sidecar = load_sidecar(stem);
    if (sidecar.contains("code_embedding")) {
      rec.code_embedding = sidecar["code_embedding"].get<std::vector<double>>();
      err << "note: " << stem << ": precomputed code embedding used, mock skipped\n";
    } else {
      rec.code_embedding = data::mock_code_embed(*rec.code_text);
    }
    if (sidecar.contains("audio_embedding")) {
      rec.audio_embedding = sidecar["audio_embedding"].get<std::vector<double>>();
      err << "note: " << stem << ": precomputed audio embedding used, mock skipped\n";
    } else {
      wav::Audio audio;
      try {
        audio = wav::read_wav(wav_path.string());
      } catch (const std::exception& e) {
        err << "warning: " << e.what() << ", skipped\n";
        continue;
      }
      if (audio.samples.empty()) {
        err << "warning: empty recording for " << stem << ", skipped\n";
        continue;
      }
      rec.audio_embedding = data::mock_audio_embed(audio.samples, audio.sample_rate);
    }

    if (auto it = by_file.find(stem + ".pi"); it != by_file.end()) {
      rec.meta["template"] = it->second->template_name;
      rec.meta["render_seed"] = std::to_string(it->second->seed);
    }
    rec.meta["valid"] = "true";
    ds.records.push_back(std::move(rec));
  }

  if (ds.empty()) {
    err << "no paired records produced\n";
    return 1;
  }
  data::validate_dataset(ds);
  data::save_records(ds, args.out_file);
  out << "wrote " << ds.size() << " records to " << args.out_file << " ("
      << (programs.size() - ds.size()) << " skipped)\n";
  return 0;
}

int cmd_analyze(const AnalyzeArgs& args, std::ostream& out, std::ostream& err) {
  const data::Dataset ds = data::load_records(args.data_file);
  if (ds.size() < 2) {
    err << "need at least 2 records to analyze, got " << ds.size() << '\n';
    return 1;
  }
  const std::vector<double> code_sims = metrics::pairwise_cosine_vector(ds.code_matrix());
  const std::vector<double> audio_sims = metrics::pairwise_cosine_vector(ds.audio_matrix());

  double r = std::nan(""), r_p = std::nan(""), rho = std::nan(""), rho_p = std::nan("");
  std::string note;
  try {
    r = metrics::pearson(code_sims, audio_sims);
    r_p = metrics::perm_pvalue(code_sims, audio_sims, metrics::Statistic::kPearson, args.trials,
                               args.seed);
    rho = metrics::spearman(code_sims, audio_sims);
    rho_p = metrics::perm_pvalue(code_sims, audio_sims, metrics::Statistic::kSpearman,
                                 args.trials, args.seed);
  } catch (const std::exception& e) {
    note = e.what();
  }

  std::ofstream csv(args.out_csv);
  if (!csv) throw IoError("cannot open output csv: " + args.out_csv);
  csv << "i,j,code_sim,audio_sim\n";
  char buf[80];
  size_t k = 0;
  const size_t n = ds.size();
  for (size_t i = 0; i < n; ++i) {
    for (size_t j = i + 1; j < n; ++j, ++k) {
      std::snprintf(buf, sizeof(buf), "%zu,%zu,%.9f,%.9f\n", i, j, code_sims[k], audio_sims[k]);
      csv << buf;
    }
  }
  std::snprintf(buf, sizeof(buf), "# pearson=%.6f p=%.6f spearman=%.6f p=%.6f pairs=%zu\n", r,
                r_p, rho, rho_p, code_sims.size());
  csv << buf;
  if (!csv) throw IoError("write failure on csv: " + args.out_csv);

  out << "pairs=" << code_sims.size();
  if (note.empty()) {
    std::snprintf(buf, sizeof(buf), " pearson=%.6f (p=%.6f) spearman=%.6f (p=%.6f)", r, r_p, rho,
                  rho_p);
    out << buf << '\n';
  } else {
    out << " correlations undefined: " << note << '\n';
  }
  return 0;
}

data::SynthSpec synthetic_spec(uint64_t seed) {
  data::SynthSpec spec;
  spec.n = 2000;
  spec.latent_dim = 16;
  spec.code_dim = 64;
  spec.audio_dim = 48;
  spec.noise = 0.1;
  spec.scramble = true;
  spec.seed = seed;
  return spec;
}

data::Dataset resolve_dataset(const DataSource& source) {
  if (source.synthetic) {
    return data::synth_pairs(synthetic_spec(source.synth_seed));
  }
  if (source.path.empty()) {
    throw ConfigError("no dataset given: pass a record file or --synthetic");
  }
  return data::load_records(source.path);
}

namespace {

const char* eval_split_name(trainer::EvalSplit s) {
  switch (s) {
    case trainer::EvalSplit::kTrain: return "train";
    case trainer::EvalSplit::kVal: return "val";
    default: return "test";
  }
}

trainer::EvalSplit eval_split_from(const std::string& name) {
  if (name == "train") return trainer::EvalSplit::kTrain;
  if (name == "val") return trainer::EvalSplit::kVal;
  if (name == "test") return trainer::EvalSplit::kTest;
  throw ConfigError("eval_split must be train, val or test, got '" + name + "'");
}

std::string format_config_snapshot(const TrainArgs& args) {
  const trainer::TrainConfig& cfg = args.cfg;
  std::ostringstream out;
  out << "[data]\n";
  if (args.data.synthetic) {
    out << "source = synthetic\n";
    out << "synth_seed = " << args.data.synth_seed << "\n";
  } else {
    out << "source = file\n";
    out << "path = " << args.data.path << "\n";
  }
  char buf[64];
  out << "\n[trainer]\n";
  out << "d_hidden = " << cfg.d_hidden << "\n";
  out << "d_out = " << cfg.d_out << "\n";
  out << "num_layers = " << cfg.num_layers << "\n";
  std::snprintf(buf, sizeof(buf), "%.17g", cfg.temperature);
  out << "temperature = " << buf << "\n";
  out << "symmetric = " << (cfg.symmetric ? 1 : 0) << "\n";
  std::snprintf(buf, sizeof(buf), "%.17g", cfg.lr);
  out << "lr = " << buf << "\n";
  out << "batch_size = " << cfg.batch_size << "\n";
  out << "epochs = " << cfg.epochs << "\n";
  out << "seed = " << cfg.seed << "\n";
  std::snprintf(buf, sizeof(buf), "%.17g", cfg.split.train);
  out << "split_train = " << buf << "\n";
  std::snprintf(buf, sizeof(buf), "%.17g", cfg.split.val);
  out << "split_val = " << buf << "\n";
  std::snprintf(buf, sizeof(buf), "%.17g", cfg.split.test);
  out << "split_test = " << buf << "\n";
  out << "split_seed = " << cfg.split.seed << "\n";
  out << "eval_split = " << eval_split_name(cfg.eval_split) << "\n";
  std::snprintf(buf, sizeof(buf), "%.17g", cfg.cca_ridge);
  out << "cca_ridge = " << buf << "\n";
  return out.str();
}

std::string format_metrics(const trainer::BaselineMetrics& baseline,
                           const trainer::EvalMetrics& metrics) {
  char buf[512];
  std::snprintf(buf, sizeof(buf),
                "baseline_cka = %.12f\n"
                "baseline_cca = %.12f\n"
                "cka = %.12f\n"
                "cca = %.12f\n"
                "mean_diag_cosine = %.12f\n"
                "retrieval_at_1 = %.12f\n",
                baseline.cka, baseline.cca, metrics.cka, metrics.cca, metrics.mean_diag_cosine,
                metrics.retrieval_at_1);
  return buf;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << text;
  if (!out) throw IoError("write failure on " + path.string());
}

}  // namespace

int cmd_train(const TrainArgs& args, std::ostream& out, std::ostream& err) {
  (void)err;
  args.cfg.validate();
  const data::Dataset ds = resolve_dataset(args.data);
  const trainer::RunArtifacts artifacts = trainer::run_training(ds, args.cfg);

  if (!args.out_dir.empty()) {
    fs::create_directories(args.out_dir);
    write_text(fs::path(args.out_dir) / "config.txt", format_config_snapshot(args));

    std::ostringstream history;
    history << "epoch,mean_loss\n";
    char buf[64];
    for (size_t e = 0; e < artifacts.epoch_loss.size(); ++e) {
      std::snprintf(buf, sizeof(buf), "%zu,%.12g\n", e + 1, artifacts.epoch_loss[e]);
      history << buf;
    }
    write_text(fs::path(args.out_dir) / "history.csv", history.str());

    nn::save_params(artifacts.code_head, (fs::path(args.out_dir) / "code_head.ealn").string());
    nn::save_params(artifacts.audio_head, (fs::path(args.out_dir) / "audio_head.ealn").string());
    write_text(fs::path(args.out_dir) / "metrics.txt",
               format_metrics(artifacts.baseline, artifacts.metrics));
  }

  char buf[256];
  std::snprintf(buf, sizeof(buf),
                "baseline: cka=%.4f cca=%.4f\n"
                "aligned:  cka=%.4f cca=%.4f diag_cos=%.4f retrieval@1=%.4f\n",
                artifacts.baseline.cka, artifacts.baseline.cca, artifacts.metrics.cka,
                artifacts.metrics.cca, artifacts.metrics.mean_diag_cosine,
                artifacts.metrics.retrieval_at_1);
  out << buf;
  if (!artifacts.epoch_loss.empty()) {
    std::snprintf(buf, sizeof(buf), "loss: first=%.4f last=%.4f over %zu epochs\n",
                  artifacts.epoch_loss.front(), artifacts.epoch_loss.back(),
                  artifacts.epoch_loss.size());
    out << buf;
  }
  return 0;
}

int cmd_eval(const EvalArgs& args, std::ostream& out, std::ostream& err) {
  (void)err;
  const fs::path run_dir(args.run_dir);
  const cfg::Config snapshot = cfg::load_config((run_dir / "config.txt").string());

  trainer::TrainConfig tc;
  tc.d_hidden = std::stoi(snapshot.get_or("trainer", "d_hidden", "128"));
  tc.d_out = std::stoi(snapshot.get_or("trainer", "d_out", "64"));
  tc.num_layers = std::stoi(snapshot.get_or("trainer", "num_layers", "3"));
  tc.temperature = std::stod(snapshot.get_or("trainer", "temperature", "0.07"));
  tc.symmetric = snapshot.get_or("trainer", "symmetric", "0") == "1";
  tc.lr = std::stod(snapshot.get_or("trainer", "lr", "0.001"));
  tc.batch_size = std::stoi(snapshot.get_or("trainer", "batch_size", "256"));
  tc.epochs = std::stoi(snapshot.get_or("trainer", "epochs", "100"));
  tc.seed = std::stoull(snapshot.get_or("trainer", "seed", "0"));
  tc.split.train = std::stod(snapshot.get_or("trainer", "split_train", "0.8"));
  tc.split.val = std::stod(snapshot.get_or("trainer", "split_val", "0.1"));
  tc.split.test = std::stod(snapshot.get_or("trainer", "split_test", "0.1"));
  tc.split.seed = std::stoull(snapshot.get_or("trainer", "split_seed", "0"));
  tc.eval_split = eval_split_from(snapshot.get_or("trainer", "eval_split", "test"));
  tc.cca_ridge = std::stod(snapshot.get_or("trainer", "cca_ridge", "1e-6"));

  DataSource source = args.data;
  if (source.path.empty() && !source.synthetic) {
    if (snapshot.get_or("data", "source", "file") == "synthetic") {
      source.synthetic = true;
      source.synth_seed = std::stoull(snapshot.get_or("data", "synth_seed", "0"));
    } else {
      source.path = snapshot.get_or("data", "path", "");
    }
  }
  const data::Dataset ds = resolve_dataset(source);

  const nn::MlpParams code_head = nn::load_params((run_dir / "code_head.ealn").string());
  const nn::MlpParams audio_head = nn::load_params((run_dir / "audio_head.ealn").string());

  const data::Splits splits = data::split(ds, tc.split);
  const data::Dataset& eval_ds = tc.eval_split == trainer::EvalSplit::kTrain ? splits.train
                                 : tc.eval_split == trainer::EvalSplit::kVal ? splits.val
                                                                             : splits.test;
  const trainer::BaselineMetrics baseline = trainer::baseline_metrics(eval_ds, tc.cca_ridge);
  const trainer::EvalMetrics metrics = trainer::evaluate(code_head, audio_head, eval_ds,
                                                         tc.cca_ridge);
  const std::string text = format_metrics(baseline, metrics);
  if (args.out_file.empty()) {
    out << text;
  } else {
    write_text(args.out_file, text);
  }
  return 0;
}

int cmd_sweep(const SweepArgs& args, std::ostream& out, std::ostream& err) {
  (void)err;
  args.grid.validate();
  const data::Dataset ds = resolve_dataset(args.data);
  const trainer::SweepReport report = trainer::sweep(ds, args.grid);
  const std::string csv = trainer::sweep_csv(report);
  const std::string table = trainer::sweep_table(report);
  if (!args.out_dir.empty()) {
    fs::create_directories(args.out_dir);
    write_text(fs::path(args.out_dir) / "sweep.csv", csv);
    write_text(fs::path(args.out_dir) / "sweep.txt", table);
  }
  out << table;
  return 0;
}

}  // namespace sonalign::cli
