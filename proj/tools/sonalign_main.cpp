#include <cstdlib>
#include <iostream>

#include <CLI11.hpp>

#include "sonalign/cli.hpp"
#include "sonalign/config.hpp"
#include "sonalign/errors.hpp"

using namespace sonalign;

int main(int argc, char** argv) {
  CLI::App app{"sonalign: live-coding corpus generation, OSC-driven rendering, and "
               "cross-modal embedding alignment"};
  app.require_subcommand(1);

  // gen-corpus
  cli::GenCorpusArgs gen;
  CLI::App* gen_cmd = app.add_subcommand("gen-corpus", "render randomized programs from templates");
  gen_cmd->add_option("--templates", gen.template_dir, "directory of *.pi.tpl files")->required();
  gen_cmd->add_option("--params", gen.params_file, "parameter space config (default: built-in)");
  gen_cmd->add_option("--per-template", gen.per_template, "variants per template");
  gen_cmd->add_option("--seed", gen.seed, "master seed");
  gen_cmd->add_option("--out", gen.out_dir, "output corpus directory")->required();

  // render-audio
  cli::RenderAudioArgs render;
  CLI::App* render_cmd =
      app.add_subcommand("render-audio", "submit rendered programs to a Sonic Pi server over OSC");
  render_cmd->add_option("--manifest", render.manifest, "corpus manifest.jsonl")->required();
  render_cmd->add_option("--out", render.out_dir, "recording output directory")->required();
  render_cmd->add_option("--endpoint", render.endpoint, "host:port of the OSC server");
  render_cmd->add_option("--osc-address", render.osc_address, "OSC address pattern");
  render_cmd->add_option("--record-seconds", render.record_seconds, "recording length per program");
  render_cmd->add_flag("--dry-run", render.dry_run, "write .osc capture files instead of sending");
  render_cmd->add_option("--silence-threshold", render.silence_threshold,
                         "peak amplitude below which a recording is invalid");
  render_cmd->add_option("--recorder-cmd", render.recorder_cmd,
                         "external recorder command; {out} and {seconds} are substituted");

  // embed
  cli::EmbedArgs embed;
  CLI::App* embed_cmd =
      app.add_subcommand("embed", "pair programs with recordings and write embedding records");
  embed_cmd->add_option("--corpus", embed.corpus_dir, "directory of .pi programs")->required();
  embed_cmd->add_option("--wavs", embed.wav_dir, "directory of .wav recordings")->required();
  embed_cmd->add_option("--out", embed.out_file, "output record file")->required();

  // analyze
  cli::AnalyzeArgs analyze;
  CLI::App* analyze_cmd =
      app.add_subcommand("analyze", "pairwise cosine similarity study with correlations");
  analyze_cmd->add_option("--data", analyze.data_file, "record file")->required();
  analyze_cmd->add_option("--out", analyze.out_csv, "output csv of pairwise similarities")
      ->required();
  analyze_cmd->add_option("--trials", analyze.trials, "permutation trials for p-values");
  analyze_cmd->add_option("--seed", analyze.seed, "permutation seed");

  // shared train/sweep/eval options
  auto add_data_options = [](CLI::App* cmd, cli::DataSource& source) {
    cmd->add_option("--data", source.path, "record file");
    cmd->add_flag("--synthetic", source.synthetic, "use the built-in synthetic dataset");
    cmd->add_option("--synth-seed", source.synth_seed, "synthetic dataset seed");
  };

  cli::TrainArgs train;
  std::string train_config_file;
  std::string train_eval_split = "test";
  CLI::App* train_cmd = app.add_subcommand("train", "contrastive training of both heads");
  add_data_options(train_cmd, train.data);
  train_cmd->add_option("--config", train_config_file, "config file with a [trainer] section");
  train_cmd->add_option("--out", train.out_dir, "run artifacts directory");
  train_cmd->add_option("--d-hidden", train.cfg.d_hidden, "hidden width");
  train_cmd->add_option("--d-out", train.cfg.d_out, "shared output width");
  train_cmd->add_option("--layers", train.cfg.num_layers, "linear layers per head");
  train_cmd->add_option("--tau", train.cfg.temperature, "InfoNCE temperature");
  train_cmd->add_flag("--symmetric", train.cfg.symmetric, "average both contrast directions");
  train_cmd->add_option("--lr", train.cfg.lr, "Adam learning rate");
  train_cmd->add_option("--batch", train.cfg.batch_size, "batch size");
  train_cmd->add_option("--epochs", train.cfg.epochs, "training epochs");
  train_cmd->add_option("--seed", train.cfg.seed, "training seed");
  train_cmd->add_option("--split-seed", train.cfg.split.seed, "partition seed");
  train_cmd->add_option("--eval-split", train_eval_split, "train|val|test");

  cli::EvalArgs eval;
  CLI::App* eval_cmd = app.add_subcommand("eval", "re-evaluate a saved run");
  eval_cmd->add_option("--run-dir", eval.run_dir, "run artifacts directory")->required();
  add_data_options(eval_cmd, eval.data);
  eval_cmd->add_option("--out", eval.out_file, "metrics output file (default: stdout)");

  cli::SweepArgs sweep;
  CLI::App* sweep_cmd = app.add_subcommand("sweep", "24-configuration hyperparameter sweep");
  add_data_options(sweep_cmd, sweep.data);
  sweep_cmd->add_option("--out", sweep.out_dir, "sweep output directory");
  sweep_cmd->add_option("--epochs", sweep.grid.base.epochs, "epochs per run");
  sweep_cmd->add_option("--batch", sweep.grid.base.batch_size, "batch size");
  sweep_cmd->add_option("--tau", sweep.grid.base.temperature, "InfoNCE temperature");
  sweep_cmd->add_option("--seeds", sweep.grid.seeds_per_config, "seeds per configuration");
  sweep_cmd->add_option("--seed", sweep.grid.master_seed, "master seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  // environment override for the OSC endpoint
  if (const char* env = std::getenv("SONALIGN_ENDPOINT"); env != nullptr && *env != '\0') {
    if (render_cmd->count("--endpoint") == 0) render.endpoint = env;
  }

  return cli::guarded(
      [&]() -> int {
        if (*gen_cmd) return cli::cmd_gen_corpus(gen, std::cout, std::cerr);
        if (*render_cmd) return cli::cmd_render_audio(render, std::cout, std::cerr);
        if (*embed_cmd) return cli::cmd_embed(embed, std::cout, std::cerr);
        if (*analyze_cmd) return cli::cmd_analyze(analyze, std::cout, std::cerr);
        if (*train_cmd) {
          if (!train_config_file.empty()) {
            const sonalign::cfg::Config file_cfg = cfg::load_config(train_config_file);
            auto set_if = [&](const char* key, auto setter) {
              if (auto v = file_cfg.get("trainer", key)) setter(*v);
            };
            // flags given on the command line win over the config file
            if (train_cmd->count("--d-hidden") == 0)
              set_if("d_hidden", [&](const std::string& v) { train.cfg.d_hidden = std::stoi(v); });
            if (train_cmd->count("--d-out") == 0)
              set_if("d_out", [&](const std::string& v) { train.cfg.d_out = std::stoi(v); });
            if (train_cmd->count("--layers") == 0)
              set_if("num_layers",
                     [&](const std::string& v) { train.cfg.num_layers = std::stoi(v); });
            if (train_cmd->count("--tau") == 0)
              set_if("temperature",
                     [&](const std::string& v) { train.cfg.temperature = std::stod(v); });
            if (train_cmd->count("--symmetric") == 0)
              set_if("symmetric", [&](const std::string& v) { train.cfg.symmetric = v == "1"; });
            if (train_cmd->count("--lr") == 0)
              set_if("lr", [&](const std::string& v) { train.cfg.lr = std::stod(v); });
            if (train_cmd->count("--batch") == 0)
              set_if("batch_size",
                     [&](const std::string& v) { train.cfg.batch_size = std::stoi(v); });
            if (train_cmd->count("--epochs") == 0)
              set_if("epochs", [&](const std::string& v) { train.cfg.epochs = std::stoi(v); });
            if (train_cmd->count("--seed") == 0)
              set_if("seed", [&](const std::string& v) { train.cfg.seed = std::stoull(v); });
            if (train_cmd->count("--split-seed") == 0)
              set_if("split_seed",
                     [&](const std::string& v) { train.cfg.split.seed = std::stoull(v); });
          }
          if (train_eval_split == "train") {
            train.cfg.eval_split = trainer::EvalSplit::kTrain;
          } else if (train_eval_split == "val") {
            train.cfg.eval_split = trainer::EvalSplit::kVal;
          } else if (train_eval_split == "test") {
            train.cfg.eval_split = trainer::EvalSplit::kTest;
          } else {
            throw ConfigError("eval-split must be train, val or test");
          }
          return cli::cmd_train(train, std::cout, std::cerr);
        }
        if (*eval_cmd) return cli::cmd_eval(eval, std::cout, std::cerr);
        if (*sweep_cmd) return cli::cmd_sweep(sweep, std::cout, std::cerr);
        return 2;
      },
      std::cerr);
}
