#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <string>

#include "sonalign/dataset.hpp"
#include "sonalign/trainer.hpp"

namespace sonalign::cli {

// Exit-code contract: 0 success, 1 empty or failed work, 2 usage/config error.
int guarded(const std::function<int()>& body, std::ostream& err);

struct GenCorpusArgs {
  std::string template_dir;
  std::string params_file;  // empty: built-in parameter space
  std::string out_dir;
  int per_template = 200;
  uint64_t seed = 0;
};
int cmd_gen_corpus(const GenCorpusArgs& args, std::ostream& out, std::ostream& err);

struct RenderAudioArgs {
  std::string manifest;  // manifest.jsonl; program files live beside it
  std::string out_dir;
  std::string endpoint = "127.0.0.1:4557";
  std::string osc_address = "/run-code";
  double record_seconds = 10.0;
  bool dry_run = false;
  double silence_threshold = 1e-3;
  std::string recorder_cmd;  // optional external recorder; {out} and {seconds} substituted
};
int cmd_render_audio(const RenderAudioArgs& args, std::ostream& out, std::ostream& err);

struct EmbedArgs {
  std::string corpus_dir;
  std::string wav_dir;
  std::string out_file;
};
int cmd_embed(const EmbedArgs& args, std::ostream& out, std::ostream& err);

struct AnalyzeArgs {
  std::string data_file;
  std::string out_csv;
  int trials = 10000;
  uint64_t seed = 0;
};
int cmd_analyze(const AnalyzeArgs& args, std::ostream& out, std::ostream& err);

// Dataset source shared by train/eval/sweep: a record file, or the built-in
// synthetic generator for self-contained demos.
struct DataSource {
  std::string path;
  bool synthetic = false;
  uint64_t synth_seed = 0;
};
data::Dataset resolve_dataset(const DataSource& source);
data::SynthSpec synthetic_spec(uint64_t seed);

struct TrainArgs {
  DataSource data;
  std::string out_dir;
  trainer::TrainConfig cfg;
};
int cmd_train(const TrainArgs& args, std::ostream& out, std::ostream& err);

struct EvalArgs {
  std::string run_dir;
  DataSource data;  // empty path + synthetic=false: reuse the run's data source
  std::string out_file;  // empty: stdout
};
int cmd_eval(const EvalArgs& args, std::ostream& out, std::ostream& err);

struct SweepArgs {
  DataSource data;
  std::string out_dir;
  trainer::SweepGrid grid;
};
int cmd_sweep(const SweepArgs& args, std::ostream& out, std::ostream& err);

}  // namespace sonalign::cli
