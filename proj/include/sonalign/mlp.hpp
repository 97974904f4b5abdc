#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "sonalign/matrix.hpp"

namespace sonalign::nn {

constexpr double kBatchNormEps = 1e-5;
constexpr double kBatchNormMomentum = 0.1;

struct MlpConfig {
  Index d_in = 0;
  Index d_hidden = 0;
  Index d_out = 0;
  int num_layers = 1;  // L = 1 maps d_in -> d_out directly, no hidden layer
  uint64_t seed = 0;

  void validate() const;  // throws ConfigError
};

// One linear layer; hidden layers additionally carry batch-norm state.
struct Layer {
  Mat weight;           // out x in
  RowVec bias;          // out
  bool has_norm = false;
  RowVec gamma, beta;
  RowVec run_mean, run_var;
};

struct MlpParams {
  MlpConfig config;
  std::vector<Layer> layers;

  Index input_dim() const { return layers.front().weight.cols(); }
  Index output_dim() const { return layers.back().weight.rows(); }
};

struct LayerCache {
  Mat input;     // batch x in
  Mat lin;       // linear output, pre-norm
  RowVec mean;   // batch statistics (hidden layers only)
  RowVec inv_std;
  Mat xhat;      // normalized, pre gamma/beta
  Mat bn_out;    // GELU input
};

struct ForwardCache {
  std::vector<LayerCache> layers;
  Index batch = 0;
};

struct LayerGrads {
  Mat d_weight;
  RowVec d_bias;
  RowVec d_gamma, d_beta;  // empty for the final layer
};

struct Gradients {
  std::vector<LayerGrads> layers;
  Mat d_input;
};

// Exact GELU, x * Phi(x) with Phi the standard normal CDF (erf form).
double gelu(double x);
double gelu_grad(double x);

// Seeded Glorot-uniform weights (bound sqrt(6/(fan_in+fan_out))), zero biases,
// identity batch-norm state. Deterministic for a fixed seed.
MlpParams init_mlp(const MlpConfig& config);

// Hidden layers apply Linear -> BatchNorm -> GELU; the final layer is linear
// only. Eval mode normalizes with running statistics and never mutates params.
Mat forward_eval(const MlpParams& params, const Mat& x);

// Train mode normalizes with batch statistics (biased variance), updates the
// running statistics with momentum 0.1, and fills the cache for backward.
// Requires batch >= 2.
Mat forward_train(MlpParams& params, const Mat& x, ForwardCache& cache);

// Gradients for every weight, bias, gamma, beta plus the input gradient, from
// a train-mode cache.
Gradients backward(const MlpParams& params, const ForwardCache& cache, const Mat& d_out);

struct AdamConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

struct AdamMoments {
  Mat m_weight, v_weight;
  RowVec m_bias, v_bias;
  RowVec m_gamma, v_gamma, m_beta, v_beta;
};

struct AdamState {
  AdamConfig config;
  int64_t step = 0;
  std::vector<AdamMoments> layers;
};

AdamState init_adam(const MlpParams& params, AdamConfig config = {});

// Standard Adam with bias correction; throws NumericError on non-finite
// gradients before touching any parameter.
void adam_step(MlpParams& params, const Gradients& grads, AdamState& state, double lr);

// Self-describing binary checkpoint: magic "EALN", u16 version, per-layer
// shape headers, little-endian f64 payload. save/load round-trips are
// bitwise lossless.
void save_params(const MlpParams& params, const std::string& path);
MlpParams load_params(const std::string& path);

}  // namespace sonalign::nn
