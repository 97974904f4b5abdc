#include "sonalign/mlp.hpp"

#include <cmath>

#include "sonalign/errors.hpp"
#include "sonalign/rng.hpp"

namespace sonalign::nn {

namespace {

Index layer_in(const MlpConfig& c, int l) { return l == 0 ? c.d_in : c.d_hidden; }
Index layer_out(const MlpConfig& c, int l) { return l == c.num_layers - 1 ? c.d_out : c.d_hidden; }

void check_cache(const MlpParams& params, const ForwardCache& cache, const Mat& d_out) {
  if (cache.layers.size() != params.layers.size() || cache.batch < 2) {
    throw CacheError("forward cache does not match parameters");
  }
  if (d_out.rows() != cache.batch || d_out.cols() != params.output_dim()) {
    throw CacheError("output gradient shape does not match cached forward pass");
  }
  for (size_t l = 0; l < params.layers.size(); ++l) {
    if (cache.layers[l].input.cols() != params.layers[l].weight.cols() ||
        cache.layers[l].input.rows() != cache.batch) {
      throw CacheError("cached activations do not match parameter shapes at layer " +
                       std::to_string(l));
    }
  }
}

}  // namespace

void MlpConfig::validate() const {
  if (d_in < 1 || d_out < 1 || num_layers < 1) {
    throw ConfigError("mlp config: d_in, d_out and num_layers must be >= 1");
  }
  if (num_layers > 1 && d_hidden < 1) {
    throw ConfigError("mlp config: d_hidden must be >= 1 when num_layers > 1");
  }
}

double gelu(double x) {
  return 0.5 * x * (1.0 + std::erf(x * M_SQRT1_2));
}

double gelu_grad(double x) {
  const double cdf = 0.5 * (1.0 + std::erf(x * M_SQRT1_2));
  const double pdf = std::exp(-0.5 * x * x) / std::sqrt(2.0 * M_PI);
  return cdf + x * pdf;
}

MlpParams init_mlp(const MlpConfig& config) {
  config.validate();
  Rng rng(config.seed);
  MlpParams params;
  params.config = config;
  params.layers.resize(config.num_layers);
  for (int l = 0; l < config.num_layers; ++l) {
    Layer& layer = params.layers[l];
    const Index in = layer_in(config, l);
    const Index out = layer_out(config, l);
    const double bound = std::sqrt(6.0 / static_cast<double>(in + out));
    layer.weight.resize(out, in);
    for (Index i = 0; i < out; ++i) {
      for (Index j = 0; j < in; ++j) {
        layer.weight(i, j) = rng.uniform(-bound, bound);
      }
    }
    layer.bias = RowVec::Zero(out);
    layer.has_norm = l + 1 < config.num_layers;
    if (layer.has_norm) {
      layer.gamma = RowVec::Ones(out);
      layer.beta = RowVec::Zero(out);
      layer.run_mean = RowVec::Zero(out);
      layer.run_var = RowVec::Ones(out);
    }
  }
  return params;
}

Mat forward_eval(const MlpParams& params, const Mat& x) {
  if (x.cols() != params.input_dim()) {
    throw DimensionError("forward: input has " + std::to_string(x.cols()) +
                         " columns, expected " + std::to_string(params.input_dim()));
  }
  Mat h = x;
  for (const Layer& layer : params.layers) {
    Mat z = h * layer.weight.transpose();
    z.rowwise() += layer.bias;
    if (layer.has_norm) {
      const RowVec scale =
          (layer.run_var.array() + kBatchNormEps).rsqrt() * layer.gamma.array();
      z.rowwise() -= layer.run_mean;
      z.array().rowwise() *= scale.array();
      z.rowwise() += layer.beta;
      z = z.unaryExpr([](double v) { return gelu(v); });
    }
    h = std::move(z);
  }
  require_finite(h, "forward output");
  return h;
}

Mat forward_train(MlpParams& params, const Mat& x, ForwardCache& cache) {
  if (x.cols() != params.input_dim()) {
    throw DimensionError("forward: input has " + std::to_string(x.cols()) +
                         " columns, expected " + std::to_string(params.input_dim()));
  }
  const Index n = x.rows();
  if (n < 2) {
    throw DimensionError("train-mode forward needs a batch of at least 2 rows");
  }
  cache.layers.clear();
  cache.layers.resize(params.layers.size());
  cache.batch = n;

  Mat h = x;
  for (size_t l = 0; l < params.layers.size(); ++l) {
    Layer& layer = params.layers[l];
    LayerCache& lc = cache.layers[l];
    lc.input = h;
    Mat z = h * layer.weight.transpose();
    z.rowwise() += layer.bias;
    lc.lin = z;
    if (layer.has_norm) {
      const RowVec mean = z.colwise().mean();
      Mat centered = z.rowwise() - mean;
      const RowVec var = centered.array().square().colwise().mean();  // biased
      const RowVec inv_std = (var.array() + kBatchNormEps).rsqrt();
      lc.mean = mean;
      lc.inv_std = inv_std;
      centered.array().rowwise() *= inv_std.array();
      lc.xhat = std::move(centered);
      Mat affine = lc.xhat;
      affine.array().rowwise() *= layer.gamma.array();
      affine.rowwise() += layer.beta;
      lc.bn_out = std::move(affine);
      // running stats track the unbiased batch variance, PyTorch-style
      const double unbias = static_cast<double>(n) / static_cast<double>(n - 1);
      layer.run_mean = (1.0 - kBatchNormMomentum) * layer.run_mean + kBatchNormMomentum * mean;
      layer.run_var =
          (1.0 - kBatchNormMomentum) * layer.run_var + kBatchNormMomentum * (unbias * var);
      h = lc.bn_out.unaryExpr([](double v) { return gelu(v); });
    } else {
      h = z;
    }
  }
  require_finite(h, "forward output");
  return h;
}

Gradients backward(const MlpParams& params, const ForwardCache& cache, const Mat& d_out) {
  check_cache(params, cache, d_out);
  const double n = static_cast<double>(cache.batch);

  Gradients grads;
  grads.layers.resize(params.layers.size());

  Mat g = d_out;
  for (int l = static_cast<int>(params.layers.size()) - 1; l >= 0; --l) {
    const Layer& layer = params.layers[l];
    const LayerCache& lc = cache.layers[l];
    LayerGrads& lg = grads.layers[l];

    if (layer.has_norm) {
      // through GELU
      Mat dact = lc.bn_out.unaryExpr([](double v) { return gelu_grad(v); });
      g = g.array() * dact.array();
      // through the affine part of batch norm
      lg.d_beta = g.colwise().sum();
      lg.d_gamma = (g.array() * lc.xhat.array()).colwise().sum();
      Mat dxhat = g;
      dxhat.array().rowwise() *= layer.gamma.array();
      // through normalization with batch statistics
      const RowVec sum_dxhat = dxhat.colwise().sum();
      const RowVec sum_dxhat_xhat = (dxhat.array() * lc.xhat.array()).colwise().sum();
      Mat weighted_xhat = lc.xhat;
      weighted_xhat.array().rowwise() *= sum_dxhat_xhat.array();
      Mat dz = n * dxhat - weighted_xhat;
      dz.rowwise() -= sum_dxhat;
      const RowVec scale = lc.inv_std / n;
      dz.array().rowwise() *= scale.array();
      g = std::move(dz);
    }

    lg.d_weight = g.transpose() * lc.input;
    lg.d_bias = g.colwise().sum();
    g = g * layer.weight;
  }
  grads.d_input = std::move(g);
  return grads;
}

AdamState init_adam(const MlpParams& params, AdamConfig config) {
  AdamState state;
  state.config = config;
  state.layers.resize(params.layers.size());
  for (size_t l = 0; l < params.layers.size(); ++l) {
    const Layer& layer = params.layers[l];
    AdamMoments& m = state.layers[l];
    m.m_weight = Mat::Zero(layer.weight.rows(), layer.weight.cols());
    m.v_weight = m.m_weight;
    m.m_bias = RowVec::Zero(layer.bias.size());
    m.v_bias = m.m_bias;
    if (layer.has_norm) {
      m.m_gamma = RowVec::Zero(layer.gamma.size());
      m.v_gamma = m.m_gamma;
      m.m_beta = m.m_gamma;
      m.v_beta = m.m_gamma;
    }
  }
  return state;
}

namespace {

template <typename T>
void adam_update(T& param, const T& grad, T& m, T& v, const AdamConfig& c,
                 double lr, double bc1, double bc2) {
  m = c.beta1 * m + (1.0 - c.beta1) * grad;
  v = (v.array() * c.beta2 + (1.0 - c.beta2) * grad.array().square()).matrix();
  param.array() -= lr * (m.array() / bc1) / ((v.array() / bc2).sqrt() + c.eps);
}

}  // namespace

void adam_step(MlpParams& params, const Gradients& grads, AdamState& state, double lr) {
  if (lr <= 0.0) {
    throw ConfigError("adam_step: learning rate must be > 0");
  }
  if (grads.layers.size() != params.layers.size() ||
      state.layers.size() != params.layers.size()) {
    throw DimensionError("adam_step: gradient/state layer count mismatch");
  }
  for (size_t l = 0; l < params.layers.size(); ++l) {
    const LayerGrads& lg = grads.layers[l];
    if (!lg.d_weight.allFinite() || !lg.d_bias.allFinite() ||
        (params.layers[l].has_norm &&
         (!lg.d_gamma.allFinite() || !lg.d_beta.allFinite()))) {
      throw NumericError("adam_step: non-finite gradient at layer " + std::to_string(l) +
                         "; step aborted");
    }
  }

  state.step += 1;
  const AdamConfig& c = state.config;
  const double bc1 = 1.0 - std::pow(c.beta1, static_cast<double>(state.step));
  const double bc2 = 1.0 - std::pow(c.beta2, static_cast<double>(state.step));
  for (size_t l = 0; l < params.layers.size(); ++l) {
    Layer& layer = params.layers[l];
    const LayerGrads& lg = grads.layers[l];
    AdamMoments& m = state.layers[l];
    adam_update(layer.weight, lg.d_weight, m.m_weight, m.v_weight, c, lr, bc1, bc2);
    adam_update(layer.bias, lg.d_bias, m.m_bias, m.v_bias, c, lr, bc1, bc2);
    if (layer.has_norm) {
      adam_update(layer.gamma, lg.d_gamma, m.m_gamma, m.v_gamma, c, lr, bc1, bc2);
      adam_update(layer.beta, lg.d_beta, m.m_beta, m.v_beta, c, lr, bc1, bc2);
    }
  }
}

}  // namespace sonalign::nn
