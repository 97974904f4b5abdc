#include "sonalign/contrastive.hpp"

#include <cmath>
#include <string>

#include "sonalign/errors.hpp"

namespace sonalign::contrastive {

namespace {

struct NormalizedRows {
  Mat unit;                 // rows scaled to unit norm
  Eigen::VectorXd norms;
};

NormalizedRows normalize_rows(const Mat& m, const char* name) {
  NormalizedRows out;
  out.unit = m;
  out.norms.resize(m.rows());
  for (Index i = 0; i < m.rows(); ++i) {
    const double norm = m.row(i).norm();
    if (norm == 0.0) {
      throw DegenerateInputError(std::string(name) + " row " + std::to_string(i) +
                                 " has zero norm");
    }
    out.norms(i) = norm;
    out.unit.row(i) /= norm;
  }
  return out;
}

void check_square(const Mat& sim) {
  if (sim.rows() != sim.cols() || sim.rows() < 1) {
    throw DimensionError("similarity matrix must be square and non-empty");
  }
}

// Row-wise softmax of sim / tau with max shift.
Mat row_softmax(const Mat& sim, double tau) {
  Mat p(sim.rows(), sim.cols());
  for (Index i = 0; i < sim.rows(); ++i) {
    const double shift = sim.row(i).maxCoeff();
    RowVec e = ((sim.row(i).array() - shift) / tau).exp();
    p.row(i) = e / e.sum();
  }
  return p;
}

double directed_loss(const Mat& sim, double tau) {
  const Index n = sim.rows();
  double total = 0.0;
  for (Index i = 0; i < n; ++i) {
    const double shift = sim.row(i).maxCoeff();
    const double lse = std::log(((sim.row(i).array() - shift) / tau).exp().sum()) + shift / tau;
    total += lse - sim(i, i) / tau;
  }
  return total / static_cast<double>(n);
}

Mat directed_grad(const Mat& sim, double tau) {
  const Index n = sim.rows();
  Mat g = row_softmax(sim, tau);
  g.diagonal().array() -= 1.0;
  g /= static_cast<double>(n) * tau;
  return g;
}

}  // namespace

void InfoNceConfig::validate() const {
  if (!(temperature > 0.0)) {
    throw ConfigError("infonce temperature must be > 0");
  }
}

Mat cosine_sim_matrix(const Mat& code, const Mat& audio) {
  if (code.rows() != audio.rows() || code.cols() != audio.cols()) {
    throw DimensionError("cosine_sim_matrix: inputs must share shape, got " +
                         std::to_string(code.rows()) + "x" + std::to_string(code.cols()) +
                         " vs " + std::to_string(audio.rows()) + "x" +
                         std::to_string(audio.cols()));
  }
  const NormalizedRows c = normalize_rows(code, "code matrix");
  const NormalizedRows a = normalize_rows(audio, "audio matrix");
  return c.unit * a.unit.transpose();
}

double infonce_loss(const Mat& sim, const InfoNceConfig& cfg) {
  cfg.validate();
  check_square(sim);
  double loss = directed_loss(sim, cfg.temperature);
  if (cfg.symmetric) {
    loss = 0.5 * (loss + directed_loss(sim.transpose(), cfg.temperature));
  }
  return loss;
}

Mat infonce_grad(const Mat& sim, const InfoNceConfig& cfg) {
  cfg.validate();
  check_square(sim);
  Mat g = directed_grad(sim, cfg.temperature);
  if (cfg.symmetric) {
    g = 0.5 * (g + Mat(directed_grad(sim.transpose(), cfg.temperature).transpose()));
  }
  return g;
}

CosineBackward cosine_sim_backward(const Mat& code, const Mat& audio, const Mat& d_sim) {
  if (d_sim.rows() != code.rows() || d_sim.cols() != audio.rows()) {
    throw DimensionError("cosine_sim_backward: gradient shape mismatch");
  }
  const NormalizedRows c = normalize_rows(code, "code matrix");
  const NormalizedRows a = normalize_rows(audio, "audio matrix");

  CosineBackward out;
  // d cos(c_i, a_j) / d c_i = (a_hat_j - S_ij c_hat_i) / |c_i|
  Mat d_unit_c = d_sim * a.unit;
  out.d_code.resize(code.rows(), code.cols());
  for (Index i = 0; i < code.rows(); ++i) {
    const double along = d_unit_c.row(i).dot(c.unit.row(i));
    out.d_code.row(i) = (d_unit_c.row(i) - along * c.unit.row(i)) / c.norms(i);
  }
  Mat d_unit_a = d_sim.transpose() * c.unit;
  out.d_audio.resize(audio.rows(), audio.cols());
  for (Index i = 0; i < audio.rows(); ++i) {
    const double along = d_unit_a.row(i).dot(a.unit.row(i));
    out.d_audio.row(i) = (d_unit_a.row(i) - along * a.unit.row(i)) / a.norms(i);
  }
  return out;
}

}  // namespace sonalign::contrastive
