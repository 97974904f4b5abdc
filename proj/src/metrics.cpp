#include "sonalign/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include "sonalign/errors.hpp"
#include "sonalign/rng.hpp"

namespace sonalign::metrics {

namespace {

// K - row means - col means + grand mean, i.e. H K H with H = I - (1/n) 1 1^T.
Mat double_center(const Mat& k) {
  const Eigen::VectorXd row_mean = k.rowwise().mean();
  const RowVec col_mean = k.colwise().mean();
  const double grand = col_mean.mean();
  Mat out = k;
  out.colwise() -= row_mean;
  out.rowwise() -= col_mean;
  out.array() += grand;
  return out;
}

// (S + ridge*I)^{-1/2} via symmetric eigendecomposition.
Mat inverse_sqrt_spd(const Mat& s, double ridge) {
  Mat shifted = s;
  shifted.diagonal().array() += ridge;
  Eigen::SelfAdjointEigenSolver<Mat> eig(shifted);
  if (eig.info() != Eigen::Success) {
    throw NumericError("eigendecomposition failed in mean_cca");
  }
  const Eigen::VectorXd lam = eig.eigenvalues();
  const double lam_max = lam.maxCoeff();
  const double tol = std::max(lam_max, 0.0) * 1e-13;
  Eigen::VectorXd inv_sqrt(lam.size());
  for (Index i = 0; i < lam.size(); ++i) {
    if (lam(i) <= tol) {
      throw SingularityError("covariance is rank deficient; retry with ridge > 0");
    }
    inv_sqrt(i) = 1.0 / std::sqrt(lam(i));
  }
  return eig.eigenvectors() * inv_sqrt.asDiagonal() * eig.eigenvectors().transpose();
}

Mat centered_columns(const Mat& x) {
  Mat out = x;
  out.rowwise() -= RowVec(x.colwise().mean());
  return out;
}

double stat_value(Statistic s, const std::vector<double>& x, const std::vector<double>& y) {
  return s == Statistic::kPearson ? pearson(x, y) : spearman(x, y);
}

std::vector<double> average_ranks(const std::vector<double>& v) {
  const size_t n = v.size();
  std::vector<size_t> order(n);
  std::iota(order.begin(), order.end(), size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](size_t a, size_t b) { return v[a] < v[b]; });
  std::vector<double> ranks(n);
  size_t i = 0;
  while (i < n) {
    size_t j = i;
    while (j + 1 < n && v[order[j + 1]] == v[order[i]]) ++j;
    // 1-based ranks i+1 .. j+1 share their mean
    const double mean_rank = 0.5 * static_cast<double>(i + j) + 1.0;
    for (size_t k = i; k <= j; ++k) ranks[order[k]] = mean_rank;
    i = j + 1;
  }
  return ranks;
}

}  // namespace

double linear_cka(const Mat& x, const Mat& y) {
  if (x.rows() != y.rows()) {
    throw DimensionError("linear_cka: row counts differ");
  }
  if (x.rows() < 3) {
    throw DimensionError("linear_cka needs at least 3 samples, got " +
                         std::to_string(x.rows()));
  }
  const Mat kc = double_center(Mat(x * x.transpose()));
  const Mat lc = double_center(Mat(y * y.transpose()));
  const double denom = kc.norm() * lc.norm();
  if (denom == 0.0) return 0.0;
  const double hsic = (kc.array() * lc.array()).sum();
  return std::max(0.0, hsic / denom);
}

double mean_cca(const Mat& x, const Mat& y, double ridge) {
  if (x.rows() != y.rows()) {
    throw DimensionError("mean_cca: row counts differ");
  }
  if (ridge < 0.0) {
    throw ConfigError("mean_cca: ridge must be >= 0");
  }
  const Index n = x.rows();
  const Index dx = x.cols();
  const Index dy = y.cols();
  if (n <= std::max(dx, dy)) {
    throw DimensionError("mean_cca needs more samples than the wider matrix (n=" +
                         std::to_string(n) + ", max dim=" + std::to_string(std::max(dx, dy)) + ")");
  }

  const Mat xc = centered_columns(x);
  const Mat yc = centered_columns(y);
  const double scale = 1.0 / static_cast<double>(n - 1);
  const Mat sxx = scale * (xc.transpose() * xc);
  const Mat syy = scale * (yc.transpose() * yc);
  const Mat sxy = scale * (xc.transpose() * yc);

  const Mat wx = inverse_sqrt_spd(sxx, ridge);
  const Mat wy = inverse_sqrt_spd(syy, ridge);
  const Mat t = wx * sxy * wy;

  Eigen::JacobiSVD<Mat> svd(t);
  const Eigen::VectorXd sv = svd.singularValues();
  double sum = 0.0;
  for (Index i = 0; i < sv.size(); ++i) {
    sum += std::clamp(sv(i), 0.0, 1.0);
  }
  return sum / static_cast<double>(std::min(dx, dy));
}

double pearson(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size()) {
    throw DimensionError("pearson: sequence lengths differ");
  }
  const size_t n = x.size();
  if (n < 2) {
    throw DimensionError("pearson needs at least 2 observations");
  }
  const auto [xmin, xmax] = std::minmax_element(x.begin(), x.end());
  const auto [ymin, ymax] = std::minmax_element(y.begin(), y.end());
  if (*xmin == *xmax || *ymin == *ymax) {
    throw DegenerateInputError("pearson: input sequence has zero variance");
  }
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(n);
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / static_cast<double>(n);
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (size_t i = 0; i < n; ++i) {
    const double dx = x[i] - mx;
    const double dy = y[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

double spearman(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size()) {
    throw DimensionError("spearman: sequence lengths differ");
  }
  return pearson(average_ranks(x), average_ranks(y));
}

double perm_pvalue(const std::vector<double>& x, const std::vector<double>& y,
                   Statistic statistic, int trials, uint64_t seed) {
  if (trials < 100) {
    throw ConfigError("perm_pvalue: trials must be >= 100");
  }
  const double observed = std::abs(stat_value(statistic, x, y));
  int hits = 0;
  std::vector<double> permuted = y;
  for (int t = 0; t < trials; ++t) {
    // counter-based stream per trial keeps results order-independent
    Rng rng(derive_seed(seed, 0xC0DA, static_cast<uint64_t>(t)));
    permuted = y;
    rng.shuffle(permuted);
    if (std::abs(stat_value(statistic, x, permuted)) >= observed) ++hits;
  }
  return (1.0 + hits) / (trials + 1.0);
}

std::vector<double> pairwise_cosine_vector(const Mat& e) {
  const Index n = e.rows();
  if (n < 2) {
    throw DimensionError("pairwise_cosine_vector needs at least 2 rows");
  }
  Eigen::VectorXd norms(n);
  for (Index i = 0; i < n; ++i) {
    norms(i) = e.row(i).norm();
    if (norms(i) == 0.0) {
      throw DegenerateInputError("pairwise_cosine_vector: row " + std::to_string(i) +
                                 " has zero norm");
    }
  }
  std::vector<double> out;
  out.reserve(static_cast<size_t>(n) * (n - 1) / 2);
  for (Index i = 0; i < n; ++i) {
    for (Index j = i + 1; j < n; ++j) {
      out.push_back(e.row(i).dot(e.row(j)) / (norms(i) * norms(j)));
    }
  }
  return out;
}

}  // namespace sonalign::metrics
