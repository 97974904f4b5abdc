#pragma once

#include <Eigen/Dense>

#include "sonalign/errors.hpp"
#include "sonalign/rng.hpp"

namespace sonalign {

// Row-major to match the on-disk layout of checkpoints and record files.
using Mat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using RowVec = Eigen::RowVectorXd;
using Index = Eigen::Index;

inline bool all_finite(const Mat& m) { return m.allFinite(); }

inline void require_finite(const Mat& m, const char* what) {
  if (!m.allFinite()) {
    throw NumericError(std::string(what) + " contains non-finite entries");
  }
}

// Entries drawn row by row from rng.normal(); deterministic per seed.
inline Mat gaussian_matrix(Index rows, Index cols, Rng& rng) {
  Mat m(rows, cols);
  for (Index i = 0; i < rows; ++i) {
    for (Index j = 0; j < cols; ++j) {
      m(i, j) = rng.normal();
    }
  }
  return m;
}

}  // namespace sonalign
