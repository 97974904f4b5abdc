#pragma once

#include <cstdint>
#include <vector>

#include "sonalign/matrix.hpp"

namespace sonalign::metrics {

// Linear centered kernel alignment between two representations with matching
// rows: Gram matrices K = XX^T and L = YY^T are double-centered and compared
// by Frobenius inner product. Invariant to orthogonal transforms and isotropic
// scaling; 0 when either centered Gram vanishes. Requires n >= 3.
double linear_cka(const Mat& x, const Mat& y);

// Mean canonical correlation: singular values of the whitened cross-covariance
// (Sxx + ridge*I)^{-1/2} Sxy (Syy + ridge*I)^{-1/2}, clamped to [0, 1], summed
// and divided by min(cols(x), cols(y)). Requires rows(x) == rows(y) and
// n > max(cols). Throws SingularityError on rank deficiency when ridge == 0.
double mean_cca(const Mat& x, const Mat& y, double ridge = 1e-6);

// Sample Pearson correlation; throws DegenerateInputError on constant input.
double pearson(const std::vector<double>& x, const std::vector<double>& y);

// Pearson correlation of average-ranked data; ties get the mean of the ranks
// they span.
double spearman(const std::vector<double>& x, const std::vector<double>& y);

enum class Statistic { kPearson, kSpearman };

// Two-sided permutation p-value: (1 + #{perms with |stat| >= |observed|}) /
// (trials + 1). Deterministic per seed; trials must be >= 100.
double perm_pvalue(const std::vector<double>& x, const std::vector<double>& y,
                   Statistic statistic, int trials, uint64_t seed);

// Upper-triangle (i < j) cosine similarities of the rows of e, in row-major
// pair order; n rows give n(n-1)/2 values.
std::vector<double> pairwise_cosine_vector(const Mat& e);

}  // namespace sonalign::metrics
