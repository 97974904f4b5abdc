#include <cmath>

#include <doctest.h>

#include "sonalign/contrastive.hpp"
#include "sonalign/errors.hpp"
#include "sonalign/rng.hpp"

using namespace sonalign;
using namespace sonalign::contrastive;

namespace {

Mat random_matrix(Index rows, Index cols, uint64_t seed) {
  Rng rng(seed);
  return gaussian_matrix(rows, cols, rng);
}

double fd_loss_wrt(const Mat& s, const InfoNceConfig& cfg, Index i, Index j, double h = 1e-6) {
  Mat plus = s, minus = s;
  plus(i, j) += h;
  minus(i, j) -= h;
  return (infonce_loss(plus, cfg) - infonce_loss(minus, cfg)) / (2.0 * h);
}

}  // namespace

TEST_CASE("cosine similarity closed forms") {
  Mat basis(2, 2);
  basis << 1, 0, 0, 1;
  const Mat s = cosine_sim_matrix(basis, basis);
  CHECK(s(0, 0) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(s(1, 1) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(s(0, 1) == doctest::Approx(0.0).epsilon(1e-12));

  Mat c(1, 2), a(1, 2);
  c << 1, 0;
  a << 1, 1;
  CHECK(cosine_sim_matrix(c, a)(0, 0) == doctest::Approx(1.0 / std::sqrt(2.0)).epsilon(1e-12));
}

TEST_CASE("cosine similarity is scale invariant and bounded") {
  const Mat c = random_matrix(6, 4, 1);
  Mat a = random_matrix(6, 4, 2);
  const Mat s1 = cosine_sim_matrix(c, a);
  a.row(3) *= 5.0;
  const Mat s2 = cosine_sim_matrix(c, a);
  CHECK((s1 - s2).cwiseAbs().maxCoeff() < 1e-12);
  CHECK(s1.cwiseAbs().maxCoeff() <= 1.0 + 1e-9);
}

TEST_CASE("cosine similarity rejects zero-norm rows and shape mismatches") {
  Mat c = random_matrix(3, 4, 3);
  const Mat a = random_matrix(3, 4, 4);
  c.row(2).setZero();
  CHECK_THROWS_WITH_AS(cosine_sim_matrix(c, a), doctest::Contains("row 2"),
                       DegenerateInputError);
  CHECK_THROWS_AS(cosine_sim_matrix(random_matrix(3, 4, 5), random_matrix(4, 4, 6)),
                  DimensionError);
}

TEST_CASE("infonce loss closed forms") {
  const InfoNceConfig unit{1.0, false};

  Mat one(1, 1);
  one << 0.37;
  CHECK(infonce_loss(one, unit) == 0.0);  // softmax over a single element

  Mat id2(2, 2);
  id2 << 1, 0, 0, 1;
  CHECK(infonce_loss(id2, unit) == doctest::Approx(std::log(1.0 + std::exp(-1.0))).epsilon(1e-9));

  for (double s : {-0.7, 0.0, 0.9}) {
    Mat uniform = Mat::Constant(5, 5, s);
    CHECK(infonce_loss(uniform, unit) == doctest::Approx(std::log(5.0)).epsilon(1e-12));
    CHECK(infonce_loss(uniform, InfoNceConfig{0.07, false}) ==
          doctest::Approx(std::log(5.0)).epsilon(1e-12));
  }
}

TEST_CASE("infonce loss is non-negative and finite at harsh temperatures") {
  Rng rng(8);
  for (int trial = 0; trial < 30; ++trial) {
    Mat s(6, 6);
    for (Index i = 0; i < 6; ++i) {
      for (Index j = 0; j < 6; ++j) s(i, j) = rng.uniform(-1, 1);
    }
    for (double tau : {0.01, 0.07, 1.0}) {
      const double loss = infonce_loss(s, {tau, false});
      CHECK(std::isfinite(loss));
      CHECK(loss >= 0.0);
    }
  }
  CHECK_THROWS_AS(infonce_loss(Mat::Zero(2, 2), InfoNceConfig{0.0, false}), ConfigError);
  CHECK_THROWS_AS(infonce_loss(Mat::Zero(2, 3), InfoNceConfig{1.0, false}), DimensionError);
}

TEST_CASE("raising a diagonal entry lowers the loss") {
  Rng rng(9);
  for (int trial = 0; trial < 20; ++trial) {
    Mat s(4, 4);
    for (Index i = 0; i < 4; ++i) {
      for (Index j = 0; j < 4; ++j) s(i, j) = rng.uniform(-1, 1);
    }
    const InfoNceConfig cfg{0.5, false};
    const double before = infonce_loss(s, cfg);
    const Index i = static_cast<Index>(rng.below(4));
    s(i, i) += 0.05 + rng.uniform(0, 0.2);
    CHECK(infonce_loss(s, cfg) < before);
  }
}

TEST_CASE("infonce gradient closed forms") {
  const InfoNceConfig unit{1.0, false};

  // uniform similarities: softmax is flat at 1/n, so the diagonal pulls -(1-1/n)/(n tau)
  Mat uniform = Mat::Constant(2, 2, 0.3);
  const Mat g = infonce_grad(uniform, unit);
  CHECK(g(0, 0) == doctest::Approx(-0.25).epsilon(1e-12));
  CHECK(g(0, 1) == doctest::Approx(0.25).epsilon(1e-12));
  CHECK(g(1, 0) == doctest::Approx(0.25).epsilon(1e-12));
  CHECK(g(1, 1) == doctest::Approx(-0.25).epsilon(1e-12));
  // the same value must agree with finite differences of the loss itself
  CHECK(g(0, 0) == doctest::Approx(fd_loss_wrt(uniform, unit, 0, 0)).epsilon(1e-6));

  // rows of the one-directional gradient sum to zero
  const Mat s = random_matrix(5, 5, 10);
  const Mat gs = infonce_grad(s, unit);
  for (Index i = 0; i < 5; ++i) {
    CHECK(std::abs(gs.row(i).sum()) < 1e-12);
  }
}

TEST_CASE("infonce gradient matches finite differences") {
  Rng rng(11);
  for (double tau : {0.05, 0.07, 0.5, 1.0}) {
    for (bool symmetric : {false, true}) {
      const InfoNceConfig cfg{tau, symmetric};
      Mat s(5, 5);
      for (Index i = 0; i < 5; ++i) {
        for (Index j = 0; j < 5; ++j) s(i, j) = rng.uniform(-1, 1);  // cosine range
      }
      const Mat g = infonce_grad(s, cfg);
      Mat fd(5, 5);
      for (Index i = 0; i < 5; ++i) {
        for (Index j = 0; j < 5; ++j) fd(i, j) = fd_loss_wrt(s, cfg, i, j);
      }
      CHECK((g - fd).norm() / g.norm() < 1e-6);
    }
  }
}

TEST_CASE("cosine chain rule matches end-to-end finite differences") {
  const InfoNceConfig cfg{0.2, false};
  const Mat c0 = random_matrix(4, 3, 21);
  const Mat a0 = random_matrix(4, 3, 22);

  auto loss_of = [&](const Mat& c, const Mat& a) {
    return infonce_loss(cosine_sim_matrix(c, a), cfg);
  };

  const Mat d_sim = infonce_grad(cosine_sim_matrix(c0, a0), cfg);
  const CosineBackward back = cosine_sim_backward(c0, a0, d_sim);

  const double h = 1e-6;
  for (Index i = 0; i < 4; ++i) {
    for (Index j = 0; j < 3; ++j) {
      Mat cp = c0, cm = c0;
      cp(i, j) += h;
      cm(i, j) -= h;
      double fd = (loss_of(cp, a0) - loss_of(cm, a0)) / (2.0 * h);
      double rel = std::abs(back.d_code(i, j) - fd) /
                   std::max({1e-6, std::abs(back.d_code(i, j)), std::abs(fd)});
      CHECK(rel < 1e-6);

      Mat ap = a0, am = a0;
      ap(i, j) += h;
      am(i, j) -= h;
      fd = (loss_of(c0, ap) - loss_of(c0, am)) / (2.0 * h);
      rel = std::abs(back.d_audio(i, j) - fd) /
            std::max({1e-6, std::abs(back.d_audio(i, j)), std::abs(fd)});
      CHECK(rel < 1e-6);
    }
  }
}

TEST_CASE("symmetric mode averages both directions") {
  const Mat s = random_matrix(4, 4, 30);
  const InfoNceConfig one_way{0.3, false};
  const InfoNceConfig both{0.3, true};
  const double direct = infonce_loss(s, one_way);
  const double reverse = infonce_loss(Mat(s.transpose()), one_way);
  CHECK(infonce_loss(s, both) == doctest::Approx(0.5 * (direct + reverse)).epsilon(1e-12));
}
