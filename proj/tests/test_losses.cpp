#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "oneshot/grad_check.hpp"
#include "oneshot/losses.hpp"
#include "test_support.hpp"

using namespace oneshot;

namespace {
const ContrastiveConfig kM2{2.0};
}

TEST(Contrastive, KnownValues) {
  EXPECT_EQ(contrastive_loss(0.0, PairLabel::Same, kM2).loss, 0.0);
  EXPECT_EQ(contrastive_loss(3.0, PairLabel::Different, kM2).loss, 0.0);
  EXPECT_EQ(contrastive_loss(3.0, PairLabel::Different, kM2).grad, 0.0);
  EXPECT_DOUBLE_EQ(contrastive_loss(1.0, PairLabel::Different, kM2).loss, 0.5);
  EXPECT_DOUBLE_EQ(contrastive_loss(1.0, PairLabel::Different, kM2).grad, -1.0);
  EXPECT_DOUBLE_EQ(contrastive_loss(2.0, PairLabel::Same, kM2).loss, 2.0);
  EXPECT_DOUBLE_EQ(contrastive_loss(2.0, PairLabel::Same, kM2).grad, 2.0);
}

TEST(Contrastive, RejectsNegativeDistanceAndBadMargin) {
  EXPECT_THROW(contrastive_loss(-1e-9, PairLabel::Same, kM2), DomainError);
  EXPECT_THROW(ContrastiveConfig{0.0}.validate(), ConfigError);
  EXPECT_THROW(ContrastiveConfig{-1.0}.validate(), ConfigError);
  EXPECT_NO_THROW(kM2.validate());
}

TEST(Contrastive, ZeroExactlyOnMatchedOrSeparatedPairs) {
  std::mt19937_64 gen(1);
  std::uniform_real_distribution<double> dist(0.0, 6.0), margin(0.1, 4.0);
  for (int i = 0; i < 10000; ++i) {
    const ContrastiveConfig cfg{margin(gen)};
    const double d = i % 10 == 0 ? 0.0 : (i % 10 == 1 ? cfg.margin : dist(gen));
    const double same = contrastive_loss(d, PairLabel::Same, cfg).loss;
    const double diff = contrastive_loss(d, PairLabel::Different, cfg).loss;
    EXPECT_GE(same, 0.0);
    EXPECT_GE(diff, 0.0);
    EXPECT_EQ(same == 0.0, d == 0.0) << d;
    EXPECT_EQ(diff == 0.0, d >= cfg.margin) << d << " m " << cfg.margin;
  }
}

TEST(Contrastive, MonotoneBranches) {
  std::mt19937_64 gen(2);
  std::uniform_real_distribution<double> dist(0.0, 5.0);
  for (int i = 0; i < 10000; ++i) {
    double a = dist(gen), b = dist(gen);
    if (a > b) std::swap(a, b);
    if (a == b) continue;
    if (a > 0.0) EXPECT_LT(contrastive_loss(a, PairLabel::Same, kM2).loss, contrastive_loss(b, PairLabel::Same, kM2).loss);
    EXPECT_GE(contrastive_loss(a, PairLabel::Different, kM2).loss, contrastive_loss(b, PairLabel::Different, kM2).loss);
  }
}

TEST(Contrastive, ContinuousAndSmoothAtMargin) {
  for (double eps : {1e-3, 1e-5, 1e-7}) {
    const auto below = contrastive_loss(2.0 - eps, PairLabel::Different, kM2);
    const auto above = contrastive_loss(2.0 + eps, PairLabel::Different, kM2);
    EXPECT_NEAR(below.loss, above.loss, eps * eps);
    EXPECT_NEAR(below.grad, above.grad, 2 * eps);
  }
  EXPECT_EQ(contrastive_loss(2.0, PairLabel::Different, kM2).loss, 0.0);
  EXPECT_EQ(contrastive_loss(2.0, PairLabel::Different, kM2).grad, 0.0);
}

TEST(Contrastive, DerivativeMatchesFiniteDifferences) {
  const double h = 1e-5;
  for (int k = 1; k <= 39; ++k) {
    const double d = 0.1 * k;
    for (PairLabel y : {PairLabel::Same, PairLabel::Different}) {
      const double numeric =
          (contrastive_loss(d + h, y, kM2).loss - contrastive_loss(d - h, y, kM2).loss) / (2 * h);
      EXPECT_NEAR(contrastive_loss(d, y, kM2).grad, numeric, 1e-4) << "D=" << d;
    }
  }
}

TEST(BatchContrastive, SingleAndZero) {
  const std::vector<double> one{1.3};
  const std::vector<PairLabel> yd{PairLabel::Different};
  const auto b = batch_contrastive_loss(one, yd, kM2);
  const auto s = contrastive_loss(1.3, PairLabel::Different, kM2);
  EXPECT_EQ(b.loss, s.loss);
  EXPECT_EQ(b.grads[0], s.grad);

  const std::vector<double> zeros(8, 0.0);
  const std::vector<PairLabel> same(8, PairLabel::Same);
  EXPECT_EQ(batch_contrastive_loss(zeros, same, kM2).loss, 0.0);
  EXPECT_THROW(batch_contrastive_loss(zeros, yd, kM2), ShapeError);
}

TEST(BatchContrastive, MatchesScalarLoop) {
  std::mt19937_64 gen(3);
  std::uniform_real_distribution<double> dist(0.0, 4.0);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t n = 1 + trial % 33;
    std::vector<double> d(n);
    std::vector<PairLabel> y(n);
    double sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      d[i] = dist(gen);
      y[i] = gen() % 2 ? PairLabel::Same : PairLabel::Different;
      const double hinge = std::max(0.0, 2.0 - d[i]);
      sum += y[i] == PairLabel::Same ? 0.5 * d[i] * d[i] : 0.5 * hinge * hinge;
    }
    const auto b = batch_contrastive_loss(d, y, kM2);
    EXPECT_NEAR(b.loss, sum / double(n), 1e-12);
    for (std::size_t i = 0; i < n; ++i) {
      EXPECT_NEAR(b.grads[i], contrastive_loss(d[i], y[i], kM2).grad / double(n), 1e-15);
    }
  }
}

TEST(CrossEntropy, UniformAndConfident) {
  EXPECT_NEAR(cross_entropy(Tensor({6}, 0.5f), 2).loss, std::log(6.0), 1e-7);
  EXPECT_NEAR(cross_entropy(Tensor({6}, 0.1f), 0).loss, 1.791759, 1e-6);
  Tensor p({6}, 1e-9f);
  p[3] = 0.999999f;
  EXPECT_LT(cross_entropy(p, 3).loss, 1e-5);
  EXPECT_THROW(cross_entropy(p, 6), IndexError);
  EXPECT_THROW(softmax_cross_entropy(p, 7), IndexError);
}

TEST(CrossEntropy, LogFloorKeepsLossFinite) {
  Tensor p({3}, 0.5f);
  p[1] = 0.0f;
  const auto r = cross_entropy(p, 1);
  EXPECT_NEAR(r.loss, -std::log(kLogFloor), 1e-9);
  EXPECT_TRUE(all_finite(r.grad.data()));
}

TEST(CrossEntropy, GradientMatchesFiniteDifferences) {
  std::mt19937_64 gen(4);
  const GradCheckOptions opts{1e-3, Precision::Float32, 1e-4};
  for (int trial = 0; trial < 20; ++trial) {
    const Tensor p = testing_support::random_tensor({6}, gen, 0.05, 0.95);
    const std::size_t t = trial % 6;
    const auto r = cross_entropy(p, t);
    // Independent form of the renormalized loss.
    auto f = [t](std::span<const double> q) {
      double s = 0;
      for (double v : q) s += v;
      return -std::log(q[t] / s);
    };
    const auto res = grad_check(f, testing_support::to_doubles(p), testing_support::to_doubles(r.grad), opts);
    EXPECT_LE(res.max_rel_error, 1e-3);
    auto lib = [t](std::span<const double> q) {
      return cross_entropy(testing_support::from_doubles<float>({6}, q), t).loss;
    };
    EXPECT_LE(grad_check(lib, testing_support::to_doubles(p), testing_support::to_doubles(r.grad), opts).max_rel_error,
              1e-3);
  }
}

TEST(SoftmaxCrossEntropy, GradientIsSoftmaxMinusOneHot) {
  std::mt19937_64 gen(5);
  const GradCheckOptions opts{1e-3, Precision::Float32, 1e-4};
  for (int trial = 0; trial < 20; ++trial) {
    const Tensor z = testing_support::random_tensor({6}, gen, -3, 3);
    const std::size_t t = trial % 6;
    const auto r = softmax_cross_entropy(z, t);
    auto f = [t](std::span<const double> q) {
      double mx = q[0];
      for (double v : q) mx = std::max(mx, v);
      double s = 0;
      for (double v : q) s += std::exp(v - mx);
      return -(q[t] - mx - std::log(s));
    };
    EXPECT_LE(grad_check(f, testing_support::to_doubles(z), testing_support::to_doubles(r.grad), opts).max_rel_error,
              1e-3);
  }
}
