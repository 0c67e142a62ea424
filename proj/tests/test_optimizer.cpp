#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "oneshot/optimizer.hpp"

using namespace oneshot;

namespace {

Parameter scalar(float value, float grad) {
  Parameter p{"p", Tensor({1}, value), Tensor({1}, grad)};
  return p;
}

}  // namespace

TEST(Adam, DefaultsAreTableValues) {
  const AdamHyper h;
  EXPECT_EQ(h.lr, 5e-4);
  EXPECT_EQ(h.beta1, 0.9);
  EXPECT_EQ(h.beta2, 0.999);
  EXPECT_EQ(h.eps, 1e-8);
}

TEST(Adam, ZeroGradientLeavesParametersUnchanged) {
  std::vector<Parameter> ps{Parameter{"w", Tensor({3}, std::vector<float>{1, -2, 3}), {}}};
  ps[0].zero_grad();
  AdamState st;
  for (int i = 0; i < 5; ++i) adam_step(ps, st);
  EXPECT_EQ(ps[0].value, Tensor({3}, std::vector<float>({1, -2, 3})));
  for (float v : st.m[0].data()) EXPECT_EQ(v, 0.0f);
  for (float v : st.v[0].data()) EXPECT_EQ(v, 0.0f);
  EXPECT_EQ(st.t, 5u);
}

TEST(Adam, FirstStepMovesByLearningRate) {
  for (float g : {0.3f, -7.0f, 1e-3f}) {
    std::vector<Parameter> ps{scalar(1.0f, g)};
    AdamState st;
    adam_step(ps, st);
    const double expected = 5e-4 * std::abs(g) / (std::abs(g) + 1e-8);
    EXPECT_NEAR(std::abs(ps[0].value[0] - 1.0), expected, 1e-7);
    EXPECT_EQ(ps[0].value[0] < 1.0f, g > 0.0f);
  }
}

TEST(Adam, ThreeStepsMatchScalarRecurrence) {
  std::vector<Parameter> ps{scalar(1.0f, 0.0f)};
  AdamState st;
  double p = 1.0, m = 0.0, v = 0.0;
  for (int t = 1; t <= 3; ++t) {
    ps[0].grad[0] = 2.0f * ps[0].value[0];
    adam_step(ps, st);

    const double g = 2.0 * p;
    m = 0.9 * m + 0.1 * g;
    v = 0.999 * v + 0.001 * g * g;
    const double mh = m / (1.0 - std::pow(0.9, t));
    const double vh = v / (1.0 - std::pow(0.999, t));
    p -= 5e-4 * mh / (std::sqrt(vh) + 1e-8);
    EXPECT_NEAR(ps[0].value[0], p, 1e-7) << "step " << t;
  }
  EXPECT_EQ(st.t, 3u);
}

TEST(Adam, NeverPopulatedGradientIsAContractError) {
  std::vector<Parameter> ps{Parameter{"w", Tensor({2}), {}}};
  AdamState st;
  EXPECT_THROW(adam_step(ps, st), ContractError);
  EXPECT_EQ(st.t, 0u);
}

TEST(Adam, StateSizeMismatchRejected) {
  std::vector<Parameter> ps{scalar(1, 1), scalar(2, 1)};
  AdamState st;
  adam_step(ps, st);
  std::vector<Parameter> fewer{scalar(1, 1)};
  EXPECT_THROW(adam_step(fewer, st), ContractError);
}

TEST(Adam, BoundedStepsMonotoneDescentAndDeterminism) {
  std::mt19937_64 gen(1);
  std::uniform_real_distribution<double> u(-1, 1), a(0.5, 3);
  const std::size_t n = 16;
  std::vector<double> curv(n);
  for (auto& c : curv) c = a(gen);
  Tensor start({n});
  for (auto& x : start.data()) x = float(u(gen));

  auto run = [&](std::vector<double>* losses, std::vector<float>* out) {
    std::vector<Parameter> ps{Parameter{"w", start, {}}};
    AdamState st;
    for (int step = 0; step < 200; ++step) {
      ps[0].zero_grad();
      double loss = 0;
      for (std::size_t i = 0; i < n; ++i) {
        loss += 0.5 * curv[i] * ps[0].value[i] * ps[0].value[i];
        ps[0].grad[i] = float(curv[i] * ps[0].value[i]);
      }
      if (losses) losses->push_back(loss);
      const Tensor before = ps[0].value;
      adam_step(ps, st);
      for (std::size_t i = 0; i < n; ++i) {
        EXPECT_LE(std::abs(ps[0].value[i] - before[i]), 10 * 5e-4);
        EXPECT_GE(st.v[0][i], 0.0f);
      }
    }
    if (out) out->assign(ps[0].value.data().begin(), ps[0].value.data().end());
  };
  std::vector<double> losses;
  std::vector<float> a1, a2;
  run(&losses, &a1);
  run(nullptr, &a2);
  EXPECT_EQ(a1, a2);
  for (std::size_t s = 11; s < losses.size(); ++s) EXPECT_LE(losses[s], losses[s - 1] + 1e-6) << s;
  EXPECT_LT(losses.back(), losses.front());
}
