#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "oneshot/grad_check.hpp"
#include "oneshot/losses.hpp"
#include "oneshot/model.hpp"
#include "oneshot/ops.hpp"
#include "oneshot/rng.hpp"
#include "test_support.hpp"

using namespace oneshot;
using testing_support::random_tensor;

namespace {

NetworkSpec small_spec() {
  NetworkSpec s;
  s.input_side = 8;
  s.conv_channels = {2, 3, 2};
  s.fc_sizes = {12, 10, 5};
  return s;
}

NetworkSpec tiny_spec() {
  NetworkSpec s;
  s.input_side = 8;
  s.conv_channels = {2, 2, 2};
  s.fc_sizes = {16, 16, 4};
  return s;
}

Network randomized(const NetworkSpec& spec, std::uint64_t seed) {
  Network net = init_network(spec, seed);
  // Non-zero biases so the oracle comparison exercises them.
  std::mt19937_64 gen(seed);
  for (auto& p : net.params()) {
    if (p.name.find(".bias") != std::string::npos) p.value = random_tensor(p.value.shape(), gen, -0.1, 0.1);
  }
  return net;
}

// Layer-by-layer evaluation written without the library's kernels.
std::vector<double> straight_line_forward(const Network& net, const Tensor& image) {
  const NetworkSpec& spec = net.spec();
  const auto& ps = net.params();
  const std::size_t n = spec.input_side;
  std::vector<double> act(image.data().begin(), image.data().end());
  std::size_t cin = 1, k = 0;
  for (std::size_t co : spec.conv_channels) {
    const Tensor& w = ps[k++].value;
    const Tensor& b = ps[k++].value;
    std::vector<double> out(co * n * n);
    for (std::size_t o = 0; o < co; ++o) {
      for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
          double acc = b[o];
          for (std::size_t c = 0; c < cin; ++c) {
            for (int du = -1; du <= 1; ++du) {
              for (int dv = -1; dv <= 1; ++dv) {
                const long r = long(i) + du, q = long(j) + dv;
                if (r < 0 || q < 0 || r >= long(n) || q >= long(n)) continue;
                acc += act[(c * n + r) * n + q] * w[((o * cin + c) * 3 + (du + 1)) * 3 + (dv + 1)];
              }
            }
          }
          out[(o * n + i) * n + j] = std::max(acc, 0.0);
        }
      }
    }
    act = std::move(out);
    cin = co;
  }
  for (std::size_t l = 0; l < spec.fc_sizes.size(); ++l) {
    const Tensor& w = ps[k++].value;
    const Tensor& b = ps[k++].value;
    const std::size_t dout = spec.fc_sizes[l], din = act.size();
    std::vector<double> out(dout);
    for (std::size_t o = 0; o < dout; ++o) {
      double acc = b[o];
      for (std::size_t i = 0; i < din; ++i) acc += w[o * din + i] * act[i];
      const bool last = l + 1 == spec.fc_sizes.size();
      out[o] = (last && !spec.final_relu) ? acc : std::max(acc, 0.0);
    }
    act = std::move(out);
  }
  return act;
}

Tensor random_image(std::size_t side, std::mt19937_64& gen) { return random_tensor({1, side, side}, gen); }

}  // namespace

TEST(NetworkSpec, PaperParameterCount) {
  const std::size_t expected = (4 * 1 * 9 + 4) + (8 * 4 * 9 + 8) + (8 * 8 * 9 + 8) + (80000 * 500 + 500) +
                               (500 * 500 + 500) + (500 * 5 + 5);
  EXPECT_EQ(expected, 40254425u);
  EXPECT_EQ(parameter_count(default_encoder_spec()), expected);
  EXPECT_EQ(parameter_count(default_classifier_spec(6)), expected - 2505 + (500 * 6 + 6));
}

TEST(NetworkSpec, PaperDefaults) {
  const NetworkSpec enc = default_encoder_spec();
  EXPECT_EQ(enc.input_side, 100u);
  EXPECT_EQ(enc.conv_channels, (std::vector<std::size_t>{4, 8, 8}));
  EXPECT_EQ(enc.fc_sizes, (std::vector<std::size_t>{500, 500, 5}));
  EXPECT_FALSE(enc.final_relu);
  EXPECT_EQ(enc.output_dim(), 5u);
  EXPECT_EQ(enc.flattened_dim(), 80000u);
  EXPECT_EQ(default_classifier_spec(6).fc_sizes, (std::vector<std::size_t>{500, 500, 6}));
}

TEST(NetworkSpec, ValidationRejectsBadShapes) {
  NetworkSpec s = small_spec();
  s.input_side = 7;
  EXPECT_THROW(s.validate(), SpecError);
  s = small_spec();
  s.conv_channels = {2, 0};
  EXPECT_THROW(s.validate(), SpecError);
  s = small_spec();
  s.fc_sizes = {};
  EXPECT_THROW(s.validate(), SpecError);
  EXPECT_THROW(init_network(s, 1), SpecError);
}

TEST(NetworkSpec, ScaleKeepsEmbeddingWidth) {
  const NetworkSpec s = scale_spec(default_encoder_spec(), 0.32);
  EXPECT_EQ(s.input_side, 32u);
  EXPECT_EQ(s.fc_sizes.back(), 5u);
  EXPECT_EQ(s.fc_sizes[0], 160u);
  EXPECT_EQ(scale_spec(default_encoder_spec(), 1.0), default_encoder_spec());
  EXPECT_THROW(scale_spec(default_encoder_spec(), 0.0), SpecError);
}

TEST(NetworkSpec, LayoutMatchesShapes) {
  const auto layout = parameter_layout(default_encoder_spec());
  ASSERT_EQ(layout.size(), 12u);
  EXPECT_EQ(layout[0].first, "conv1.weight");
  EXPECT_EQ(layout[0].second, (Shape{4, 1, 3, 3}));
  EXPECT_EQ(layout[6].first, "fc1.weight");
  EXPECT_EQ(layout[6].second, (Shape{500, 80000}));
  EXPECT_EQ(layout[11].second, (Shape{5}));
}

TEST(Init, DeterministicAndSeedSensitive) {
  const Network a = init_network(small_spec(), 7), b = init_network(small_spec(), 7);
  EXPECT_TRUE(a == b);
  const Network c = init_network(small_spec(), 8);
  EXPECT_FALSE(a == c);
}

TEST(Init, UniformWithinFanInBoundAndZeroBias) {
  const Network net = init_network(small_spec(), 3);
  for (const auto& p : net.params()) {
    if (p.name.find(".bias") != std::string::npos) {
      for (float v : p.value.data()) EXPECT_EQ(v, 0.0f);
      continue;
    }
    const std::size_t fan_in = p.value.size() / p.value.dim(0);
    const double bound = std::sqrt(6.0 / double(fan_in));
    double sum = 0;
    for (float v : p.value.data()) {
      EXPECT_LE(std::abs(v), bound);
      sum += v;
    }
    if (p.value.size() > 100) EXPECT_LT(std::abs(sum / double(p.value.size())), 0.2 * bound);
  }
}

TEST(Encode, ZeroWeightsGiveZeroEmbedding) {
  Network net = init_network(small_spec(), 1);
  for (auto& p : net.params()) p.value.fill(0.0f);
  std::mt19937_64 gen(1);
  const Tensor e = encode(net, random_image(8, gen));
  ASSERT_EQ(e.size(), 5u);
  for (float v : e.data()) EXPECT_EQ(v, 0.0f);
}

TEST(Encode, PureAndDeterministic) {
  const Network net = randomized(small_spec(), 2);
  const Network before = net;
  std::mt19937_64 gen(2);
  const Tensor x = random_image(8, gen);
  EXPECT_EQ(encode(net, x), encode(net, x));
  EXPECT_TRUE(net == before);
}

TEST(Encode, MatchesStraightLineOracle) {
  std::mt19937_64 gen(3);
  for (int trial = 0; trial < 10; ++trial) {
    NetworkSpec spec = small_spec();
    spec.final_relu = trial % 2 == 1;
    const Network net = randomized(spec, 100 + trial);
    const Tensor x = random_image(8, gen);
    const Tensor got = encode(net, x);
    const auto want = straight_line_forward(net, x);
    ASSERT_EQ(got.size(), want.size());
    for (std::size_t i = 0; i < want.size(); ++i) EXPECT_NEAR(got[i], want[i], 1e-5);
  }
}

TEST(Encode, FinalReluFlagConfinesEmbedding) {
  NetworkSpec spec = small_spec();
  std::mt19937_64 gen(4);
  const Tensor x = random_image(8, gen);
  const Network linear = randomized(spec, 5);
  spec.final_relu = true;
  const Network rectified(spec, linear.params());
  const Tensor a = encode(linear, x), b = encode(rectified, x);
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_EQ(b[i], std::max(a[i], 0.0f));
}

TEST(Encode, WrongSideRejected) {
  const Network net = init_network(small_spec(), 1);
  EXPECT_THROW(encode(net, Tensor({1, 10, 10})), ShapeError);
  EXPECT_THROW(encode(net, Tensor({2, 8, 8})), ShapeError);
}

TEST(SiameseDistance, SymmetricAndComposed) {
  const Network net = randomized(small_spec(), 6);
  std::mt19937_64 gen(6);
  for (int trial = 0; trial < 10; ++trial) {
    const Tensor a = random_image(8, gen), b = random_image(8, gen);
    EXPECT_EQ(siamese_distance(net, a, a), 0.0f);
    EXPECT_EQ(siamese_distance(net, a, b), siamese_distance(net, b, a));
    EXPECT_EQ(siamese_distance(net, a, b), euclidean_distance(encode(net, a), encode(net, b)));
  }
}

// Finite differences through distance and contrastive loss on the tiny spec.
// Both branches share one parameter vector, so the analytic gradient must
// include the contribution of each branch.
TEST(WeightSharing, EndToEndLossMatchesFiniteDifferences) {
  const NetworkSpec spec = tiny_spec();
  const auto layout = parameter_layout(spec);
  std::mt19937_64 gen(11);
  const ContrastiveConfig cfg{2.0};
  std::size_t checked = 0;
  for (int trial = 0; trial < 20; ++trial) {
    const Network net = randomized(spec, 200 + trial);
    const Tensor64 x1 = Tensor64::cast(random_image(8, gen)), x2 = Tensor64::cast(random_image(8, gen));
    const PairLabel y = trial % 2 ? PairLabel::Same : PairLabel::Different;

    std::vector<Tensor64> wide;
    for (const auto& p : net.params()) wide.push_back(Tensor64::cast(p.value));
    auto pointers = [](const std::vector<Tensor64>& ts) {
      std::vector<const Tensor64*> out;
      for (const auto& t : ts) out.push_back(&t);
      return out;
    };
    auto unflatten = [&](std::span<const double> flat) {
      std::vector<Tensor64> ts;
      std::size_t off = 0;
      for (const auto& [name, shape] : layout) {
        const std::size_t n = shape_product(shape);
        ts.emplace_back(shape, std::vector<double>(flat.begin() + off, flat.begin() + off + n));
        off += n;
      }
      return ts;
    };

    // Analytic.
    const auto ptrs = pointers(wide);
    ForwardTrace<double> t1, t2;
    const Tensor64 e1 = network_forward<double>(spec, ptrs, x1, &t1);
    const Tensor64 e2 = network_forward<double>(spec, ptrs, x2, &t2);
    const double d = euclidean_distance(e1, e2);
    const auto lg = contrastive_loss(d, y, cfg);
    const auto [g1, g2] = euclidean_distance_backward(e1, e2, lg.grad);
    std::vector<Tensor64> grads;
    for (const auto& t : wide) grads.push_back(Tensor64::zeros_like(t));
    network_backward<double>(spec, ptrs, t1, g1, grads);
    network_backward<double>(spec, ptrs, t2, g2, grads);

    std::vector<double> point, analytic;
    for (std::size_t i = 0; i < wide.size(); ++i) {
      point.insert(point.end(), wide[i].data().begin(), wide[i].data().end());
      analytic.insert(analytic.end(), grads[i].data().begin(), grads[i].data().end());
    }
    auto f = [&](std::span<const double> flat) {
      const auto ts = unflatten(flat);
      const auto p = pointers(ts);
      ForwardTrace<double> a, b;
      const Tensor64 ea = network_forward<double>(spec, p, x1, &a);
      const Tensor64 eb = network_forward<double>(spec, p, x2, &b);
      const double dist = euclidean_distance(ea, eb);
      // The hinge switches off at D = m; treat that as a region change too.
      const std::uint64_t hinge = (y == PairLabel::Different && dist < cfg.margin) ? 1 : 0;
      return GradProbe{contrastive_loss(dist, y, cfg).loss,
                       mix64(a.relu_signature(spec) ^ mix64(b.relu_signature(spec)) ^ hinge)};
    };
    const auto r = grad_check(f, point, analytic);
    EXPECT_LE(r.max_rel_error, 1e-3) << "trial " << trial << " worst " << r.worst_index;
    checked += r.checked;

    // The float path used in training agrees with the 64-bit reference.
    ForwardTrace<float> s1, s2;
    const Tensor f1 = net.forward(Tensor::cast(x1), &s1), f2 = net.forward(Tensor::cast(x2), &s2);
    const auto lf = contrastive_loss(euclidean_distance(f1, f2), y, cfg);
    const auto [h1, h2] = euclidean_distance_backward(f1, f2, float(lf.grad));
    std::vector<Tensor> fgrads = net.zero_grads();
    net.backward(s1, h1, fgrads);
    net.backward(s2, h2, fgrads);
    for (std::size_t i = 0; i < fgrads.size(); ++i) {
      for (std::size_t j = 0; j < fgrads[i].size(); ++j) {
        EXPECT_NEAR(fgrads[i][j], grads[i][j], 1e-4 * std::max(1.0, std::abs(grads[i][j])));
      }
    }
  }
  EXPECT_GT(checked, 20u * 2000u);
}

TEST(WeightSharing, BranchGradientsAccumulate) {
  const Network net = randomized(tiny_spec(), 9);
  std::mt19937_64 gen(9);
  const Tensor x1 = random_image(8, gen), x2 = random_image(8, gen);
  ForwardTrace<float> t1, t2;
  const Tensor e1 = net.forward(x1, &t1), e2 = net.forward(x2, &t2);
  const Tensor up({4}, 1.0f);
  auto a = net.zero_grads(), b = net.zero_grads(), both = net.zero_grads();
  net.backward(t1, up, a);
  net.backward(t2, up, b);
  net.backward(t1, up, both);
  net.backward(t2, up, both);
  for (std::size_t i = 0; i < both.size(); ++i) {
    for (std::size_t j = 0; j < both[i].size(); ++j) EXPECT_FLOAT_EQ(both[i][j], a[i][j] + b[i][j]);
  }
}

TEST(Classify, ZeroWeightsGiveOneHalf) {
  NetworkSpec spec = small_spec();
  spec.fc_sizes = {12, 10, 6};
  Network net = init_network(spec, 1);
  for (auto& p : net.params()) p.value.fill(0.0f);
  std::mt19937_64 gen(1);
  const Tensor probs = classify(net, random_image(8, gen));
  ASSERT_EQ(probs.size(), 6u);
  for (float v : probs.data()) EXPECT_EQ(v, 0.5f);
}

TEST(Classify, BoundedAndArgmaxStableUnderBiasShift) {
  NetworkSpec spec = small_spec();
  spec.fc_sizes = {12, 10, 6};
  std::mt19937_64 gen(2);
  for (int trial = 0; trial < 20; ++trial) {
    Network net = randomized(spec, 300 + trial);
    const Tensor x = random_image(8, gen);
    const Tensor p = classify(net, x);
    for (float v : p.data()) {
      EXPECT_GT(v, 0.0f);
      EXPECT_LT(v, 1.0f);
    }
    const std::size_t before = std::max_element(p.data().begin(), p.data().end()) - p.data().begin();
    for (float& v : net.params().back().value.data()) v += 0.7f;
    const Tensor q = classify(net, x);
    const std::size_t after = std::max_element(q.data().begin(), q.data().end()) - q.data().begin();
    EXPECT_EQ(before, after);

    const Tensor s = classify(net, x, ClassifierHead::Softmax);
    double sum = 0;
    for (float v : s.data()) sum += v;
    EXPECT_NEAR(sum, 1.0, 1e-5);
  }
}
