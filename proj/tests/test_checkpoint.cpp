#include <gtest/gtest.h>

#include <bit>
#include <cstring>
#include <random>

#include "oneshot/checkpoint.hpp"
#include "test_support.hpp"

using namespace oneshot;
using testing_support::TempDir;

namespace {

NetworkSpec small_spec() {
  NetworkSpec s;
  s.input_side = 8;
  s.conv_channels = {2, 3};
  s.fc_sizes = {7, 5};
  return s;
}

Network random_net(std::uint64_t seed) {
  Network net = init_network(small_spec(), seed);
  std::mt19937_64 gen(seed);
  for (auto& p : net.params()) p.value = testing_support::random_tensor(p.value.shape(), gen);
  return net;
}

// Byte-level writer for the documented layout, independent of the library.
std::vector<std::uint8_t> reference_bytes(const Network& net) {
  std::vector<std::uint8_t> b{'O', 'S', 'S', 'D'};
  auto u32 = [&b](std::uint32_t v) {
    for (int i = 0; i < 4; ++i) b.push_back(std::uint8_t(v >> (8 * i)));
  };
  u32(1);
  const NetworkSpec& s = net.spec();
  u32(std::uint32_t(s.input_side));
  u32(std::uint32_t(s.conv_channels.size()));
  for (auto c : s.conv_channels) u32(std::uint32_t(c));
  u32(std::uint32_t(s.fc_sizes.size()));
  for (auto f : s.fc_sizes) u32(std::uint32_t(f));
  u32(std::uint32_t(net.params().size()));
  for (const auto& p : net.params()) {
    b.push_back(std::uint8_t(p.name.size()));
    b.push_back(std::uint8_t(p.name.size() >> 8));
    b.insert(b.end(), p.name.begin(), p.name.end());
    b.push_back(std::uint8_t(p.value.rank()));
    for (auto d : p.value.shape()) u32(std::uint32_t(d));
    for (float v : p.value.data()) u32(std::bit_cast<std::uint32_t>(v));
  }
  return b;
}

std::vector<std::uint8_t> encoded(const Network& net) {
  CheckpointData d{net.spec(), {}};
  for (const auto& p : net.params()) d.tensors.emplace_back(p.name, p.value);
  return encode_checkpoint(d);
}

void expect_format_error_at(std::span<const std::uint8_t> bytes, const std::string& needle) {
  try {
    decode_checkpoint(bytes);
    FAIL() << "expected FormatError";
  } catch (const FormatError& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("byte offset"), std::string::npos) << msg;
    EXPECT_NE(msg.find(needle), std::string::npos) << msg;
  }
}

}  // namespace

TEST(Checkpoint, MatchesDocumentedLayout) {
  const Network net = random_net(1);
  EXPECT_EQ(encoded(net), reference_bytes(net));
}

TEST(Checkpoint, SaveLoadSaveIsByteIdentical) {
  TempDir dir("ckpt");
  for (std::uint64_t seed : {1, 2, 3}) {
    const Network net = random_net(seed);
    const auto a = dir.path() / "a.ossd", b = dir.path() / "nested" / "b.ossd";
    save_checkpoint(net, a);
    const Network loaded = load_checkpoint(a);
    EXPECT_TRUE(loaded == net);
    save_checkpoint(loaded, b);
    EXPECT_EQ(read_file_bytes(a), read_file_bytes(b));
  }
}

TEST(Checkpoint, PreservesSpecialFloatBits) {
  Network net = random_net(4);
  auto& w = net.params()[0].value;
  w[0] = -0.0f;
  w[1] = std::numeric_limits<float>::denorm_min();
  w[2] = std::numeric_limits<float>::max();
  const CheckpointData d = decode_checkpoint(encoded(net));
  const Tensor& got = d.tensors[0].second;
  for (std::size_t i = 0; i < 3; ++i) {
    EXPECT_EQ(std::bit_cast<std::uint32_t>(got[i]), std::bit_cast<std::uint32_t>(w[i]));
  }
}

TEST(Checkpoint, CorruptHeadersRejected) {
  const auto good = encoded(random_net(5));

  auto bad_magic = good;
  bad_magic[0] = 'X';
  expect_format_error_at(bad_magic, "magic");

  auto bad_version = good;
  bad_version[4] = 2;
  EXPECT_THROW(decode_checkpoint(bad_version), FormatError);

  for (std::size_t cut : {0ul, 3ul, 7ul, 11ul, 30ul, good.size() - 1}) {
    const std::span<const std::uint8_t> prefix(good.data(), cut);
    EXPECT_THROW(decode_checkpoint(prefix), FormatError) << "cut " << cut;
  }

  auto trailing = good;
  trailing.push_back(0);
  expect_format_error_at(trailing, "trailing");
}

TEST(Checkpoint, DeclaredLengthMismatchRejected) {
  const Network net = random_net(6);
  auto bytes = encoded(net);
  // Grow the first dimension of the first tensor; its data no longer fits.
  const std::size_t header = 4 + 4 + 4 + 4 + 4 * 2 + 4 + 4 * 2 + 4;
  const std::size_t dim0 = header + 2 + net.params()[0].name.size() + 1;
  ASSERT_EQ(bytes[dim0], 2);
  bytes[dim0] = 200;
  expect_format_error_at(bytes, "conv1.weight");
}

TEST(Checkpoint, ShapeMismatchWithSpecRejected) {
  TempDir dir("ckpt_shape");
  Network net = random_net(7);
  CheckpointData d{net.spec(), {}};
  for (const auto& p : net.params()) d.tensors.emplace_back(p.name, p.value);
  d.tensors.pop_back();
  write_file_bytes(dir.path() / "x.ossd", encode_checkpoint(d));
  EXPECT_THROW(load_checkpoint(dir.path() / "x.ossd"), FormatError);
  EXPECT_THROW(load_checkpoint(dir.path() / "missing.ossd"), FormatError);
}

TEST(Checkpoint, FinalReluIsALoadOption) {
  TempDir dir("ckpt_relu");
  const Network net = random_net(8);
  save_checkpoint(net, dir.path() / "m.ossd");
  EXPECT_TRUE(load_checkpoint(dir.path() / "m.ossd", true).spec().final_relu);
  EXPECT_FALSE(load_checkpoint(dir.path() / "m.ossd").spec().final_relu);
}

TEST(TrainingState, RoundTripsMomentsStepAndHyper) {
  TempDir dir("state");
  Network net = random_net(9);
  AdamState st;
  st.hyper.lr = 1.2345e-4;
  st.hyper.beta2 = 0.9995;
  for (auto& p : net.params()) {
    p.zero_grad();
    p.grad.fill(0.25f);
  }
  for (int i = 0; i < 3; ++i) adam_step(net.params(), st);
  st.t = (std::uint64_t(1) << 40) + 12345;

  save_training_state(net, st, dir.path() / "s.ossd");
  auto [net2, st2] = load_training_state(dir.path() / "s.ossd");
  EXPECT_TRUE(net2 == net);
  EXPECT_EQ(st2.t, st.t);
  EXPECT_EQ(st2.hyper.lr, st.hyper.lr);
  EXPECT_EQ(st2.hyper.beta1, st.hyper.beta1);
  EXPECT_EQ(st2.hyper.beta2, st.hyper.beta2);
  EXPECT_EQ(st2.hyper.eps, st.hyper.eps);
  ASSERT_EQ(st2.m.size(), st.m.size());
  for (std::size_t i = 0; i < st.m.size(); ++i) {
    EXPECT_EQ(st2.m[i], st.m[i]);
    EXPECT_EQ(st2.v[i], st.v[i]);
  }
  save_training_state(net2, st2, dir.path() / "s2.ossd");
  EXPECT_EQ(read_file_bytes(dir.path() / "s.ossd"), read_file_bytes(dir.path() / "s2.ossd"));
}
