#include "oneshot/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <map>

namespace oneshot {
namespace {

class Writer {
 public:
  void u8(std::uint8_t v) { bytes_.push_back(v); }
  void u16(std::uint16_t v) {
    for (int i = 0; i < 2; ++i) bytes_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) bytes_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void f32(float v) { u32(std::bit_cast<std::uint32_t>(v)); }
  void raw(const void* p, std::size_t n) {
    const auto* b = static_cast<const std::uint8_t*>(p);
    bytes_.insert(bytes_.end(), b, b + n);
  }
  std::vector<std::uint8_t> take() { return std::move(bytes_); }

 private:
  std::vector<std::uint8_t> bytes_;
};

class Reader {
 public:
  explicit Reader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

  std::size_t offset() const { return pos_; }
  std::size_t remaining() const { return bytes_.size() - pos_; }

  void need(std::size_t n, const char* what) const {
    if (remaining() < n) {
      throw FormatError("checkpoint truncated at byte offset " + std::to_string(pos_) + ": " + what +
                        " needs " + std::to_string(n) + " bytes, " + std::to_string(remaining()) +
                        " remain");
    }
  }
  std::uint8_t u8(const char* what) {
    need(1, what);
    return bytes_[pos_++];
  }
  std::uint16_t u16(const char* what) {
    need(2, what);
    std::uint16_t v = std::uint16_t(bytes_[pos_]) | std::uint16_t(bytes_[pos_ + 1]) << 8;
    pos_ += 2;
    return v;
  }
  std::uint32_t u32(const char* what) {
    need(4, what);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= std::uint32_t(bytes_[pos_ + i]) << (8 * i);
    pos_ += 4;
    return v;
  }
  float f32() { return std::bit_cast<float>(u32("tensor data")); }
  std::string str(std::size_t n, const char* what) {
    need(n, what);
    std::string s(reinterpret_cast<const char*>(bytes_.data() + pos_), n);
    pos_ += n;
    return s;
  }

 private:
  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 0;
};

std::uint32_t to_u32(std::size_t v, const char* what) {
  if (v > 0xffffffffu) throw FormatError(std::string(what) + " does not fit in u32");
  return static_cast<std::uint32_t>(v);
}

std::vector<std::pair<std::string, Tensor>> network_tensors(const Network& network) {
  std::vector<std::pair<std::string, Tensor>> out;
  for (const auto& p : network.params()) out.emplace_back(p.name, p.value);
  return out;
}

}  // namespace

std::vector<std::uint8_t> encode_checkpoint(const CheckpointData& data) {
  Writer w;
  w.raw(kCheckpointMagic, 4);
  w.u32(kCheckpointVersion);
  w.u32(to_u32(data.spec.input_side, "input_side"));
  w.u32(to_u32(data.spec.conv_channels.size(), "conv layer count"));
  for (auto c : data.spec.conv_channels) w.u32(to_u32(c, "channel count"));
  w.u32(to_u32(data.spec.fc_sizes.size(), "dense layer count"));
  for (auto f : data.spec.fc_sizes) w.u32(to_u32(f, "dense size"));
  w.u32(to_u32(data.tensors.size(), "tensor count"));
  for (const auto& [name, tensor] : data.tensors) {
    if (name.size() > 0xffff) throw FormatError("tensor name too long: " + name);
    if (tensor.rank() > 0xff) throw FormatError("tensor rank too large: " + name);
    w.u16(static_cast<std::uint16_t>(name.size()));
    w.raw(name.data(), name.size());
    w.u8(static_cast<std::uint8_t>(tensor.rank()));
    for (auto d : tensor.shape()) w.u32(to_u32(d, "tensor dimension"));
    for (float v : tensor.data()) w.f32(v);
  }
  return w.take();
}

CheckpointData decode_checkpoint(std::span<const std::uint8_t> bytes) {
  Reader r(bytes);
  r.need(4, "magic");
  if (std::memcmp(bytes.data(), kCheckpointMagic, 4) != 0) {
    throw FormatError("bad checkpoint magic at byte offset 0 (expected \"OSSD\")");
  }
  r.str(4, "magic");
  const std::size_t version_at = r.offset();
  const std::uint32_t version = r.u32("format version");
  if (version != kCheckpointVersion) {
    throw FormatError("unsupported checkpoint version " + std::to_string(version) +
                      " at byte offset " + std::to_string(version_at));
  }

  CheckpointData data;
  data.spec.input_side = r.u32("input_side");
  const std::uint32_t n_conv = r.u32("conv layer count");
  r.need(std::size_t(n_conv) * 4, "conv channel list");
  data.spec.conv_channels.clear();
  for (std::uint32_t i = 0; i < n_conv; ++i) data.spec.conv_channels.push_back(r.u32("channel count"));
  const std::uint32_t n_fc = r.u32("dense layer count");
  r.need(std::size_t(n_fc) * 4, "dense size list");
  data.spec.fc_sizes.clear();
  for (std::uint32_t i = 0; i < n_fc; ++i) data.spec.fc_sizes.push_back(r.u32("dense size"));
  const std::size_t spec_at = r.offset();
  try {
    data.spec.validate();
  } catch (const SpecError& e) {
    throw FormatError("invalid spec block ending at byte offset " + std::to_string(spec_at) + ": " +
                      e.what());
  }

  const std::uint32_t count = r.u32("tensor count");
  for (std::uint32_t t = 0; t < count; ++t) {
    const std::size_t name_len = r.u16("tensor name length");
    std::string name = r.str(name_len, "tensor name");
    const std::size_t rank_at = r.offset();
    const std::size_t rank = r.u8("tensor rank");
    if (rank == 0) {
      throw FormatError("tensor '" + name + "' has rank 0 at byte offset " + std::to_string(rank_at));
    }
    Shape shape;
    std::size_t elements = 1;
    for (std::size_t d = 0; d < rank; ++d) {
      const std::size_t dim_at = r.offset();
      const std::size_t dim = r.u32("tensor dimension");
      if (dim == 0) {
        throw FormatError("tensor '" + name + "' has a zero dimension at byte offset " +
                          std::to_string(dim_at));
      }
      shape.push_back(dim);
      elements *= dim;
      if (elements > r.remaining()) break;  // caught by the length check below
    }
    if (shape.size() != rank || elements * 4 > r.remaining()) {
      throw FormatError("tensor '" + name + "' declares " + shape_to_string(shape) +
                        " but only " + std::to_string(r.remaining()) +
                        " data bytes remain at byte offset " + std::to_string(r.offset()));
    }
    std::vector<float> values(elements);
    for (auto& v : values) v = r.f32();
    data.tensors.emplace_back(std::move(name), Tensor(shape, std::move(values)));
  }
  if (r.remaining() != 0) {
    throw FormatError(std::to_string(r.remaining()) + " trailing bytes after last tensor at byte offset " +
                      std::to_string(r.offset()));
  }
  return data;
}

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open " + path.string());
  return std::vector<std::uint8_t>(std::istreambuf_iterator<char>(in), {});
}

void write_file_bytes(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw FormatError("cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), std::streamsize(bytes.size()));
  if (!out) throw FormatError("failed writing " + path.string());
}

namespace {

Network network_from(const CheckpointData& data,
                     const std::map<std::string, const Tensor*>& by_name, bool final_relu) {
  NetworkSpec spec = data.spec;
  spec.final_relu = final_relu;
  std::vector<Parameter> params;
  for (const auto& [name, shape] : parameter_layout(spec)) {
    auto it = by_name.find(name);
    if (it == by_name.end()) throw FormatError("checkpoint is missing tensor '" + name + "'");
    if (it->second->shape() != shape) {
      throw FormatError("checkpoint tensor '" + name + "' has shape " +
                        shape_to_string(it->second->shape()) + " but the spec block implies " +
                        shape_to_string(shape));
    }
    params.push_back(Parameter{name, *it->second, Tensor()});
  }
  return Network(std::move(spec), std::move(params));
}

}  // namespace

void save_checkpoint(const Network& network, const std::filesystem::path& path) {
  write_file_bytes(path, encode_checkpoint({network.spec(), network_tensors(network)}));
}

Network load_checkpoint(const std::filesystem::path& path, bool final_relu) {
  const CheckpointData data = decode_checkpoint(read_file_bytes(path));
  std::map<std::string, const Tensor*> by_name;
  for (const auto& [name, t] : data.tensors) by_name[name] = &t;
  const Network net = network_from(data, by_name, final_relu);
  if (data.tensors.size() != net.params().size()) {
    throw FormatError("checkpoint has " + std::to_string(data.tensors.size()) +
                      " tensors, the spec block implies " + std::to_string(net.params().size()));
  }
  return net;
}

void save_training_state(const Network& network, const AdamState& state,
                         const std::filesystem::path& path) {
  CheckpointData data{network.spec(), network_tensors(network)};
  const auto& params = network.params();
  for (std::size_t i = 0; i < params.size(); ++i) {
    const Tensor zeros(params[i].value.shape());
    data.tensors.emplace_back("adam.m." + params[i].name, i < state.m.size() ? state.m[i] : zeros);
    data.tensors.emplace_back("adam.v." + params[i].name, i < state.v.size() ? state.v[i] : zeros);
  }
  // The counter is split into two exact 24-bit halves so steps up to 2^48 survive f32.
  const auto t = state.t;
  data.tensors.emplace_back("adam.t", Tensor({2}, {float(t & 0xffffff), float((t >> 24) & 0xffffff)}));
  // Each double hyperparameter as three floats whose sum reproduces it exactly.
  std::vector<float> hyper;
  for (double h : {state.hyper.lr, state.hyper.beta1, state.hyper.beta2, state.hyper.eps}) {
    for (int part = 0; part < 3; ++part) {
      const float f = static_cast<float>(h);
      hyper.push_back(f);
      h -= double(f);
    }
  }
  data.tensors.emplace_back("adam.hyper", Tensor({4, 3}, std::move(hyper)));
  write_file_bytes(path, encode_checkpoint(data));
}

std::pair<Network, AdamState> load_training_state(const std::filesystem::path& path, bool final_relu) {
  const CheckpointData data = decode_checkpoint(read_file_bytes(path));
  std::map<std::string, const Tensor*> by_name;
  for (const auto& [name, t] : data.tensors) by_name[name] = &t;
  Network net = network_from(data, by_name, final_relu);

  auto fetch = [&](const std::string& name, const Shape& shape) -> const Tensor& {
    auto it = by_name.find(name);
    if (it == by_name.end()) throw FormatError("training state is missing tensor '" + name + "'");
    if (it->second->shape() != shape) {
      throw FormatError("training state tensor '" + name + "' has shape " +
                        shape_to_string(it->second->shape()) + ", expected " + shape_to_string(shape));
    }
    return *it->second;
  };

  AdamState state;
  for (const auto& p : net.params()) {
    state.m.push_back(fetch("adam.m." + p.name, p.value.shape()));
    state.v.push_back(fetch("adam.v." + p.name, p.value.shape()));
  }
  const Tensor& t = fetch("adam.t", {2});
  state.t = std::uint64_t(t[0]) | (std::uint64_t(t[1]) << 24);
  const Tensor& hyper = fetch("adam.hyper", {4, 3});
  auto join = [&hyper](std::size_t i) {
    return double(hyper[3 * i]) + double(hyper[3 * i + 1]) + double(hyper[3 * i + 2]);
  };
  state.hyper = AdamHyper{join(0), join(1), join(2), join(3)};
  return {std::move(net), std::move(state)};
}

}  // namespace oneshot
