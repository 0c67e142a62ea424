#include "oneshot/model.hpp"

#include <cmath>

#include "oneshot/ops.hpp"
#include "oneshot/rng.hpp"

namespace oneshot {

void NetworkSpec::validate() const {
  if (input_side < 8) {
    throw SpecError("input_side must be at least 8, got " + std::to_string(input_side));
  }
  if (fc_sizes.empty()) throw SpecError("network needs at least one dense layer");
  for (auto c : conv_channels) {
    if (c == 0) throw SpecError("conv channel counts must be positive");
  }
  for (auto f : fc_sizes) {
    if (f == 0) throw SpecError("dense layer sizes must be positive");
  }
}

NetworkSpec default_encoder_spec() { return NetworkSpec{}; }

NetworkSpec default_classifier_spec(std::size_t num_classes) {
  NetworkSpec spec;
  spec.fc_sizes = {500, 500, num_classes};
  return spec;
}

NetworkSpec scale_spec(const NetworkSpec& spec, double scale) {
  if (!(scale > 0.0)) throw SpecError("spec scale must be positive");
  auto scaled = [scale](std::size_t v) {
    return std::max<std::size_t>(1, static_cast<std::size_t>(std::lround(double(v) * scale)));
  };
  NetworkSpec out = spec;
  out.input_side = std::max<std::size_t>(8, scaled(spec.input_side));
  for (auto& c : out.conv_channels) c = scaled(c);
  for (std::size_t i = 0; i + 1 < out.fc_sizes.size(); ++i) out.fc_sizes[i] = scaled(out.fc_sizes[i]);
  return out;
}

std::vector<std::pair<std::string, Shape>> parameter_layout(const NetworkSpec& spec) {
  spec.validate();
  std::vector<std::pair<std::string, Shape>> layout;
  std::size_t channels = 1;
  for (std::size_t i = 0; i < spec.conv_channels.size(); ++i) {
    const std::string prefix = "conv" + std::to_string(i + 1);
    layout.emplace_back(prefix + ".weight", Shape{spec.conv_channels[i], channels, 3, 3});
    layout.emplace_back(prefix + ".bias", Shape{spec.conv_channels[i]});
    channels = spec.conv_channels[i];
  }
  std::size_t width = spec.flattened_dim();
  for (std::size_t i = 0; i < spec.fc_sizes.size(); ++i) {
    const std::string prefix = "fc" + std::to_string(i + 1);
    layout.emplace_back(prefix + ".weight", Shape{spec.fc_sizes[i], width});
    layout.emplace_back(prefix + ".bias", Shape{spec.fc_sizes[i]});
    width = spec.fc_sizes[i];
  }
  return layout;
}

std::size_t parameter_count(const NetworkSpec& spec) {
  std::size_t n = 0;
  for (const auto& [name, shape] : parameter_layout(spec)) n += shape_product(shape);
  return n;
}

template <typename T>
std::uint64_t ForwardTrace<T>::relu_signature(const NetworkSpec& spec) const {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  const std::size_t layers = pre_activations.size();
  for (std::size_t l = 0; l < layers; ++l) {
    if (l + 1 == layers && !spec.final_relu) break;
    std::uint64_t word = 0;
    std::size_t bits = 0;
    for (T z : pre_activations[l].data()) {
      word = (word << 1) | (z > T(0) ? 1u : 0u);
      if (++bits == 64) {
        h = mix64(h ^ word);
        word = 0;
        bits = 0;
      }
    }
    h = mix64(h ^ word ^ (std::uint64_t(bits) << 56));
  }
  return h;
}

template <typename T>
BasicTensor<T> network_forward(const NetworkSpec& spec, std::span<const BasicTensor<T>* const> params,
                               const BasicTensor<T>& input, ForwardTrace<T>* trace) {
  const std::size_t n_conv = spec.conv_channels.size();
  const std::size_t n_fc = spec.fc_sizes.size();
  if (params.size() != 2 * (n_conv + n_fc)) {
    throw ShapeError("network expects " + std::to_string(2 * (n_conv + n_fc)) +
                     " parameter tensors, got " + std::to_string(params.size()));
  }
  const Shape expected{1, spec.input_side, spec.input_side};
  if (input.shape() != expected) {
    throw ShapeError("network input must be " + shape_to_string(expected) + ", got " +
                     shape_to_string(input.shape()));
  }
  if (trace) {
    trace->layer_inputs.clear();
    trace->pre_activations.clear();
  }

  BasicTensor<T> a = input;
  for (std::size_t l = 0; l < n_conv; ++l) {
    BasicTensor<T> z = conv2d_forward(a, *params[2 * l], *params[2 * l + 1]);
    BasicTensor<T> next = relu(z);
    if (trace) {
      trace->layer_inputs.push_back(std::move(a));
      trace->pre_activations.push_back(std::move(z));
    }
    a = std::move(next);
  }
  a.reshape({a.size()});
  for (std::size_t l = 0; l < n_fc; ++l) {
    const std::size_t p = 2 * (n_conv + l);
    BasicTensor<T> z = dense_forward(a, *params[p], *params[p + 1]);
    const bool activate = l + 1 < n_fc || spec.final_relu;
    BasicTensor<T> next = activate ? relu(z) : z;
    if (trace) {
      trace->layer_inputs.push_back(std::move(a));
      trace->pre_activations.push_back(std::move(z));
    }
    a = std::move(next);
  }
  return a;
}

template <typename T>
void network_backward(const NetworkSpec& spec, std::span<const BasicTensor<T>* const> params,
                      const ForwardTrace<T>& trace, const BasicTensor<T>& grad_output,
                      std::span<BasicTensor<T>> grads) {
  const std::size_t n_conv = spec.conv_channels.size();
  const std::size_t n_fc = spec.fc_sizes.size();
  if (trace.pre_activations.size() != n_conv + n_fc || grads.size() != params.size()) {
    throw ContractError("network_backward called with an incomplete forward trace or gradient set");
  }

  BasicTensor<T> g = grad_output;
  for (std::size_t l = n_fc; l-- > 0;) {
    const std::size_t layer = n_conv + l;
    const std::size_t p = 2 * layer;
    const bool activated = l + 1 < n_fc || spec.final_relu;
    if (activated) g = relu_backward(trace.pre_activations[layer], g);
    DenseGrads<T> dg = dense_backward(trace.layer_inputs[layer], *params[p], g);
    add_inplace(grads[p], dg.weight);
    add_inplace(grads[p + 1], dg.bias);
    g = std::move(dg.input);
  }
  if (n_conv == 0) return;
  g.reshape(trace.pre_activations[n_conv - 1].shape());
  for (std::size_t l = n_conv; l-- > 0;) {
    g = relu_backward(trace.pre_activations[l], g);
    Conv2dGrads<T> cg = conv2d_backward(trace.layer_inputs[l], *params[2 * l], g, l > 0);
    add_inplace(grads[2 * l], cg.kernels);
    add_inplace(grads[2 * l + 1], cg.bias);
    g = std::move(cg.input);
  }
}

template struct ForwardTrace<float>;
template struct ForwardTrace<double>;
template BasicTensor<float> network_forward(const NetworkSpec&, std::span<const BasicTensor<float>* const>,
                                            const BasicTensor<float>&, ForwardTrace<float>*);
template BasicTensor<double> network_forward(const NetworkSpec&, std::span<const BasicTensor<double>* const>,
                                             const BasicTensor<double>&, ForwardTrace<double>*);
template void network_backward(const NetworkSpec&, std::span<const BasicTensor<float>* const>,
                               const ForwardTrace<float>&, const BasicTensor<float>&,
                               std::span<BasicTensor<float>>);
template void network_backward(const NetworkSpec&, std::span<const BasicTensor<double>* const>,
                               const ForwardTrace<double>&, const BasicTensor<double>&,
                               std::span<BasicTensor<double>>);

Network::Network(NetworkSpec spec, std::vector<Parameter> params)
    : spec_(std::move(spec)), params_(std::move(params)) {
  const auto layout = parameter_layout(spec_);
  if (layout.size() != params_.size()) {
    throw ShapeError("network spec needs " + std::to_string(layout.size()) + " parameters, got " +
                     std::to_string(params_.size()));
  }
  for (std::size_t i = 0; i < layout.size(); ++i) {
    if (params_[i].value.shape() != layout[i].second) {
      throw ShapeError("parameter " + layout[i].first + " must have shape " +
                       shape_to_string(layout[i].second) + ", got " +
                       shape_to_string(params_[i].value.shape()));
    }
    if (params_[i].name.empty()) params_[i].name = layout[i].first;
  }
}

std::vector<const Tensor*> Network::values() const {
  std::vector<const Tensor*> out;
  out.reserve(params_.size());
  for (const auto& p : params_) out.push_back(&p.value);
  return out;
}

std::vector<Tensor> Network::zero_grads() const {
  std::vector<Tensor> out;
  out.reserve(params_.size());
  for (const auto& p : params_) out.emplace_back(p.value.shape());
  return out;
}

std::size_t Network::parameter_count() const {
  std::size_t n = 0;
  for (const auto& p : params_) n += p.value.size();
  return n;
}

Tensor Network::forward(const Tensor& input, ForwardTrace<float>* trace) const {
  const auto v = values();
  return network_forward<float>(spec_, v, input, trace);
}

void Network::backward(const ForwardTrace<float>& trace, const Tensor& grad_output,
                       std::span<Tensor> grads) const {
  const auto v = values();
  network_backward<float>(spec_, v, trace, grad_output, grads);
}

bool operator==(const Network& a, const Network& b) {
  if (!(a.spec_ == b.spec_) || a.params_.size() != b.params_.size()) return false;
  for (std::size_t i = 0; i < a.params_.size(); ++i) {
    if (a.params_[i].name != b.params_[i].name || !(a.params_[i].value == b.params_[i].value)) {
      return false;
    }
  }
  return true;
}

Network init_network(const NetworkSpec& spec, std::uint64_t seed) {
  const auto layout = parameter_layout(spec);
  std::vector<Parameter> params;
  params.reserve(layout.size());
  for (std::size_t i = 0; i < layout.size(); ++i) {
    const auto& [name, shape] = layout[i];
    Parameter p{name, Tensor(shape), Tensor()};
    if (shape.size() > 1) {
      std::size_t fan_in = 1;
      for (std::size_t d = 1; d < shape.size(); ++d) fan_in *= shape[d];
      const double bound = std::sqrt(6.0 / double(fan_in));
      Rng rng = Rng::derive(seed, {string_key("init"), i});
      for (auto& w : p.value.data()) w = static_cast<float>(rng.uniform(-bound, bound));
    }
    params.push_back(std::move(p));
  }
  return Network(spec, std::move(params));
}

Tensor encode(const Network& encoder, const Tensor& image) { return encoder.forward(image); }

float siamese_distance(const Network& encoder, const Tensor& x1, const Tensor& x2) {
  return euclidean_distance(encode(encoder, x1), encode(encoder, x2));
}

Tensor classify(const Network& classifier, const Tensor& image, ClassifierHead head) {
  const Tensor logits = classifier.forward(image);
  return head == ClassifierHead::Softmax ? softmax(logits) : sigmoid(logits);
}

}  // namespace oneshot
