#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "oneshot/tensor.hpp"

namespace oneshot {

/// Shape of a conv stack followed by dense layers. Every conv is 3x3/stride 1
/// with zero padding, so feature maps keep the input side throughout.
struct NetworkSpec {
  std::size_t input_side = 100;
  std::vector<std::size_t> conv_channels{4, 8, 8};
  std::vector<std::size_t> fc_sizes{500, 500, 5};
  // ReLU on the last dense layer. Off for the encoder (linear embedding).
  bool final_relu = false;

  std::size_t output_dim() const { return fc_sizes.empty() ? 0 : fc_sizes.back(); }
  std::size_t flattened_dim() const {
    return conv_channels.empty() ? input_side * input_side
                                 : conv_channels.back() * input_side * input_side;
  }

  /// Throws SpecError on an unusable configuration.
  void validate() const;

  friend bool operator==(const NetworkSpec&, const NetworkSpec&) = default;
};

/// Siamese encoder: conv [4,8,8] at 100x100, dense [500,500,5].
NetworkSpec default_encoder_spec();
/// Baseline classifier: same conv stack, dense [500,500,num_classes].
NetworkSpec default_classifier_spec(std::size_t num_classes = 6);

/// Scales input side, conv channels and all dense widths except the output
/// layer by `scale`, rounding to nearest and keeping every entry >= 1.
NetworkSpec scale_spec(const NetworkSpec& spec, double scale);

/// Parameter shapes in storage order: conv{i}.weight, conv{i}.bias, ..., fc{i}.weight, fc{i}.bias.
std::vector<std::pair<std::string, Shape>> parameter_layout(const NetworkSpec& spec);
std::size_t parameter_count(const NetworkSpec& spec);

/// Intermediate values kept by the forward pass for backpropagation.
template <typename T>
struct ForwardTrace {
  std::vector<BasicTensor<T>> layer_inputs;  // input to each layer, conv then dense
  std::vector<BasicTensor<T>> pre_activations;

  /// Hash of the ReLU sign pattern. Two inputs with equal signatures sit on the
  /// same smooth piece of the network.
  std::uint64_t relu_signature(const NetworkSpec& spec) const;
};

template <typename T>
BasicTensor<T> network_forward(const NetworkSpec& spec, std::span<const BasicTensor<T>* const> params,
                               const BasicTensor<T>& input, ForwardTrace<T>* trace = nullptr);

/// Accumulates d(output)/d(params) * grad_output into `grads` (one tensor per
/// parameter, shapes as in parameter_layout). Gradient contributions are added
/// in place so both Siamese branches can share one buffer.
template <typename T>
void network_backward(const NetworkSpec& spec, std::span<const BasicTensor<T>* const> params,
                      const ForwardTrace<T>& trace, const BasicTensor<T>& grad_output,
                      std::span<BasicTensor<T>> grads);

/// A parameter set together with the architecture it belongs to. Used for both
/// the Siamese encoder and the baseline classifier.
class Network {
 public:
  Network() = default;
  Network(NetworkSpec spec, std::vector<Parameter> params);

  const NetworkSpec& spec() const noexcept { return spec_; }
  std::vector<Parameter>& params() noexcept { return params_; }
  const std::vector<Parameter>& params() const noexcept { return params_; }

  std::vector<const Tensor*> values() const;
  /// Zero-filled gradient buffers matching the parameters.
  std::vector<Tensor> zero_grads() const;
  std::size_t parameter_count() const;

  Tensor forward(const Tensor& input, ForwardTrace<float>* trace = nullptr) const;
  void backward(const ForwardTrace<float>& trace, const Tensor& grad_output,
                std::span<Tensor> grads) const;

  friend bool operator==(const Network& a, const Network& b);

 private:
  NetworkSpec spec_;
  std::vector<Parameter> params_;
};

/// Uniform +-sqrt(6/fan_in) weights, zero biases, deterministic in `seed`.
Network init_network(const NetworkSpec& spec, std::uint64_t seed);

/// f_theta(x) for a preprocessed [1,S,S] image.
Tensor encode(const Network& encoder, const Tensor& image);

/// Euclidean distance between the two embeddings; both branches use the same weights.
float siamese_distance(const Network& encoder, const Tensor& x1, const Tensor& x2);

/// Output head of the baseline classifier.
enum class ClassifierHead {
  Sigmoid,  // independent sigmoid per class, renormalized inside the loss
  Softmax,
};

/// Class probabilities. With the sigmoid head each entry lies in (0,1)
/// independently; with softmax they sum to 1.
Tensor classify(const Network& classifier, const Tensor& image,
                ClassifierHead head = ClassifierHead::Sigmoid);

}  // namespace oneshot
