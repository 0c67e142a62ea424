#pragma once

// Forward/backward primitives for the convolutional encoder.
//
// All reductions run in ascending index order, so results are reproducible
// bit-for-bit regardless of how callers parallelize across samples.

#include "oneshot/tensor.hpp"

namespace oneshot {

template <typename T>
struct Conv2dGrads {
  BasicTensor<T> input;  // empty when not requested
  BasicTensor<T> kernels;
  BasicTensor<T> bias;
};

template <typename T>
struct DenseGrads {
  BasicTensor<T> input;
  BasicTensor<T> weight;
  BasicTensor<T> bias;
};

/// 3x3 convolution, stride 1, zero padding 1: [C_in,H,W] -> [C_out,H,W].
template <typename T>
BasicTensor<T> conv2d_forward(const BasicTensor<T>& input, const BasicTensor<T>& kernels,
                              const BasicTensor<T>& bias);

/// Gradients of conv2d_forward. `grad_out` must have the forward output shape.
/// The first layer of a network has no use for the input gradient, so it is
/// skipped when `need_input_grad` is false.
template <typename T>
Conv2dGrads<T> conv2d_backward(const BasicTensor<T>& input, const BasicTensor<T>& kernels,
                               const BasicTensor<T>& grad_out, bool need_input_grad = true);

/// out = weight * input + bias, with weight [D_out,D_in].
template <typename T>
BasicTensor<T> dense_forward(const BasicTensor<T>& input, const BasicTensor<T>& weight,
                             const BasicTensor<T>& bias);

template <typename T>
DenseGrads<T> dense_backward(const BasicTensor<T>& input, const BasicTensor<T>& weight,
                             const BasicTensor<T>& grad_out);

template <typename T>
BasicTensor<T> relu(const BasicTensor<T>& input);

/// Passes grad where input > 0. The subgradient at exactly 0 is 0.
template <typename T>
BasicTensor<T> relu_backward(const BasicTensor<T>& input, const BasicTensor<T>& grad_out);

template <typename T>
BasicTensor<T> sigmoid(const BasicTensor<T>& input);

template <typename T>
BasicTensor<T> sigmoid_backward(const BasicTensor<T>& input, const BasicTensor<T>& grad_out);

/// exp(x_i - max x) / sum_j exp(x_j - max x).
template <typename T>
BasicTensor<T> softmax(const BasicTensor<T>& input);

/// ||a - b||_2 over flattened tensors of equal length.
template <typename T>
T euclidean_distance(const BasicTensor<T>& a, const BasicTensor<T>& b);

/// Returns (dD/da * grad, dD/db * grad). Below this distance the direction
/// (a-b)/D is numerically meaningless and both gradients are zero.
inline constexpr double kDistanceGradFloor = 1e-12;

template <typename T>
std::pair<BasicTensor<T>, BasicTensor<T>> euclidean_distance_backward(const BasicTensor<T>& a,
                                                                      const BasicTensor<T>& b,
                                                                      T grad_distance);

}  // namespace oneshot
