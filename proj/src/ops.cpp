#include "oneshot/ops.hpp"

#include <cmath>

namespace oneshot {
namespace {

template <typename T>
void check_conv_shapes(const BasicTensor<T>& input, const BasicTensor<T>& kernels) {
  if (input.rank() != 3 || kernels.rank() != 4 || kernels.dim(2) != 3 || kernels.dim(3) != 3 ||
      kernels.dim(1) != input.dim(0)) {
    throw ShapeError("conv2d expects input [C_in,H,W] and kernels [C_out,C_in,3,3]; got input " +
                     shape_to_string(input.shape()) + " and kernels " +
                     shape_to_string(kernels.shape()));
  }
}

// Copies [C,H,W] into a zero-bordered [C,H+2,W+2] buffer.
template <typename T>
std::vector<T> pad_input(const BasicTensor<T>& input) {
  const std::size_t channels = input.dim(0), h = input.dim(1), w = input.dim(2);
  const std::size_t pw = w + 2, plane = (h + 2) * pw;
  std::vector<T> padded(channels * plane, T(0));
  const T* src = input.data().data();
  for (std::size_t c = 0; c < channels; ++c) {
    for (std::size_t i = 0; i < h; ++i) {
      T* row = padded.data() + c * plane + (i + 1) * pw + 1;
      const T* in_row = src + (c * h + i) * w;
      for (std::size_t j = 0; j < w; ++j) row[j] = in_row[j];
    }
  }
  return padded;
}

}  // namespace

template <typename T>
BasicTensor<T> conv2d_forward(const BasicTensor<T>& input, const BasicTensor<T>& kernels,
                              const BasicTensor<T>& bias) {
  check_conv_shapes(input, kernels);
  const std::size_t c_in = input.dim(0), h = input.dim(1), w = input.dim(2);
  const std::size_t c_out = kernels.dim(0);
  if (bias.size() != c_out) {
    throw ShapeError("conv2d bias " + shape_to_string(bias.shape()) + " does not match kernels " +
                     shape_to_string(kernels.shape()));
  }
  const std::size_t pw = w + 2, plane = (h + 2) * pw;
  const std::vector<T> padded = pad_input(input);
  BasicTensor<T> out({c_out, h, w});
  T* dst = out.data().data();
  const T* k = kernels.data().data();

  for (std::size_t o = 0; o < c_out; ++o) {
    T* out_plane = dst + o * h * w;
    for (std::size_t p = 0; p < h * w; ++p) out_plane[p] = bias[o];
    for (std::size_t c = 0; c < c_in; ++c) {
      const T* in_plane = padded.data() + c * plane;
      for (std::size_t u = 0; u < 3; ++u) {
        for (std::size_t v = 0; v < 3; ++v) {
          const T kv = k[((o * c_in + c) * 3 + u) * 3 + v];
          for (std::size_t i = 0; i < h; ++i) {
            const T* src = in_plane + (i + u) * pw + v;
            T* row = out_plane + i * w;
            for (std::size_t j = 0; j < w; ++j) row[j] += kv * src[j];
          }
        }
      }
    }
  }
  return out;
}

template <typename T>
Conv2dGrads<T> conv2d_backward(const BasicTensor<T>& input, const BasicTensor<T>& kernels,
                               const BasicTensor<T>& grad_out, bool need_input_grad) {
  check_conv_shapes(input, kernels);
  const std::size_t c_in = input.dim(0), h = input.dim(1), w = input.dim(2);
  const std::size_t c_out = kernels.dim(0);
  if (grad_out.shape() != Shape{c_out, h, w}) {
    throw ShapeError("conv2d_backward grad_out " + shape_to_string(grad_out.shape()) +
                     " does not match forward output [" + std::to_string(c_out) + "," +
                     std::to_string(h) + "," + std::to_string(w) + "]");
  }
  const std::size_t pw = w + 2, plane = (h + 2) * pw;
  const std::vector<T> padded = pad_input(input);
  const T* g = grad_out.data().data();
  const T* k = kernels.data().data();

  Conv2dGrads<T> grads;
  grads.bias = BasicTensor<T>({c_out});
  grads.kernels = BasicTensor<T>(kernels.shape());
  T* gk = grads.kernels.data().data();

  for (std::size_t o = 0; o < c_out; ++o) {
    const T* g_plane = g + o * h * w;
    T sum = T(0);
    for (std::size_t p = 0; p < h * w; ++p) sum += g_plane[p];
    grads.bias[o] = sum;

    for (std::size_t c = 0; c < c_in; ++c) {
      const T* in_plane = padded.data() + c * plane;
      for (std::size_t u = 0; u < 3; ++u) {
        for (std::size_t v = 0; v < 3; ++v) {
          T acc = T(0);
          for (std::size_t i = 0; i < h; ++i) {
            const T* src = in_plane + (i + u) * pw + v;
            const T* grow = g_plane + i * w;
            for (std::size_t j = 0; j < w; ++j) acc += src[j] * grow[j];
          }
          gk[((o * c_in + c) * 3 + u) * 3 + v] = acc;
        }
      }
    }
  }

  if (need_input_grad) {
    std::vector<T> grad_padded(c_in * plane, T(0));
    for (std::size_t o = 0; o < c_out; ++o) {
      const T* g_plane = g + o * h * w;
      for (std::size_t c = 0; c < c_in; ++c) {
        T* gp = grad_padded.data() + c * plane;
        for (std::size_t u = 0; u < 3; ++u) {
          for (std::size_t v = 0; v < 3; ++v) {
            const T kv = k[((o * c_in + c) * 3 + u) * 3 + v];
            for (std::size_t i = 0; i < h; ++i) {
              T* dst = gp + (i + u) * pw + v;
              const T* grow = g_plane + i * w;
              for (std::size_t j = 0; j < w; ++j) dst[j] += kv * grow[j];
            }
          }
        }
      }
    }
    grads.input = BasicTensor<T>(input.shape());
    T* gi = grads.input.data().data();
    for (std::size_t c = 0; c < c_in; ++c) {
      for (std::size_t i = 0; i < h; ++i) {
        const T* row = grad_padded.data() + c * plane + (i + 1) * pw + 1;
        for (std::size_t j = 0; j < w; ++j) gi[(c * h + i) * w + j] = row[j];
      }
    }
  }
  return grads;
}

template <typename T>
BasicTensor<T> dense_forward(const BasicTensor<T>& input, const BasicTensor<T>& weight,
                             const BasicTensor<T>& bias) {
  if (weight.rank() != 2 || weight.dim(1) != input.size() || bias.size() != weight.dim(0)) {
    throw ShapeError("dense expects weight [D_out,D_in], input [D_in], bias [D_out]; got weight " +
                     shape_to_string(weight.shape()) + ", input " + shape_to_string(input.shape()) +
                     ", bias " + shape_to_string(bias.shape()));
  }
  const std::size_t d_out = weight.dim(0), d_in = weight.dim(1);
  BasicTensor<T> out({d_out});
  const T* x = input.data().data();
  for (std::size_t o = 0; o < d_out; ++o) {
    const T* row = weight.data().data() + o * d_in;
    T acc = T(0);
    for (std::size_t i = 0; i < d_in; ++i) acc += row[i] * x[i];
    out[o] = acc + bias[o];
  }
  return out;
}

template <typename T>
DenseGrads<T> dense_backward(const BasicTensor<T>& input, const BasicTensor<T>& weight,
                             const BasicTensor<T>& grad_out) {
  if (weight.rank() != 2 || weight.dim(1) != input.size() || grad_out.size() != weight.dim(0)) {
    throw ShapeError("dense_backward expects weight [D_out,D_in], input [D_in], grad_out [D_out]; got weight " +
                     shape_to_string(weight.shape()) + ", input " + shape_to_string(input.shape()) +
                     ", grad_out " + shape_to_string(grad_out.shape()));
  }
  const std::size_t d_out = weight.dim(0), d_in = weight.dim(1);
  DenseGrads<T> grads;
  grads.input = BasicTensor<T>(input.shape());
  grads.weight = BasicTensor<T>(weight.shape());
  grads.bias = BasicTensor<T>({d_out});
  const T* x = input.data().data();
  T* gx = grads.input.data().data();
  for (std::size_t o = 0; o < d_out; ++o) {
    const T go = grad_out[o];
    grads.bias[o] = go;
    const T* row = weight.data().data() + o * d_in;
    T* gw = grads.weight.data().data() + o * d_in;
    for (std::size_t i = 0; i < d_in; ++i) {
      gw[i] = go * x[i];
      gx[i] += row[i] * go;
    }
  }
  return grads;
}

template <typename T>
BasicTensor<T> relu(const BasicTensor<T>& input) {
  BasicTensor<T> out = input;
  for (auto& x : out.data()) x = x > T(0) ? x : T(0);
  return out;
}

template <typename T>
BasicTensor<T> relu_backward(const BasicTensor<T>& input, const BasicTensor<T>& grad_out) {
  if (input.shape() != grad_out.shape()) {
    throw ShapeError("relu_backward shape mismatch: " + shape_to_string(input.shape()) + " vs " +
                     shape_to_string(grad_out.shape()));
  }
  BasicTensor<T> out(input.shape());
  for (std::size_t i = 0; i < input.size(); ++i) out[i] = input[i] > T(0) ? grad_out[i] : T(0);
  return out;
}

namespace {
template <typename T>
T logistic(T x) {
  if (x >= T(0)) return T(1) / (T(1) + std::exp(-x));
  const T e = std::exp(x);
  return e / (T(1) + e);
}
}  // namespace

template <typename T>
BasicTensor<T> sigmoid(const BasicTensor<T>& input) {
  BasicTensor<T> out = input;
  for (auto& x : out.data()) x = logistic(x);
  return out;
}

template <typename T>
BasicTensor<T> sigmoid_backward(const BasicTensor<T>& input, const BasicTensor<T>& grad_out) {
  if (input.shape() != grad_out.shape()) {
    throw ShapeError("sigmoid_backward shape mismatch: " + shape_to_string(input.shape()) + " vs " +
                     shape_to_string(grad_out.shape()));
  }
  BasicTensor<T> out(input.shape());
  for (std::size_t i = 0; i < input.size(); ++i) {
    const T s = logistic(input[i]);
    out[i] = grad_out[i] * s * (T(1) - s);
  }
  return out;
}

template <typename T>
BasicTensor<T> softmax(const BasicTensor<T>& input) {
  BasicTensor<T> out = input;
  if (out.empty()) return out;
  T peak = out[0];
  for (T x : out.data()) peak = x > peak ? x : peak;
  T sum = T(0);
  for (auto& x : out.data()) {
    x = std::exp(x - peak);
    sum += x;
  }
  for (auto& x : out.data()) x /= sum;
  return out;
}

template <typename T>
T euclidean_distance(const BasicTensor<T>& a, const BasicTensor<T>& b) {
  if (a.size() != b.size()) {
    throw ShapeError("euclidean_distance length mismatch: " + shape_to_string(a.shape()) + " vs " +
                     shape_to_string(b.shape()));
  }
  T sum = T(0);
  for (std::size_t i = 0; i < a.size(); ++i) {
    const T d = a[i] - b[i];
    sum += d * d;
  }
  return std::sqrt(sum);
}

template <typename T>
std::pair<BasicTensor<T>, BasicTensor<T>> euclidean_distance_backward(const BasicTensor<T>& a,
                                                                      const BasicTensor<T>& b,
                                                                      T grad_distance) {
  const T dist = euclidean_distance(a, b);
  BasicTensor<T> ga(a.shape()), gb(b.shape());
  if (double(dist) < kDistanceGradFloor) return {std::move(ga), std::move(gb)};
  for (std::size_t i = 0; i < a.size(); ++i) {
    const T g = grad_distance * (a[i] - b[i]) / dist;
    ga[i] = g;
    gb[i] = -g;
  }
  return {std::move(ga), std::move(gb)};
}

#define ONESHOT_INSTANTIATE_OPS(T)                                                                  \
  template BasicTensor<T> conv2d_forward(const BasicTensor<T>&, const BasicTensor<T>&,            \
                                         const BasicTensor<T>&);                                  \
  template Conv2dGrads<T> conv2d_backward(const BasicTensor<T>&, const BasicTensor<T>&,           \
                                          const BasicTensor<T>&, bool);                           \
  template BasicTensor<T> dense_forward(const BasicTensor<T>&, const BasicTensor<T>&,             \
                                        const BasicTensor<T>&);                                   \
  template DenseGrads<T> dense_backward(const BasicTensor<T>&, const BasicTensor<T>&,             \
                                        const BasicTensor<T>&);                                   \
  template BasicTensor<T> relu(const BasicTensor<T>&);                                            \
  template BasicTensor<T> relu_backward(const BasicTensor<T>&, const BasicTensor<T>&);            \
  template BasicTensor<T> sigmoid(const BasicTensor<T>&);                                         \
  template BasicTensor<T> sigmoid_backward(const BasicTensor<T>&, const BasicTensor<T>&);         \
  template BasicTensor<T> softmax(const BasicTensor<T>&);                                         \
  template T euclidean_distance(const BasicTensor<T>&, const BasicTensor<T>&);                    \
  template std::pair<BasicTensor<T>, BasicTensor<T>> euclidean_distance_backward(                 \
      const BasicTensor<T>&, const BasicTensor<T>&, T);

ONESHOT_INSTANTIATE_OPS(float)
ONESHOT_INSTANTIATE_OPS(double)

#undef ONESHOT_INSTANTIATE_OPS

}  // namespace oneshot
