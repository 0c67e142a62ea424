#include "oneshot/tensor.hpp"

#include <cmath>

namespace oneshot {

std::string shape_to_string(const Shape& shape) {
  std::string out = "[";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) out += ",";
    out += std::to_string(shape[i]);
  }
  return out + "]";
}

std::size_t shape_product(const Shape& shape) {
  std::size_t n = 1;
  for (auto d : shape) n *= d;
  return shape.empty() ? 0 : n;
}

bool all_finite(std::span<const float> values) {
  for (float v : values) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

double l2_norm(std::span<const float> values) {
  double s = 0.0;
  for (float v : values) s += double(v) * double(v);
  return std::sqrt(s);
}

}  // namespace oneshot
