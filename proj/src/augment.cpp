#include "oneshot/augment.hpp"

#include <algorithm>
#include <cmath>

namespace oneshot {

AugmentParams draw_augment(const AugmentConfig& cfg, Rng& rng) {
  AugmentParams p;
  p.quarter_turns = static_cast<int>(rng.uniform_index(4));
  p.hflip = rng.bernoulli(cfg.flip_prob);
  p.vflip = rng.bernoulli(cfg.flip_prob);
  p.beta = rng.uniform_closed(cfg.brightness_lo, cfg.brightness_hi);
  return p;
}

GrayImage apply_augment(const GrayImage& image, const AugmentParams& params, const AugmentConfig& cfg) {
  GrayImage out = image;
  if (cfg.rotate) out = rotate_quarter(out, params.quarter_turns);
  if (cfg.hflip && params.hflip) out = flip_horizontal(out);
  if (cfg.vflip && params.vflip) out = flip_vertical(out);
  if (cfg.brightness) out = shift_brightness(out, params.beta);
  return out;
}

GrayImage augment(const GrayImage& image, const AugmentConfig& cfg, Rng& rng) {
  return apply_augment(image, draw_augment(cfg, rng), cfg);
}

GrayImage rotate_quarter(const GrayImage& image, int quarter_turns) {
  if (image.width != image.height) {
    throw ShapeError("right-angle rotation needs a square image, got " + std::to_string(image.width) + "x" +
                     std::to_string(image.height));
  }
  const std::size_t n = image.width;
  const int k = ((quarter_turns % 4) + 4) % 4;
  if (k == 0) return image;
  GrayImage out(n, n);
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t c = 0; c < n; ++c) {
      switch (k) {
        case 1: out.at(r, c) = image.at(c, n - 1 - r); break;
        case 2: out.at(r, c) = image.at(n - 1 - r, n - 1 - c); break;
        default: out.at(r, c) = image.at(n - 1 - c, r); break;
      }
    }
  }
  return out;
}

GrayImage flip_horizontal(const GrayImage& image) {
  GrayImage out = image;
  for (std::size_t r = 0; r < image.height; ++r) {
    for (std::size_t c = 0; c < image.width; ++c) out.at(r, c) = image.at(r, image.width - 1 - c);
  }
  return out;
}

GrayImage flip_vertical(const GrayImage& image) {
  GrayImage out = image;
  for (std::size_t r = 0; r < image.height; ++r) {
    for (std::size_t c = 0; c < image.width; ++c) out.at(r, c) = image.at(image.height - 1 - r, c);
  }
  return out;
}

GrayImage shift_brightness(const GrayImage& image, double beta) {
  GrayImage out = image;
  for (auto& p : out.pixels) {
    const double v = std::max(std::min(double(p) + beta, 255.0), 0.0);
    p = static_cast<std::uint8_t>(std::floor(v + 0.5));
  }
  return out;
}

GrayImage resize_half(const GrayImage& image) {
  if (image.width % 2 || image.height % 2 || image.width == 0 || image.height == 0) {
    throw ShapeError("resize_half needs even dimensions, got " + std::to_string(image.width) + "x" +
                     std::to_string(image.height));
  }
  GrayImage out(image.width / 2, image.height / 2);
  for (std::size_t r = 0; r < out.height; ++r) {
    for (std::size_t c = 0; c < out.width; ++c) {
      const unsigned sum = unsigned(image.at(2 * r, 2 * c)) + image.at(2 * r, 2 * c + 1) +
                           image.at(2 * r + 1, 2 * c) + image.at(2 * r + 1, 2 * c + 1);
      out.at(r, c) = static_cast<std::uint8_t>((sum + 2) / 4);
    }
  }
  return out;
}

Tensor normalize(const GrayImage& image) {
  Tensor out({1, image.height, image.width});
  for (std::size_t i = 0; i < image.pixels.size(); ++i) out[i] = float(image.pixels[i]) / 127.5f - 1.0f;
  return out;
}

GrayImage denormalize(const Tensor& tensor) {
  if (tensor.rank() != 3 || tensor.dim(0) != 1) {
    throw ShapeError("denormalize expects [1,H,W], got " + shape_to_string(tensor.shape()));
  }
  GrayImage out(tensor.dim(2), tensor.dim(1));
  for (std::size_t i = 0; i < tensor.size(); ++i) {
    const double v = std::clamp((double(tensor[i]) + 1.0) * 127.5, 0.0, 255.0);
    out.pixels[i] = static_cast<std::uint8_t>(std::lround(v));
  }
  return out;
}

Tensor preprocess(const GrayImage& image, std::size_t side) {
  if (image.width != image.height) {
    throw ShapeError("network input must be square, got " + std::to_string(image.width) + "x" +
                     std::to_string(image.height));
  }
  if (image.width == side) return normalize(image);
  GrayImage current = image;
  while (current.width > side && current.width % 2 == 0) current = resize_half(current);
  if (current.width != side) {
    throw ShapeError("cannot reduce a " + std::to_string(image.width) + "x" + std::to_string(image.height) +
                     " image to side " + std::to_string(side) + " by 2x2 averaging");
  }
  return normalize(current);
}

}  // namespace oneshot
