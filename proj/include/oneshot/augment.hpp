#pragma once

#include "oneshot/image.hpp"
#include "oneshot/rng.hpp"
#include "oneshot/tensor.hpp"

namespace oneshot {

/// Random right-angle rotation, independent horizontal/vertical flips and an
/// additive brightness shift beta ~ U[lo, hi] clamped to [0,255].
struct AugmentConfig {
  bool rotate = true;
  bool hflip = true;
  bool vflip = true;
  bool brightness = true;
  double flip_prob = 0.5;
  double brightness_lo = -10.0;
  double brightness_hi = 10.0;

  static AugmentConfig disabled() { return {false, false, false, false, 0.5, -10.0, 10.0}; }
};

/// One concrete draw of the augmentation randomness.
struct AugmentParams {
  int quarter_turns = 0;  // counter-clockwise, 0..3
  bool hflip = false;
  bool vflip = false;
  double beta = 0.0;
};

/// Draws all four parameters regardless of which transforms are enabled, so
/// toggling one transform never shifts the random stream of the others.
AugmentParams draw_augment(const AugmentConfig& cfg, Rng& rng);

/// Applies rotate -> hflip -> vflip -> brightness, skipping disabled steps.
GrayImage apply_augment(const GrayImage& image, const AugmentParams& params, const AugmentConfig& cfg);

GrayImage augment(const GrayImage& image, const AugmentConfig& cfg, Rng& rng);

/// Counter-clockwise rotation by quarter_turns * 90 degrees; square images only.
GrayImage rotate_quarter(const GrayImage& image, int quarter_turns);
GrayImage flip_horizontal(const GrayImage& image);
GrayImage flip_vertical(const GrayImage& image);
/// max(min(p + beta, 255), 0), then rounded half-up to the integer grid.
GrayImage shift_brightness(const GrayImage& image, double beta);

/// Each output pixel is the mean of a 2x2 block, rounded half-up.
GrayImage resize_half(const GrayImage& image);

/// pixel / 127.5 - 1 as a [1,H,W] tensor.
Tensor normalize(const GrayImage& image);
/// Inverse of normalize, rounded to the nearest gray level and clamped.
GrayImage denormalize(const Tensor& tensor);

/// Halves the image until its side equals `side`, then normalizes. Throws
/// ShapeError if the image is not square or `side` is unreachable by halving.
Tensor preprocess(const GrayImage& image, std::size_t side);

}  // namespace oneshot
