#include "oneshot/synth.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "oneshot/error.hpp"
#include "oneshot/rng.hpp"

namespace oneshot {
namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

using Canvas = std::vector<double>;

void stripes(Canvas& px, std::size_t n, double scale, double contrast, Rng& rng) {
  const double angle = rng.uniform(0.0, std::numbers::pi);
  const double period = rng.uniform(6.0, 10.0) * scale;
  const double phase = rng.uniform(0.0, kTwoPi);
  const double cx = std::cos(angle), sy = std::sin(angle);
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t c = 0; c < n; ++c) {
      px[r * n + c] += contrast * std::sin(kTwoPi * (double(c) * cx + double(r) * sy) / period + phase);
    }
  }
}

void blobs(Canvas& px, std::size_t n, double scale, double contrast, Rng& rng) {
  const std::size_t count = 6 + rng.uniform_index(5);
  for (std::size_t k = 0; k < count; ++k) {
    const double x0 = rng.uniform(0.0, double(n)), y0 = rng.uniform(0.0, double(n));
    const double radius = rng.uniform(3.0, 7.0) * scale;
    const double amp = (rng.bernoulli(0.5) ? 1.0 : -1.0) * contrast * rng.uniform(1.0, 1.8);
    for (std::size_t r = 0; r < n; ++r) {
      for (std::size_t c = 0; c < n; ++c) {
        const double d2 = (double(c) - x0) * (double(c) - x0) + (double(r) - y0) * (double(r) - y0);
        px[r * n + c] += amp * std::exp(-d2 / (2.0 * radius * radius));
      }
    }
  }
}

void scratches(Canvas& px, std::size_t n, double scale, double contrast, Rng& rng) {
  const std::size_t count = 2 + rng.uniform_index(3);
  for (std::size_t k = 0; k < count; ++k) {
    const double angle = rng.uniform(0.0, std::numbers::pi);
    const double x0 = rng.uniform(0.0, double(n)), y0 = rng.uniform(0.0, double(n));
    const double half_len = rng.uniform(0.3, 0.6) * double(n);
    const double width = rng.uniform(0.6, 1.4) * scale;
    const double amp = (rng.bernoulli(0.7) ? 1.0 : -1.0) * contrast * 2.0;
    const double dx = std::cos(angle), dy = std::sin(angle);
    for (std::size_t r = 0; r < n; ++r) {
      for (std::size_t c = 0; c < n; ++c) {
        const double ox = double(c) - x0, oy = double(r) - y0;
        const double along = ox * dx + oy * dy;
        const double across = -ox * dy + oy * dx;
        if (std::abs(along) > half_len) continue;
        px[r * n + c] += amp * std::exp(-across * across / (2.0 * width * width));
      }
    }
  }
}

void grid(Canvas& px, std::size_t n, double scale, double contrast, Rng& rng) {
  const double period = rng.uniform(16.0, 24.0) * scale;
  const double width = rng.uniform(1.6, 2.4) * scale;
  const double phase_x = rng.uniform(0.0, period), phase_y = rng.uniform(0.0, period);
  const double amp = (rng.bernoulli(0.5) ? 1.0 : -1.0) * contrast * 1.8;
  auto line = [period, width](double t) {
    const double d = std::fmod(t, period);
    const double off = std::min(d, period - d);
    return std::exp(-off * off / (2.0 * width * width));
  };
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t c = 0; c < n; ++c) {
      px[r * n + c] += amp * std::max(line(double(c) + phase_x), line(double(r) + phase_y));
    }
  }
}

void speckle(Canvas& px, std::size_t n, double, double contrast, Rng& rng) {
  for (std::size_t i = 0; i < n * n; ++i) {
    px[i] += contrast * 1.2 * rng.normal();
    if (rng.bernoulli(0.03)) px[i] += contrast * 2.5;
  }
}

void bands(Canvas& px, std::size_t n, double scale, double contrast, Rng& rng) {
  const double angle = rng.uniform(0.0, std::numbers::pi);
  const double period = rng.uniform(40.0, 80.0) * scale;
  const double phase = rng.uniform(0.0, kTwoPi);
  const double cx = std::cos(angle), sy = std::sin(angle);
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t c = 0; c < n; ++c) {
      px[r * n + c] += 1.5 * contrast * std::sin(kTwoPi * (double(c) * cx + double(r) * sy) / period + phase);
    }
  }
}

}  // namespace

Dataset synth_generate(std::size_t class_index, std::size_t count, std::size_t side, std::uint64_t seed) {
  if (class_index >= kSyntheticFamilies) {
    throw ConfigError("synthetic class index must be below " + std::to_string(kSyntheticFamilies));
  }
  if (side < 8) throw ConfigError("synthetic images need side >= 8");
  using Painter = void (*)(Canvas&, std::size_t, double, double, Rng&);
  constexpr Painter painters[kSyntheticFamilies] = {stripes, blobs, scratches, grid, speckle, bands};
  // Feature sizes are authored for 64-pixel images and scaled with the side.
  const double scale = double(side) / 64.0;
  const std::string label = synthetic_class_name(class_index);

  Dataset out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    Rng rng = Rng::derive(seed, {string_key("synth"), class_index, i});
    const double base = rng.uniform(70.0, 170.0);
    const double contrast = rng.uniform(30.0, 60.0);
    Canvas px(side * side, base);
    painters[class_index](px, side, scale, contrast, rng);
    GrayImage img(side, side);
    for (std::size_t k = 0; k < px.size(); ++k) {
      const double v = px[k] + 6.0 * rng.normal();
      img.pixels[k] = static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0, 255.0)));
    }
    out.push_back({std::move(img), label, label + "_" + std::to_string(i + 1) + ".pgm"});
  }
  return out;
}

Dataset synth_dataset(std::size_t num_classes, std::size_t count_per_class, std::size_t side,
                      std::uint64_t seed) {
  Dataset all;
  for (std::size_t c = 0; c < num_classes; ++c) {
    Dataset part = synth_generate(c, count_per_class, side, seed);
    all.insert(all.end(), std::make_move_iterator(part.begin()), std::make_move_iterator(part.end()));
  }
  return all;
}

}  // namespace oneshot
