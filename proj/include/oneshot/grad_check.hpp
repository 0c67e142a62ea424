#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>

namespace oneshot {

/// Value of the function under test at one point. `region` identifies the
/// piecewise-smooth piece the point falls in (e.g. a hash of ReLU sign
/// patterns); coordinates whose +h and -h probes land in different regions are
/// skipped because central differences straddle a kink there.
struct GradProbe {
  double value = 0.0;
  std::uint64_t region = 0;
};

enum class Precision {
  Float32,  // perturbed coordinates are rounded to float before evaluation
  Float64,
};

struct GradCheckOptions {
  double step = 1e-3;
  Precision precision = Precision::Float64;
  // Relative error is |a - n| / max(|a|, |n|, abs_floor).
  double abs_floor = 1e-4;
};

struct GradCheckResult {
  double max_rel_error = 0.0;
  std::size_t worst_index = 0;
  std::size_t checked = 0;
  std::size_t skipped = 0;
};

double relative_error(double analytic, double numeric, double abs_floor);

/// Compares `analytic` against central differences (f(x+h) - f(x-h)) / 2h for
/// every coordinate of `point` and reports the worst relative error.
GradCheckResult grad_check(const std::function<GradProbe(std::span<const double>)>& f,
                           std::span<const double> point, std::span<const double> analytic,
                           const GradCheckOptions& options = {});

GradCheckResult grad_check(const std::function<double(std::span<const double>)>& f,
                           std::span<const double> point, std::span<const double> analytic,
                           const GradCheckOptions& options = {});

}  // namespace oneshot
