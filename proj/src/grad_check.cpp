#include "oneshot/grad_check.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "oneshot/error.hpp"

namespace oneshot {

double relative_error(double analytic, double numeric, double abs_floor) {
  const double denom = std::max({std::abs(analytic), std::abs(numeric), abs_floor});
  return std::abs(analytic - numeric) / denom;
}

GradCheckResult grad_check(const std::function<GradProbe(std::span<const double>)>& f,
                           std::span<const double> point, std::span<const double> analytic,
                           const GradCheckOptions& options) {
  if (point.size() != analytic.size()) {
    throw ShapeError("grad_check: point has " + std::to_string(point.size()) +
                     " coordinates but analytic gradient has " + std::to_string(analytic.size()));
  }
  if (!(options.step > 0.0)) throw DomainError("grad_check: step must be positive");

  std::vector<double> x(point.begin(), point.end());
  GradCheckResult result;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double origin = x[i];
    double plus = origin + options.step;
    double minus = origin - options.step;
    if (options.precision == Precision::Float32) {
      plus = static_cast<float>(plus);
      minus = static_cast<float>(minus);
    }
    x[i] = plus;
    const GradProbe fp = f(x);
    x[i] = minus;
    const GradProbe fm = f(x);
    x[i] = origin;

    if (fp.region != fm.region) {
      ++result.skipped;
      continue;
    }
    const double numeric = (fp.value - fm.value) / (plus - minus);
    const double err = relative_error(analytic[i], numeric, options.abs_floor);
    ++result.checked;
    if (err > result.max_rel_error || !std::isfinite(err)) {
      result.max_rel_error = std::isfinite(err) ? err : INFINITY;
      result.worst_index = i;
    }
  }
  return result;
}

GradCheckResult grad_check(const std::function<double(std::span<const double>)>& f,
                           std::span<const double> point, std::span<const double> analytic,
                           const GradCheckOptions& options) {
  return grad_check(
      [&f](std::span<const double> x) { return GradProbe{f(x), 0}; }, point, analytic, options);
}

}  // namespace oneshot
