#include <cmath>

#include "impact/compare.hpp"
#include "impact/hdim.hpp"
#include "impact/simengine.hpp"

namespace impact {

RefineResult refine_scale(const HdimKernels& kernels, const EventStream& stream, const ResponseSet& target_R,
                          const RefineOptions& options) {
  if (!(options.lower > 0.0) || !(options.upper > options.lower)) throw Error("scale bounds must satisfy 0 < lower < upper");
  const LagGrid& grid = target_R.grid;

  RefineResult result;
  auto objective = [&](double s) {
    HdimKernels trial = kernels;
    trial.scale = s;
    const SimPath path = simulate_hdim(stream, trial);
    ++result.evaluations;
    return compare_curves(estimate_R(path.stream, grid), target_R, options.weights).relative_l2;
  };

  result.unrefined_objective = objective(kernels.scale);

  // Golden-section search in log(scale).
  const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double a = std::log(options.lower);
  double b = std::log(options.upper);
  const double f_lo = objective(options.lower);
  const double f_hi = objective(options.upper);
  double c = b - inv_phi * (b - a);
  double d = a + inv_phi * (b - a);
  double fc = objective(std::exp(c));
  double fd = objective(std::exp(d));

  const double spread = std::max({f_lo, f_hi, fc, fd}) - std::min({f_lo, f_hi, fc, fd});
  if (spread <= 1e-12 * (1.0 + std::abs(f_lo))) {
    result.non_identifiable = true;
    result.kernels = kernels;
    result.objective = result.unrefined_objective;
    return result;
  }

  for (std::size_t iter = 0; iter < options.max_iterations && (b - a) > options.tolerance; ++iter) {
    if (fc < fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - inv_phi * (b - a);
      fc = objective(std::exp(c));
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + inv_phi * (b - a);
      fd = objective(std::exp(d));
    }
  }

  double best_s = fc < fd ? std::exp(c) : std::exp(d);
  double best_f = std::min(fc, fd);
  if (f_lo < best_f) {
    best_s = options.lower;
    best_f = f_lo;
  }
  if (f_hi < best_f) {
    best_s = options.upper;
    best_f = f_hi;
  }
  const double edge = 2.0 * options.tolerance;
  result.hit_bound = std::log(best_s) - std::log(options.lower) <= edge || std::log(options.upper) - std::log(best_s) <= edge;
  result.kernels = kernels;
  result.kernels.scale = best_s;
  result.objective = best_f;
  return result;
}

}  // namespace impact
