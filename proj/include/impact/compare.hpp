#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "impact/estimators.hpp"
#include "impact/tim.hpp"

namespace impact {

struct CurveDistance {
  std::string label;
  std::size_t points = 0;
  /// sqrt(sum w (a - b)^2) / sqrt(sum w b^2); the absolute L2 when b is zero.
  double relative_l2 = 0.0;
  double max_abs = 0.0;
};

struct ComparisonReport {
  std::vector<CurveDistance> curves;
  /// Pooled over all curves.
  double relative_l2 = 0.0;
  double max_abs = 0.0;
};

/// Compares a against the reference b over lags 1..ell_max. `weights` is
/// indexed by lag (0..ell_max) and defaults to uniform.
ComparisonReport compare_curves(const DiffusionCurve& a, const DiffusionCurve& b, std::span<const double> weights = {});

/// Per-type comparison over lags 1..ell_max for types present in both sets.
ComparisonReport compare_curves(const ResponseSet& a, const ResponseSet& b, std::span<const double> weights = {});

std::string to_json(const ComparisonReport& report);

}  // namespace impact
