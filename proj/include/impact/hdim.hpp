#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <vector>

#include "impact/estimators.hpp"
#include "impact/tim.hpp"

namespace impact {

/// Influence matrix kappa_{pi1,pi2}(l) for all sources pi1, price-changing
/// targets pi2 and l = 1..L. Entries vanish beyond L.
struct HdimKernels {
  LagGrid grid;
  /// kappa[pi1][pc_index(pi2)][l] for l = 0..L, index 0 unused.
  std::array<std::array<std::vector<double>, kNumPriceChanging>, kNumTypes> kappa;
  std::array<double, kNumPriceChanging> delta_R{};
  double scale = 1.0;
  double condition = 0.0;

  [[nodiscard]] std::size_t length() const { return grid.ell_max; }
  /// Unscaled entry, zero outside 1..L.
  [[nodiscard]] double raw(EventType source, EventType target, std::size_t lag) const;
  /// scale * kappa, zero outside 1..L and for neutral targets.
  [[nodiscard]] double effective(EventType source, EventType target, std::size_t lag) const;
  [[nodiscard]] double gap(EventType target) const {
    return is_price_changing(target) ? delta_R[pc_index(target)] : 0.0;
  }

  static HdimKernels zero(const LagGrid& grid, const std::array<double, kNumPriceChanging>& delta_R);
  /// Kernels equivalent to a propagator model: kappa_{pi1,pi2}(l) = g_pi1(l)
  /// for every target and delta_R = G(1).
  static HdimKernels from_tim(const TimKernels& tim);
};

/// Realized gaps of all price-changing types, or MissingInput.
std::array<double, kNumPriceChanging> realized_gaps(const EventStats& stats);

HdimKernels calibrate_hdim(const CorrelationSet& C, const ReturnResponseSet& S, const EventStats& stats,
                           const LagGrid& grid, const CalibrationOptions& options = {});

/// S and R implied by the kernels through the two-body factorization.
ReturnResponseSet predict_S_hdim(const HdimKernels& kernels, const CorrelationSet& C, const EventStats& stats);
ResponseSet predict_R_hdim(const HdimKernels& kernels, const CorrelationSet& C, const EventStats& stats);

/// dG*_pi(l) = sum_{n=1}^{l-1} sum_pi' P(pi') kappa_{pi,pi'}(n), stored
/// per type for l = 0..L (index 0 unused).
struct DeltaGStar {
  LagGrid grid;
  std::array<std::vector<double>, kNumTypes> curve;
};

DeltaGStar delta_g_star(const HdimKernels& kernels, const EventStats& stats);

DiffusionCurve predict_D_hdim(const HdimKernels& kernels, const CorrelationSet& C, const EventStats& stats,
                              const NoiseModel& noise, std::size_t ell_max);

/// Constant-gap response: R_pi(l) = dR_pi + sum_{0<t<l} sum_pi1 dR_pi1 P(pi1) C_{pi,pi1}(t),
/// with dR read as 0 for neutral pi.
ResponseSet large_tick_R(const EventStats& stats, const CorrelationSet& C, const LagGrid& grid);

struct RefineOptions {
  double lower = 0.1;
  double upper = 10.0;
  /// Stop once the bracket is narrower than this, relative to the scale.
  double tolerance = 1e-4;
  std::size_t max_iterations = 100;
  /// Optional per-lag weights for l = 0..ell_max; empty means uniform.
  std::vector<double> weights;
};

struct RefineResult {
  HdimKernels kernels;
  double objective = 0.0;
  double unrefined_objective = 0.0;
  std::size_t evaluations = 0;
  bool hit_bound = false;
  /// The objective does not depend on the scale (e.g. kappa == 0).
  bool non_identifiable = false;
};

/// One-dimensional search for the kappa scale that makes the historical
/// replay reproduce target_R. The replay is noise-free and deterministic.
RefineResult refine_scale(const HdimKernels& kernels, const EventStream& stream, const ResponseSet& target_R,
                          const RefineOptions& options = {});

namespace serial {
/// Term-by-term evaluation of the cross and quadratic blocks. O(l L^2) per
/// lag, for testing on small grids.
DiffusionCurve predict_D_hdim(const HdimKernels& kernels, const CorrelationSet& C, const EventStats& stats,
                              const NoiseModel& noise, std::size_t ell_max);
}  // namespace serial

}  // namespace impact
