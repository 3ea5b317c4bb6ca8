#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <string_view>
#include <optional>
#include <vector>

#include "impact/estimators.hpp"
#include "impact/kernel_system.hpp"

namespace impact {

struct NoiseModel {
  /// Variance of the i.i.d. return noise, ticks^2 per event.
  double D0 = 0.0;
  /// Constant high-frequency floor added to every D(l).
  double D_hf = 0.0;
  /// Attach the noise to price-changing events only. Honoured by the
  /// influence-matrix model; the propagator model always adds noise to
  /// every event.
  bool price_changing_only = false;

  void validate() const;
};

enum class Provenance { ClosedFormTim, ClosedFormHdim, ConstantGap, Simulated };

std::string_view to_string(Provenance provenance);
std::optional<Provenance> parse_provenance(std::string_view text);

struct DiffusionCurve {
  /// D[l] for l = 0..ell_max; D[0] = 0.
  std::vector<double> D;
  Provenance provenance = Provenance::Simulated;

  [[nodiscard]] std::size_t ell_max() const { return D.empty() ? 0 : D.size() - 1; }
  [[nodiscard]] double at(std::size_t lag) const { return D[lag]; }
  [[nodiscard]] double normalized(std::size_t lag) const { return D[lag] / static_cast<double>(lag); }
};

/// Propagators G_pi(l), l = 1..L. Increments vanish beyond L, so G stays
/// flat from L on.
struct TimKernels {
  LagGrid grid;
  /// G[pi][l] for l = 0..L with G[pi][0] = 0 unused.
  std::array<std::vector<double>, kNumTypes> G;
  std::array<bool, kNumTypes> active{};
  double condition = 0.0;

  [[nodiscard]] std::size_t length() const { return grid.ell_max; }
  /// G_pi(l) for l >= 1, flat beyond L.
  [[nodiscard]] double at(EventType type, std::size_t lag) const;
  /// g_pi(l) = G_pi(l+1) - G_pi(l), zero for l >= L.
  [[nodiscard]] double increment(EventType type, std::size_t lag) const;

  static TimKernels from_G(const LagGrid& grid, const std::array<std::vector<double>, kNumTypes>& G);
};

struct CalibrationOptions {
  SolverOptions solver;
  /// Calibrate only the types present in the data, leaving absent types at
  /// zero. Otherwise an absent type is an error.
  bool allow_absent_types = false;
};

TimKernels calibrate_tim(const CorrelationSet& C, const ResponseSet& R, const EventStats& stats,
                         const LagGrid& grid, const CalibrationOptions& options = {});

/// R implied by the kernels and correlations, l = 0..L.
ResponseSet predict_R_tim(const TimKernels& kernels, const CorrelationSet& C, const EventStats& stats);

/// Single event type with xi_t = epsilon_t v_t^theta.
struct SingleEventCurves {
  /// <xi_t xi_{t+l}>, l = 0..max_lag.
  std::vector<double> C;
  /// <r_{t+l} xi_t>, l = 0..max_lag.
  std::vector<double> S;
};

SingleEventCurves single_event_curves(std::span<const int> signs, std::span<const double> volumes,
                                      std::span<const double> returns, double theta, std::size_t max_lag);

struct SingleKernel {
  /// G[l] for l = 0..L (G[0] unused).
  std::vector<double> G;
  double condition = 0.0;
};

/// Return-based single-event fit: S(l) = sum_{j<L} x(j) C(l - j) with
/// x(0) = G(1) and x(j) = G(j+1) - G(j).
SingleKernel calibrate_single(std::span<const double> C, std::span<const double> S, std::size_t L,
                              const SolverOptions& options = {});

DiffusionCurve predict_D_tim(const TimKernels& kernels, const CorrelationSet& C, const EventStats& stats,
                             const NoiseModel& noise, std::size_t ell_max);

/// Constant-gap model: every price-changing event moves the mid by its
/// realized gap. Types absent from the data contribute nothing.
DiffusionCurve constant_gap_curve(const EventStats& stats, const CorrelationSet& C, const NoiseModel& noise,
                                  std::size_t ell_max);

namespace serial {
DiffusionCurve predict_D_tim(const TimKernels& kernels, const CorrelationSet& C, const EventStats& stats,
                             const NoiseModel& noise, std::size_t ell_max);
}  // namespace serial

}  // namespace impact
