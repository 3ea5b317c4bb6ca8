#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "impact/event_model.hpp"

namespace impact {

/// Dense lag grid 1..ell_max used for calibration. `display_lags` is an
/// optional log-spaced subset for output only.
struct LagGrid {
  std::size_t ell_max = 256;
  std::vector<std::size_t> display_lags;

  static LagGrid with_log_display(std::size_t ell_max, std::size_t points_per_decade = 10);
};

struct EventStats {
  std::int64_t total = 0;
  std::array<std::int64_t, kNumTypes> counts{};
  std::array<double, kNumTypes> P{};
  /// Mean realized gap per price-changing type; empty when the type never occurs.
  std::array<std::optional<double>, kNumPriceChanging> delta_R{};

  [[nodiscard]] double prob(EventType type) const { return P[index(type)]; }
  [[nodiscard]] bool present(EventType type) const { return counts[index(type)] > 0; }
  /// Realized gap of a price-changing type. Throws MissingInput if absent.
  [[nodiscard]] double realized_gap(EventType type) const;
  /// Realized gap with neutral types read as zero.
  [[nodiscard]] double gap_or_zero(EventType type) const;
  /// Total probability of price-changing events.
  [[nodiscard]] double price_changing_probability() const;
};

/// Real values indexed by (first type, second type, lag) with lag 0..max_lag.
class PairCurves {
 public:
  PairCurves() = default;
  explicit PairCurves(std::size_t max_lag, double fill = 0.0);

  [[nodiscard]] std::size_t max_lag() const { return max_lag_; }
  [[nodiscard]] bool empty() const { return data_.empty(); }

  double& at(EventType a, EventType b, std::size_t lag) { return data_[offset(a, b) + lag]; }
  [[nodiscard]] double at(EventType a, EventType b, std::size_t lag) const { return data_[offset(a, b) + lag]; }
  [[nodiscard]] std::span<const double> curve(EventType a, EventType b) const {
    return {data_.data() + offset(a, b), max_lag_ + 1};
  }

  friend bool operator==(const PairCurves&, const PairCurves&) = default;

 private:
  [[nodiscard]] std::size_t offset(EventType a, EventType b) const {
    return (index(a) * kNumTypes + index(b)) * (max_lag_ + 1);
  }
  std::size_t max_lag_ = 0;
  std::vector<double> data_;
};

/// Signed-event correlations C and event-type correlations Pi on lags
/// 0..max_lag. The first index is the earlier event; negative lags follow
/// from C_{a,b}(-l) = C_{b,a}(l).
struct CorrelationSet {
  LagGrid grid;
  std::array<double, kNumTypes> P{};
  PairCurves C;
  PairCurves Pi;
  /// Within-session pairs available at each lag.
  std::vector<std::int64_t> pair_counts;

  [[nodiscard]] std::size_t max_lag() const { return C.max_lag(); }
  [[nodiscard]] bool has_pi() const { return !Pi.empty(); }
  [[nodiscard]] bool present(EventType type) const { return P[index(type)] > 0.0; }
  /// C at a signed lag. Throws MissingInput for absent types and
  /// GridMismatch beyond max_lag.
  [[nodiscard]] double c(EventType a, EventType b, std::ptrdiff_t lag) const;
  [[nodiscard]] double pi(EventType a, EventType b, std::ptrdiff_t lag) const;
};

/// R_pi(l) for l = 0..ell_max (R(0) = 0).
struct ResponseSet {
  LagGrid grid;
  std::array<std::vector<double>, kNumTypes> R;
  std::array<std::int64_t, kNumTypes> counts{};

  [[nodiscard]] bool available(EventType type) const { return counts[index(type)] > 0; }
  [[nodiscard]] double at(EventType type, std::size_t lag) const { return R[index(type)][lag]; }
};

/// S_{pi1,pi2}(l) for l = 0..ell_max, stored for price-changing pi2 only.
struct ReturnResponseSet {
  LagGrid grid;
  std::array<std::array<std::vector<double>, kNumPriceChanging>, kNumTypes> S;
  std::array<std::int64_t, kNumTypes> counts{};
  /// Largest |S| seen for neutral targets; zero on well-formed streams.
  double neutral_max = 0.0;

  [[nodiscard]] bool available(EventType type) const { return counts[index(type)] > 0; }
  [[nodiscard]] double at(EventType a, EventType b, std::size_t lag) const {
    return is_price_changing(b) ? S[index(a)][pc_index(b)][lag] : 0.0;
  }
};

EventStats estimate_stats(const EventStream& stream);

/// C and Pi on lags 0..max_lag using per-lag within-session pair counts.
/// Requires max_lag below the shortest session length.
CorrelationSet estimate_correlations(const EventStream& stream, const EventStats& stats,
                                     const LagGrid& grid, std::size_t max_lag);
inline CorrelationSet estimate_correlations(const EventStream& stream, const EventStats& stats,
                                            const LagGrid& grid) {
  return estimate_correlations(stream, stats, grid, grid.ell_max);
}

/// C_{a,b}(-l) measured directly with the later event as the origin. Used to
/// check the chronological convention against C_{b,a}(l).
PairCurves estimate_C_backward(const EventStream& stream, const EventStats& stats, std::size_t max_lag);

/// Conditional mean signed price move l events after each type. Prices
/// beyond a session's last event are held at the closing mid, so R and S
/// share one origin set and the partial-sum identity holds exactly.
ResponseSet estimate_R(const EventStream& stream, const LagGrid& grid);

ReturnResponseSet estimate_S(const EventStream& stream, const LagGrid& grid);

/// Serial reference implementations, identical in definition to the OpenMP
/// kernels above and kept as a cross-check.
namespace serial {
CorrelationSet estimate_correlations(const EventStream& stream, const EventStats& stats,
                                     const LagGrid& grid, std::size_t max_lag);
ResponseSet estimate_R(const EventStream& stream, const LagGrid& grid);
ReturnResponseSet estimate_S(const EventStream& stream, const LagGrid& grid);
}  // namespace serial

struct IdentityReport {
  /// max over (pi, l) of |R_pi(l) - sum_{n<l} sum_pi' S_{pi,pi'}(n)|
  double max_violation = 0.0;
  EventType worst_type = EventType::MO0;
  std::size_t worst_lag = 0;
  double neutral_S_max = 0.0;
  /// max |C_{a,b}(-l) - C_{b,a}(l)| when a backward estimate is supplied.
  std::optional<double> transpose_violation;

  [[nodiscard]] bool passes(double tolerance) const;
};

IdentityReport check_identities(const ResponseSet& R, const ReturnResponseSet& S,
                                const CorrelationSet* correlations = nullptr,
                                const PairCurves* backward = nullptr);

}  // namespace impact
