#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "impact/estimators.hpp"
#include "impact/hdim.hpp"
#include "impact/tim.hpp"

namespace impact {

enum class SignLaw { Iid, Markov, LongMemory };
enum class GapLaw { Constant, Dynamic };

std::string_view to_string(SignLaw law);
std::optional<SignLaw> parse_sign_law(std::string_view text);

using TypeMatrix = std::array<std::array<double, kNumTypes>, kNumTypes>;

struct SyntheticConfig {
  std::string instrument = "SYNTH";
  std::size_t n_events = 100000;
  /// Events are split evenly over this many sessions.
  std::size_t n_sessions = 1;
  /// i.i.d. type probabilities, used unless a transition matrix is given.
  std::array<double, kNumTypes> type_probs{0.3, 0.05, 0.25, 0.05, 0.3, 0.05};
  /// Row-stochastic Markov transition matrix between types.
  std::optional<TypeMatrix> type_transition;

  SignLaw sign_law = SignLaw::Iid;
  /// Markov law: lag-one sign autocorrelation rho, so <e_t e_{t+l}> = rho^l.
  double sign_rho = 0.0;
  /// Long-memory law: <e_t e_{t+l}> decays as l^-gamma, gamma in (0, 1).
  double gamma = 0.5;
  /// Longest same-sign run of the long-memory construction.
  std::size_t max_run = 1000000;

  GapLaw gap_law = GapLaw::Constant;
  /// Constant gap (or mean gap under Dynamic) per price-changing type.
  std::array<double, kNumPriceChanging> gap{0.5, 0.5, 0.5};
  /// Ground-truth influence kernels for Dynamic gaps.
  std::optional<HdimKernels> gap_kernels;
  /// Dynamic gaps below this are clipped to it.
  double gap_floor = 0.05;

  double initial_mid = 1000.0;
  std::uint64_t seed = 1;

  void validate() const;
};

struct SyntheticResult {
  EventStream stream;
  std::int64_t floored = 0;
  std::int64_t price_changing = 0;
  [[nodiscard]] double floor_rate() const {
    return price_changing > 0 ? static_cast<double>(floored) / static_cast<double>(price_changing) : 0.0;
  }
  /// More than 1% of dynamic gaps hit the floor.
  [[nodiscard]] bool flooring_flagged() const { return floor_rate() > 0.01; }
};

SyntheticResult generate_synthetic(const SyntheticConfig& config);

/// Sign autocorrelation <e_t e_{t+l}> implied by the sign law.
double sign_autocorrelation(const SyntheticConfig& config, std::size_t lag);

/// Stationary type law, C and Pi implied by the configured laws (types and
/// signs are independent), for lags 0..max_lag.
struct ExactStatistics {
  std::array<double, kNumTypes> P{};
  CorrelationSet correlations;
};

ExactStatistics exact_statistics(const SyntheticConfig& config, std::size_t max_lag);

enum class SimModel { Tim, Hdim };

struct SimPath {
  /// Realized events: types and signs from the input, gap = epsilon * r
  /// (the signed jump re-expressed as a gap), mids from the cumulated returns.
  EventStream stream;
  /// Per-session returns r_t.
  std::vector<std::vector<double>> returns;
  std::uint64_t seed = 0;
  SimModel model = SimModel::Hdim;
  /// Price-changing events whose simulated jump opposes their sign.
  std::int64_t adverse_jumps = 0;
};

struct SimOptions {
  NoiseModel noise;
  std::uint64_t seed = 0;
  /// Leading events per session dropped from the emitted path.
  std::size_t burn_in = 0;
};

SimPath simulate_tim(const EventStream& events, const TimKernels& kernels, const SimOptions& options = {});
SimPath simulate_hdim(const EventStream& events, const HdimKernels& kernels, const SimOptions& options = {});

/// D(l) = <(p_{t+l} - p_t)^2> over within-session pairs, l = 0..ell_max.
DiffusionCurve measure_D(const EventStream& stream, std::size_t ell_max);

struct Measurement {
  ResponseSet R;
  DiffusionCurve D;
};

Measurement measure(const SimPath& path, const LagGrid& grid);

namespace serial {
DiffusionCurve measure_D(const EventStream& stream, std::size_t ell_max);
}  // namespace serial

}  // namespace impact
