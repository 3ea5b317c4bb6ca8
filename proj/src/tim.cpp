#include "impact/tim.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "diffusion_detail.hpp"
#include "impact/summation.hpp"

namespace impact {

namespace {

constexpr std::array<std::string_view, 4> kProvenanceNames = {"closed_form_tim", "closed_form_hdim", "constant_gap",
                                                              "simulated"};

std::vector<EventType> present_types(const EventStats& stats) {
  std::vector<EventType> out;
  for (EventType t : kAllTypes) {
    if (stats.present(t)) out.push_back(t);
  }
  return out;
}

void require_correlation_lag(const CorrelationSet& C, std::size_t needed, const char* what) {
  if (C.max_lag() < needed) {
    std::ostringstream os;
    os << what << " needs correlations up to lag " << needed << ", estimated only to " << C.max_lag();
    throw GridMismatch(os.str());
  }
}

// Solver unknowns x(0) = G(1), x(j) = g(j), j = 1..L-1.
std::vector<double> unknowns_of(const TimKernels& k, EventType type) {
  const std::size_t L = k.length();
  std::vector<double> x(L);
  x[0] = k.at(type, 1);
  for (std::size_t j = 1; j < L; ++j) x[j] = k.increment(type, j);
  return x;
}

// Return autocovariance gamma(d), d = 0..n-1, of r_t = sum_b sum_k x_b(k) eps_{t-k}
// without noise, evaluated exactly from the pair correlations.
std::vector<double> return_autocovariance(const std::vector<EventType>& types,
                                          const std::array<std::vector<double>, kNumTypes>& x,
                                          const CorrelationSet& C, const EventStats& stats, std::size_t n) {
  std::size_t L = 0;
  for (EventType t : types) L = std::max(L, x[index(t)].size());
  const auto span = static_cast<std::ptrdiff_t>(n + L - 1);
  // y_ab(m) = sum_j x_b(j) C_ab(m - j), m = 0..n+L-2
  std::vector<std::vector<double>> y(types.size() * types.size());
  for (std::size_t ia = 0; ia < types.size(); ++ia) {
    for (std::size_t ib = 0; ib < types.size(); ++ib) {
      const auto& xb = x[index(types[ib])];
      auto& out = y[ia * types.size() + ib];
      out.assign(static_cast<std::size_t>(span), 0.0);
      for (std::ptrdiff_t m = 0; m < span; ++m) {
        double acc = 0.0;
        for (std::size_t j = 0; j < xb.size(); ++j) {
          if (xb[j] == 0.0) continue;
          acc += xb[j] * C.c(types[ia], types[ib], m - static_cast<std::ptrdiff_t>(j));
        }
        out[static_cast<std::size_t>(m)] = acc;
      }
    }
  }
  std::vector<double> gamma(n, 0.0);
  const auto nd = static_cast<std::int64_t>(n);
#pragma omp parallel for schedule(static)
  for (std::int64_t di = 0; di < nd; ++di) {
    const auto d = static_cast<std::size_t>(di);
    CompensatedSum acc;
    for (std::size_t ia = 0; ia < types.size(); ++ia) {
      const auto& xa = x[index(types[ia])];
      for (std::size_t ib = 0; ib < types.size(); ++ib) {
        const double w = stats.prob(types[ia]) * stats.prob(types[ib]);
        const auto& yab = y[ia * types.size() + ib];
        double part = 0.0;
        for (std::size_t k = 0; k < xa.size(); ++k) part += xa[k] * yab[d + k];
        acc.add(w * part);
      }
    }
    gamma[d] = acc.value();
  }
  return gamma;
}

DiffusionCurve diffusion_from_autocovariance(const std::vector<double>& gamma, double noise_rate,
                                             const NoiseModel& noise, std::size_t ell_max, Provenance provenance) {
  DiffusionCurve out;
  out.provenance = provenance;
  out.D.assign(ell_max + 1, 0.0);
  // D(l) = l gamma(0) + 2 sum_{d=1}^{l-1} (l - d) gamma(d), built incrementally:
  // D(l+1) - D(l) = gamma(0) + 2 sum_{d=1}^{l} gamma(d).
  double D = 0.0;
  double tail = gamma[0];
  for (std::size_t l = 1; l <= ell_max; ++l) {
    D += tail;
    if (l < gamma.size()) tail += 2.0 * gamma[l];
    out.D[l] = D + noise.D0 * noise_rate * static_cast<double>(l) + noise.D_hf;
  }
  return out;
}

}  // namespace

void NoiseModel::validate() const {
  if (!(D0 >= 0.0) || !(D_hf >= 0.0)) throw Error("noise variances must be nonnegative");
}

std::string_view to_string(Provenance provenance) { return kProvenanceNames[static_cast<std::size_t>(provenance)]; }

std::optional<Provenance> parse_provenance(std::string_view text) {
  for (std::size_t k = 0; k < kProvenanceNames.size(); ++k) {
    if (kProvenanceNames[k] == text) return static_cast<Provenance>(k);
  }
  return std::nullopt;
}

double TimKernels::at(EventType type, std::size_t lag) const {
  const auto& g = G[index(type)];
  if (g.empty() || lag == 0) return 0.0;
  return g[std::min(lag, length())];
}

double TimKernels::increment(EventType type, std::size_t lag) const {
  if (lag == 0 || lag >= length()) return 0.0;
  return at(type, lag + 1) - at(type, lag);
}

TimKernels TimKernels::from_G(const LagGrid& grid, const std::array<std::vector<double>, kNumTypes>& G) {
  TimKernels k;
  k.grid = grid;
  for (std::size_t t = 0; t < kNumTypes; ++t) {
    k.G[t].assign(grid.ell_max + 1, 0.0);
    if (G[t].empty()) continue;
    if (G[t].size() != grid.ell_max + 1) throw GridMismatch("propagator length differs from the grid");
    k.G[t] = G[t];
    k.G[t][0] = 0.0;
    k.active[t] = true;
  }
  return k;
}

TimKernels calibrate_tim(const CorrelationSet& C, const ResponseSet& R, const EventStats& stats, const LagGrid& grid,
                         const CalibrationOptions& options) {
  const std::size_t L = grid.ell_max;
  if (L == 0) throw GridMismatch("empty lag grid");
  if (R.grid.ell_max < L) throw GridMismatch("response curves shorter than the calibration grid");
  require_correlation_lag(C, L - 1, "propagator calibration");

  const auto types = present_types(stats);
  if (!options.allow_absent_types && types.size() != kNumTypes) {
    for (EventType t : kAllTypes) {
      if (!stats.present(t)) throw MissingInput(std::string("no events of type ") + std::string(to_string(t)));
    }
  }
  for (EventType t : types) {
    if (!R.available(t)) throw MissingInput(std::string("no response curve for ") + std::string(to_string(t)));
  }

  const BlockToeplitzSystem system(
      types.size(), L,
      [&](std::size_t rb, std::size_t cb, std::ptrdiff_t lag) {
        return stats.prob(types[cb]) * C.c(types[rb], types[cb], lag);
      },
      options.solver);

  std::vector<double> rhs(system.size());
  for (std::size_t ia = 0; ia < types.size(); ++ia) {
    for (std::size_t i = 0; i < L; ++i) rhs[ia * L + i] = R.at(types[ia], i + 1) - R.at(types[ia], i);
  }
  const auto x = system.solve(rhs);

  TimKernels out;
  out.grid = grid;
  out.condition = system.condition();
  for (auto& g : out.G) g.assign(L + 1, 0.0);
  for (std::size_t ib = 0; ib < types.size(); ++ib) {
    auto& g = out.G[index(types[ib])];
    out.active[index(types[ib])] = true;
    double level = 0.0;
    for (std::size_t j = 0; j < L; ++j) {
      level += x[ib * L + j];
      g[j + 1] = level;
    }
  }
  return out;
}

ResponseSet predict_R_tim(const TimKernels& kernels, const CorrelationSet& C, const EventStats& stats) {
  const std::size_t L = kernels.length();
  require_correlation_lag(C, L - 1, "response prediction");
  const auto types = present_types(stats);
  std::array<std::vector<double>, kNumTypes> x;
  for (EventType t : types) x[index(t)] = unknowns_of(kernels, t);

  ResponseSet out;
  out.grid = kernels.grid;
  out.counts = stats.counts;
  for (auto& r : out.R) r.assign(L + 1, std::numeric_limits<double>::quiet_NaN());
  for (EventType a : types) {
    auto& r = out.R[index(a)];
    r[0] = 0.0;
    double level = 0.0;
    for (std::size_t i = 0; i < L; ++i) {
      double step = 0.0;
      for (EventType b : types) {
        const auto& xb = x[index(b)];
        double part = 0.0;
        for (std::size_t j = 0; j < L; ++j) {
          part += xb[j] * C.c(a, b, static_cast<std::ptrdiff_t>(i) - static_cast<std::ptrdiff_t>(j));
        }
        step += stats.prob(b) * part;
      }
      level += step;
      r[i + 1] = level;
    }
  }
  return out;
}

SingleEventCurves single_event_curves(std::span<const int> signs, std::span<const double> volumes,
                                      std::span<const double> returns, double theta, std::size_t max_lag) {
  const std::size_t n = signs.size();
  if (volumes.size() != n || returns.size() != n) throw Error("sign, volume and return series differ in length");
  if (max_lag >= n) throw GridMismatch("lag grid exceeds the series length");
  std::vector<double> xi(n);
  for (std::size_t t = 0; t < n; ++t) {
    if (!(volumes[t] > 0.0)) throw Error("volumes must be strictly positive");
    xi[t] = signs[t] * std::pow(volumes[t], theta);
  }
  SingleEventCurves out;
  out.C.assign(max_lag + 1, 0.0);
  out.S.assign(max_lag + 1, 0.0);
  for (std::size_t lag = 0; lag <= max_lag; ++lag) {
    CompensatedSum c;
    CompensatedSum s;
    for (std::size_t t = 0; t + lag < n; ++t) {
      c.add(xi[t] * xi[t + lag]);
      s.add(xi[t] * returns[t + lag]);
    }
    out.C[lag] = c.value() / static_cast<double>(n - lag);
    out.S[lag] = s.value() / static_cast<double>(n);
  }
  return out;
}

SingleKernel calibrate_single(std::span<const double> C, std::span<const double> S, std::size_t L,
                              const SolverOptions& options) {
  if (L == 0) throw GridMismatch("empty lag grid");
  if (C.size() < L || S.size() < L) throw GridMismatch("correlation or response shorter than the kernel length");
  const BlockToeplitzSystem system(
      1, L, [&](std::size_t, std::size_t, std::ptrdiff_t lag) { return C[static_cast<std::size_t>(std::abs(lag))]; },
      options);
  const auto x = system.solve(S.first(L));
  SingleKernel out;
  out.condition = system.condition();
  out.G.assign(L + 1, 0.0);
  double level = 0.0;
  for (std::size_t j = 0; j < L; ++j) {
    level += x[j];
    out.G[j + 1] = level;
  }
  return out;
}

DiffusionCurve predict_D_tim(const TimKernels& kernels, const CorrelationSet& C, const EventStats& stats,
                             const NoiseModel& noise, std::size_t ell_max) {
  noise.validate();
  const std::size_t L = kernels.length();
  require_correlation_lag(C, ell_max + L - 2, "propagator diffusion");
  const auto types = present_types(stats);
  std::array<std::vector<double>, kNumTypes> x;
  for (EventType t : types) x[index(t)] = unknowns_of(kernels, t);
  const auto gamma = return_autocovariance(types, x, C, stats, ell_max);
  return diffusion_from_autocovariance(gamma, 1.0, noise, ell_max, Provenance::ClosedFormTim);
}

namespace detail {

DiffusionCurve constant_gap_curve(const EventStats& stats, const CorrelationSet& C, const NoiseModel& noise,
                                  std::size_t ell_max, const std::array<double, kNumPriceChanging>& gaps) {
  noise.validate();
  require_correlation_lag(C, ell_max - 1, "constant-gap diffusion");
  std::vector<EventType> types;
  std::array<std::vector<double>, kNumTypes> x;
  for (EventType t : kPriceChanging) {
    if (!stats.present(t)) continue;
    types.push_back(t);
    x[index(t)] = {gaps[pc_index(t)]};
  }
  if (types.empty()) throw MissingInput("no price-changing events");
  const auto gamma = return_autocovariance(types, x, C, stats, ell_max);
  const double rate = noise.price_changing_only ? stats.price_changing_probability() : 1.0;
  return diffusion_from_autocovariance(gamma, rate, noise, ell_max, Provenance::ConstantGap);
}

}  // namespace detail

DiffusionCurve constant_gap_curve(const EventStats& stats, const CorrelationSet& C, const NoiseModel& noise,
                                  std::size_t ell_max) {
  std::array<double, kNumPriceChanging> gaps{};
  for (EventType t : kPriceChanging) {
    if (stats.present(t)) gaps[pc_index(t)] = stats.realized_gap(t);
  }
  return detail::constant_gap_curve(stats, C, noise, ell_max, gaps);
}

namespace serial {

// Direct evaluation of the six sums: diagonal window and pre-window terms,
// then window/window, pre/pre and window/pre cross terms.
DiffusionCurve predict_D_tim(const TimKernels& kernels, const CorrelationSet& C, const EventStats& stats,
                             const NoiseModel& noise, std::size_t ell_max) {
  noise.validate();
  const std::size_t L = kernels.length();
  require_correlation_lag(C, ell_max + L - 2, "propagator diffusion");
  const auto types = present_types(stats);
  DiffusionCurve out;
  out.provenance = Provenance::ClosedFormTim;
  out.D.assign(ell_max + 1, 0.0);
  for (std::size_t l = 1; l <= ell_max; ++l) {
    auto G = [&](EventType t, std::size_t u) { return kernels.at(t, u); };
    auto dG = [&](EventType t, std::size_t m) { return kernels.at(t, l + m) - kernels.at(t, m); };
    double d = noise.D0 * static_cast<double>(l);
    for (EventType a : types) {
      const double pa = stats.prob(a);
      for (std::size_t u = 1; u <= l; ++u) d += pa * G(a, u) * G(a, u);
      for (std::size_t m = 1; m < L; ++m) d += pa * dG(a, m) * dG(a, m);
    }
    for (EventType a : types) {
      for (EventType b : types) {
        const double w = 2.0 * stats.prob(a) * stats.prob(b);
        // a earlier inside the window (lag u from the end), b later (u' < u)
        for (std::size_t u = 2; u <= l; ++u) {
          for (std::size_t v = 1; v < u; ++v) {
            d += w * G(a, u) * G(b, v) * C.c(a, b, static_cast<std::ptrdiff_t>(u - v));
          }
        }
        // b earlier before the window (m' > m)
        for (std::size_t m = 1; m < L; ++m) {
          for (std::size_t mp = m + 1; mp < L; ++mp) {
            d += w * dG(a, m) * dG(b, mp) * C.c(b, a, static_cast<std::ptrdiff_t>(mp - m));
          }
        }
        // b before the window, a inside it
        for (std::size_t n = 0; n < l; ++n) {
          for (std::size_t m = 1; m < L; ++m) {
            d += w * G(a, l - n) * dG(b, m) * C.c(b, a, static_cast<std::ptrdiff_t>(n + m));
          }
        }
      }
    }
    out.D[l] = d + noise.D_hf;
  }
  return out;
}

}  // namespace serial

}  // namespace impact
