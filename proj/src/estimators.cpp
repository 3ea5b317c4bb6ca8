#include "impact/estimators.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "flat_stream.hpp"
#include "impact/summation.hpp"

namespace impact {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
constexpr std::size_t kPairs = kNumTypes * kNumTypes;

using PairCounts = std::array<std::int64_t, kPairs>;

void require_lag_support(const EventStream& stream, std::size_t max_lag) {
  if (stream.sessions.empty()) throw MissingInput("empty event stream");
  const std::size_t shortest = stream.shortest_session();
  if (max_lag >= shortest) {
    std::ostringstream os;
    os << "lag " << max_lag << " must be below the shortest session length " << shortest;
    throw GridMismatch(os.str());
  }
}

std::array<std::int64_t, kNumTypes> type_counts(const detail::FlatStream& f) {
  std::array<std::int64_t, kNumTypes> counts{};
  for (auto t : f.type) ++counts[t];
  return counts;
}

// Turns per-lag signed and unsigned pair sums into C and Pi.
CorrelationSet finish_correlations(const EventStats& stats, const LagGrid& grid, std::size_t max_lag,
                                   const std::vector<PairCounts>& signed_sums,
                                   const std::vector<PairCounts>& type_sums,
                                   const std::vector<std::int64_t>& pairs) {
  CorrelationSet out;
  out.grid = grid;
  out.P = stats.P;
  out.C = PairCurves(max_lag, kNaN);
  out.Pi = PairCurves(max_lag, kNaN);
  out.pair_counts = pairs;
  for (EventType a : kAllTypes) {
    for (EventType b : kAllTypes) {
      const double pa = stats.prob(a);
      const double pb = stats.prob(b);
      if (pa <= 0.0 || pb <= 0.0) continue;
      const std::size_t k = index(a) * kNumTypes + index(b);
      for (std::size_t lag = 0; lag <= max_lag; ++lag) {
        const double np = static_cast<double>(pairs[lag]);
        out.C.at(a, b, lag) = (static_cast<double>(signed_sums[lag][k]) / np) / (pa * pb);
        out.Pi.at(a, b, lag) = (static_cast<double>(type_sums[lag][k]) / np) / (pa * pb) - 1.0;
      }
    }
  }
  return out;
}

}  // namespace

LagGrid LagGrid::with_log_display(std::size_t ell_max, std::size_t points_per_decade) {
  LagGrid grid;
  grid.ell_max = ell_max;
  std::size_t last = 0;
  for (std::size_t k = 0;; ++k) {
    const auto lag = static_cast<std::size_t>(
        std::llround(std::pow(10.0, static_cast<double>(k) / static_cast<double>(points_per_decade))));
    if (lag > ell_max) break;
    if (lag != last) grid.display_lags.push_back(lag);
    last = lag;
  }
  if (grid.display_lags.empty() || grid.display_lags.back() != ell_max) grid.display_lags.push_back(ell_max);
  return grid;
}

double EventStats::realized_gap(EventType type) const {
  if (!is_price_changing(type)) throw MissingInput("realized gap is defined for price-changing types only");
  const auto& g = delta_R[pc_index(type)];
  if (!g) throw MissingInput(std::string("no realized gap for ") + std::string(to_string(type)));
  return *g;
}

double EventStats::gap_or_zero(EventType type) const {
  return is_price_changing(type) ? realized_gap(type) : 0.0;
}

double EventStats::price_changing_probability() const {
  double p = 0.0;
  for (EventType t : kPriceChanging) p += prob(t);
  return p;
}

PairCurves::PairCurves(std::size_t max_lag, double fill)
    : max_lag_(max_lag), data_(kNumTypes * kNumTypes * (max_lag + 1), fill) {}

double CorrelationSet::c(EventType a, EventType b, std::ptrdiff_t lag) const {
  if (!present(a) || !present(b)) {
    throw MissingInput(std::string("correlation requested for absent type ") +
                       std::string(to_string(present(a) ? b : a)));
  }
  const auto abs_lag = static_cast<std::size_t>(lag < 0 ? -lag : lag);
  if (abs_lag > C.max_lag()) throw GridMismatch("correlation lag beyond the estimated grid");
  return lag >= 0 ? C.at(a, b, abs_lag) : C.at(b, a, abs_lag);
}

double CorrelationSet::pi(EventType a, EventType b, std::ptrdiff_t lag) const {
  if (!has_pi()) throw MissingInput("event-type correlations were not estimated");
  if (!present(a) || !present(b)) throw MissingInput("event-type correlation requested for absent type");
  const auto abs_lag = static_cast<std::size_t>(lag < 0 ? -lag : lag);
  if (abs_lag > Pi.max_lag()) throw GridMismatch("event-type correlation lag beyond the estimated grid");
  return lag >= 0 ? Pi.at(a, b, abs_lag) : Pi.at(b, a, abs_lag);
}

EventStats estimate_stats(const EventStream& stream) {
  EventStats stats;
  std::array<CompensatedSum, kNumPriceChanging> gap_sums;
  for (const auto& s : stream.sessions) {
    for (std::size_t k = 0; k < s.size(); ++k) {
      ++stats.counts[index(s.pi[k])];
      if (is_price_changing(s.pi[k])) gap_sums[pc_index(s.pi[k])].add(s.gap[k]);
    }
  }
  for (auto c : stats.counts) stats.total += c;
  if (stats.total == 0) throw MissingInput("empty event stream");
  for (std::size_t k = 0; k < kNumTypes; ++k) {
    stats.P[k] = static_cast<double>(stats.counts[k]) / static_cast<double>(stats.total);
  }
  for (EventType t : kPriceChanging) {
    const auto n = stats.counts[index(t)];
    if (n > 0) stats.delta_R[pc_index(t)] = gap_sums[pc_index(t)].value() / static_cast<double>(n);
  }
  return stats;
}

CorrelationSet estimate_correlations(const EventStream& stream, const EventStats& stats, const LagGrid& grid,
                                     std::size_t max_lag) {
  require_lag_support(stream, max_lag);
  const detail::FlatStream f(stream);
  std::vector<PairCounts> signed_sums(max_lag + 1, PairCounts{});
  std::vector<PairCounts> type_sums(max_lag + 1, PairCounts{});
  std::vector<std::int64_t> pairs(max_lag + 1, 0);

  // Lag 0: an event has one type and epsilon^2 = 1.
  const auto counts = type_counts(f);
  for (std::size_t a = 0; a < kNumTypes; ++a) {
    signed_sums[0][a * kNumTypes + a] = counts[a];
    type_sums[0][a * kNumTypes + a] = counts[a];
  }
  pairs[0] = static_cast<std::int64_t>(f.type.size());

  const auto lags = static_cast<std::int64_t>(max_lag);
#pragma omp parallel for schedule(dynamic, 4)
  for (std::int64_t lag_i = 1; lag_i <= lags; ++lag_i) {
    const auto lag = static_cast<std::size_t>(lag_i);
    PairCounts sc{};
    PairCounts tc{};
    std::int64_t np = 0;
    for (std::size_t s = 0; s < f.sessions(); ++s) {
      const std::size_t b = f.begin[s];
      const std::size_t n = f.length(s);
      for (std::size_t i = b; i + lag < b + n; ++i) {
        const std::size_t k = f.type[i] * kNumTypes + f.type[i + lag];
        sc[k] += f.sign[i] * f.sign[i + lag];
        ++tc[k];
      }
      np += static_cast<std::int64_t>(n - lag);
    }
    signed_sums[lag] = sc;
    type_sums[lag] = tc;
    pairs[lag] = np;
  }

  CorrelationSet out = finish_correlations(stats, grid, max_lag, signed_sums, type_sums, pairs);
  // Exact lag-0 structure.
  for (EventType a : kAllTypes) {
    if (!stats.present(a)) continue;
    for (EventType b : kAllTypes) {
      if (!stats.present(b)) continue;
      out.C.at(a, b, 0) = a == b ? 1.0 / stats.prob(a) : 0.0;
      out.Pi.at(a, b, 0) = (a == b ? 1.0 / stats.prob(a) : 0.0) - 1.0;
    }
  }
  return out;
}

PairCurves estimate_C_backward(const EventStream& stream, const EventStats& stats, std::size_t max_lag) {
  require_lag_support(stream, max_lag);
  const detail::FlatStream f(stream);
  PairCurves out(max_lag, kNaN);
  const auto lags = static_cast<std::int64_t>(max_lag);
#pragma omp parallel for schedule(dynamic, 4)
  for (std::int64_t lag_i = 0; lag_i <= lags; ++lag_i) {
    const auto lag = static_cast<std::size_t>(lag_i);
    PairCounts sc{};
    std::int64_t np = 0;
    for (std::size_t s = 0; s < f.sessions(); ++s) {
      const std::size_t b = f.begin[s];
      const std::size_t n = f.length(s);
      // origin at i, partner lag events earlier
      for (std::size_t i = b + lag; i < b + n; ++i) {
        sc[f.type[i] * kNumTypes + f.type[i - lag]] += f.sign[i] * f.sign[i - lag];
      }
      np += static_cast<std::int64_t>(n - lag);
    }
    for (EventType a : kAllTypes) {
      for (EventType c : kAllTypes) {
        const double pa = stats.prob(a);
        const double pc = stats.prob(c);
        if (pa <= 0.0 || pc <= 0.0) continue;
        out.at(a, c, lag) =
            (static_cast<double>(sc[index(a) * kNumTypes + index(c)]) / static_cast<double>(np)) / (pa * pc);
      }
    }
  }
  return out;
}

ResponseSet estimate_R(const EventStream& stream, const LagGrid& grid) {
  require_lag_support(stream, grid.ell_max);
  const detail::FlatStream f(stream);
  const std::size_t L = grid.ell_max;
  ResponseSet out;
  out.grid = grid;
  out.counts = type_counts(f);
  for (auto& r : out.R) r.assign(L + 1, 0.0);

  const auto lags = static_cast<std::int64_t>(L);
#pragma omp parallel for schedule(dynamic, 4)
  for (std::int64_t lag_i = 1; lag_i <= lags; ++lag_i) {
    const auto lag = static_cast<std::size_t>(lag_i);
    std::array<CompensatedSum, kNumTypes> acc;
    for (std::size_t s = 0; s < f.sessions(); ++s) {
      const std::size_t b = f.begin[s];
      const std::size_t n = f.length(s);
      const std::size_t pb = f.price_begin(s);
      for (std::size_t t = 0; t < n; ++t) {
        const std::size_t end = std::min(t + lag, n);
        acc[f.type[b + t]].add(f.sign[b + t] * (f.price[pb + end] - f.price[pb + t]));
      }
    }
    for (std::size_t k = 0; k < kNumTypes; ++k) {
      out.R[k][lag] = out.counts[k] > 0 ? acc[k].value() / static_cast<double>(out.counts[k]) : kNaN;
    }
  }
  for (std::size_t k = 0; k < kNumTypes; ++k) {
    if (out.counts[k] == 0) out.R[k][0] = kNaN;
  }
  return out;
}

ReturnResponseSet estimate_S(const EventStream& stream, const LagGrid& grid) {
  require_lag_support(stream, grid.ell_max);
  const detail::FlatStream f(stream);
  const std::size_t L = grid.ell_max;
  ReturnResponseSet out;
  out.grid = grid;
  out.counts = type_counts(f);
  for (auto& row : out.S) {
    for (auto& s : row) s.assign(L + 1, kNaN);
  }
  std::vector<double> neutral(L + 1, 0.0);

  const auto lags = static_cast<std::int64_t>(L);
#pragma omp parallel for schedule(dynamic, 4)
  for (std::int64_t lag_i = 0; lag_i <= lags; ++lag_i) {
    const auto lag = static_cast<std::size_t>(lag_i);
    std::array<CompensatedSum, kPairs> acc;
    for (std::size_t s = 0; s < f.sessions(); ++s) {
      const std::size_t b = f.begin[s];
      const std::size_t n = f.length(s);
      for (std::size_t i = b; i + lag < b + n; ++i) {
        acc[f.type[i] * kNumTypes + f.type[i + lag]].add(f.sign[i] * f.ret[i + lag]);
      }
    }
    double worst = 0.0;
    for (EventType a : kAllTypes) {
      const auto n = out.counts[index(a)];
      if (n == 0) continue;
      for (EventType c : kAllTypes) {
        const double v = acc[index(a) * kNumTypes + index(c)].value() / static_cast<double>(n);
        if (is_price_changing(c)) {
          out.S[index(a)][pc_index(c)][lag] = v;
        } else {
          worst = std::max(worst, std::abs(v));
        }
      }
    }
    neutral[lag] = worst;
  }
  out.neutral_max = *std::max_element(neutral.begin(), neutral.end());
  return out;
}

namespace serial {

CorrelationSet estimate_correlations(const EventStream& stream, const EventStats& stats, const LagGrid& grid,
                                     std::size_t max_lag) {
  require_lag_support(stream, max_lag);
  std::vector<PairCounts> signed_sums(max_lag + 1, PairCounts{});
  std::vector<PairCounts> type_sums(max_lag + 1, PairCounts{});
  std::vector<std::int64_t> pairs(max_lag + 1, 0);
  for (const auto& s : stream.sessions) {
    const std::size_t n = s.size();
    for (std::size_t t = 0; t < n; ++t) {
      for (std::size_t lag = 0; lag <= max_lag && t + lag < n; ++lag) {
        const std::size_t k = index(s.pi[t]) * kNumTypes + index(s.pi[t + lag]);
        signed_sums[lag][k] += s.epsilon[t] * s.epsilon[t + lag];
        ++type_sums[lag][k];
        ++pairs[lag];
      }
    }
  }
  return finish_correlations(stats, grid, max_lag, signed_sums, type_sums, pairs);
}

ResponseSet estimate_R(const EventStream& stream, const LagGrid& grid) {
  require_lag_support(stream, grid.ell_max);
  const std::size_t L = grid.ell_max;
  ResponseSet out;
  out.grid = grid;
  for (auto& r : out.R) r.assign(L + 1, 0.0);
  for (const auto& s : stream.sessions) {
    for (std::size_t t = 0; t < s.size(); ++t) {
      const std::size_t k = index(s.pi[t]);
      ++out.counts[k];
      for (std::size_t lag = 1; lag <= L; ++lag) {
        out.R[k][lag] += s.epsilon[t] * (s.price(std::min(t + lag, s.size())) - s.price(t));
      }
    }
  }
  for (std::size_t k = 0; k < kNumTypes; ++k) {
    for (auto& v : out.R[k]) v = out.counts[k] > 0 ? v / static_cast<double>(out.counts[k]) : kNaN;
  }
  return out;
}

ReturnResponseSet estimate_S(const EventStream& stream, const LagGrid& grid) {
  require_lag_support(stream, grid.ell_max);
  const std::size_t L = grid.ell_max;
  ReturnResponseSet out;
  out.grid = grid;
  std::array<std::array<std::vector<double>, kNumTypes>, kNumTypes> sums;
  for (auto& row : sums) {
    for (auto& v : row) v.assign(L + 1, 0.0);
  }
  for (const auto& s : stream.sessions) {
    const std::size_t n = s.size();
    for (std::size_t t = 0; t < n; ++t) {
      ++out.counts[index(s.pi[t])];
      for (std::size_t lag = 0; lag <= L && t + lag < n; ++lag) {
        const double r = s.price(t + lag + 1) - s.price(t + lag);
        sums[index(s.pi[t])][index(s.pi[t + lag])][lag] += s.epsilon[t] * r;
      }
    }
  }
  for (EventType a : kAllTypes) {
    const auto n = out.counts[index(a)];
    for (EventType c : kPriceChanging) {
      auto& dst = out.S[index(a)][pc_index(c)];
      dst.assign(L + 1, kNaN);
      if (n == 0) continue;
      for (std::size_t lag = 0; lag <= L; ++lag) dst[lag] = sums[index(a)][index(c)][lag] / static_cast<double>(n);
    }
    if (n == 0) continue;
    for (EventType c : kNeutral) {
      for (double v : sums[index(a)][index(c)]) {
        out.neutral_max = std::max(out.neutral_max, std::abs(v / static_cast<double>(n)));
      }
    }
  }
  return out;
}

}  // namespace serial

bool IdentityReport::passes(double tolerance) const {
  return max_violation <= tolerance && neutral_S_max <= tolerance &&
         (!transpose_violation || *transpose_violation <= tolerance);
}

IdentityReport check_identities(const ResponseSet& R, const ReturnResponseSet& S, const CorrelationSet* correlations,
                                const PairCurves* backward) {
  if (R.grid.ell_max > S.grid.ell_max) throw GridMismatch("R grid longer than S grid");
  IdentityReport report;
  report.neutral_S_max = S.neutral_max;
  for (EventType a : kAllTypes) {
    if (!R.available(a) || !S.available(a)) continue;
    double partial = 0.0;
    for (std::size_t lag = 1; lag <= R.grid.ell_max; ++lag) {
      for (EventType c : kPriceChanging) partial += S.at(a, c, lag - 1);
      const double v = std::abs(R.at(a, lag) - partial);
      if (v > report.max_violation) {
        report.max_violation = v;
        report.worst_type = a;
        report.worst_lag = lag;
      }
    }
  }
  if (correlations != nullptr && backward != nullptr) {
    double worst = 0.0;
    const std::size_t max_lag = std::min(correlations->max_lag(), backward->max_lag());
    for (EventType a : kAllTypes) {
      for (EventType b : kAllTypes) {
        if (!correlations->present(a) || !correlations->present(b)) continue;
        for (std::size_t lag = 0; lag <= max_lag; ++lag) {
          worst = std::max(worst, std::abs(backward->at(a, b, lag) - correlations->C.at(b, a, lag)));
        }
      }
    }
    report.transpose_violation = worst;
  }
  return report;
}

}  // namespace impact
