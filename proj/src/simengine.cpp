#include "impact/simengine.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <sstream>

#include "flat_stream.hpp"
#include "impact/summation.hpp"

namespace impact {

namespace {

constexpr double kProbTol = 1e-9;

void check_distribution(std::span<const double> p, const char* what) {
  double sum = 0.0;
  for (double v : p) {
    if (!(v >= 0.0) || !std::isfinite(v)) throw Error(std::string(what) + " has a negative or non-finite entry");
    sum += v;
  }
  if (std::abs(sum - 1.0) > kProbTol) throw Error(std::string(what) + " does not sum to one");
}

std::array<double, kNumTypes> stationary_law(const TypeMatrix& T) {
  std::array<double, kNumTypes> p;
  p.fill(1.0 / kNumTypes);
  for (int iter = 0; iter < 100000; ++iter) {
    std::array<double, kNumTypes> next{};
    for (std::size_t a = 0; a < kNumTypes; ++a) {
      for (std::size_t b = 0; b < kNumTypes; ++b) next[b] += p[a] * T[a][b];
    }
    double change = 0.0;
    for (std::size_t k = 0; k < kNumTypes; ++k) change = std::max(change, std::abs(next[k] - p[k]));
    p = next;
    if (change < 1e-15) break;
  }
  return p;
}

double run_weight(std::size_t j, double alpha) { return std::pow(static_cast<double>(j), -alpha); }

// Renewal construction of long-memory signs: runs of equal signs with
// P(run >= j) = j^-alpha up to max_run, each run's sign a fair coin.
class RunSigns {
 public:
  RunSigns(double gamma, std::size_t max_run) : alpha_(1.0 + gamma), max_run_(max_run) {
    residual_cdf_.resize(max_run);
    double acc = 0.0;
    for (std::size_t j = 1; j <= max_run; ++j) {
      acc += run_weight(j, alpha_);
      residual_cdf_[j - 1] = acc;
    }
    for (auto& v : residual_cdf_) v /= acc;
  }

  template <class Rng>
  void start(Rng& rng) {
    // stationary residual: P(R = r) proportional to P(run >= r)
    const double u = uniform_(rng);
    const auto it = std::lower_bound(residual_cdf_.begin(), residual_cdf_.end(), u);
    left_ = static_cast<std::size_t>(it - residual_cdf_.begin()) + 1;
    sign_ = coin(rng);
  }

  template <class Rng>
  int next(Rng& rng) {
    if (left_ == 0) {
      const double u = 1.0 - uniform_(rng);  // (0, 1]
      const double m = std::floor(std::pow(u, -1.0 / alpha_));
      left_ = m >= static_cast<double>(max_run_) ? max_run_ : static_cast<std::size_t>(m);
      sign_ = coin(rng);
    }
    --left_;
    return sign_;
  }

 private:
  template <class Rng>
  int coin(Rng& rng) {
    return uniform_(rng) < 0.5 ? 1 : -1;
  }

  double alpha_;
  std::size_t max_run_;
  std::vector<double> residual_cdf_;
  std::size_t left_ = 0;
  int sign_ = 1;
  std::uniform_real_distribution<double> uniform_{0.0, 1.0};
};

std::vector<std::size_t> session_lengths(std::size_t n, std::size_t sessions) {
  std::vector<std::size_t> out(sessions, n / sessions);
  for (std::size_t k = 0; k < n % sessions; ++k) ++out[k];
  return out;
}

SimPath emit_path(const EventStream& events, std::vector<std::vector<double>> returns, std::size_t burn_in,
                  SimModel model, std::uint64_t seed) {
  SimPath path;
  path.model = model;
  path.seed = seed;
  path.stream.instrument = events.instrument;
  path.stream.tick_size = events.tick_size;
  for (std::size_t si = 0; si < events.sessions.size(); ++si) {
    const Session& in = events.sessions[si];
    const auto& r = returns[si];
    Session out;
    out.id = in.id;
    double mid = in.mid.front();
    std::vector<double> kept;
    for (std::size_t k = 0; k < in.size(); ++k) {
      if (k >= burn_in) {
        SignedEvent e = in.event(k);
        e.gap = e.epsilon * r[k];
        e.mid_before = mid;
        out.push_back(e);
        kept.push_back(r[k]);
        if (is_price_changing(e.pi) && e.gap < 0.0) ++path.adverse_jumps;
      }
      mid += r[k];
    }
    out.close_mid = mid;
    path.stream.sessions.push_back(std::move(out));
    path.returns.push_back(std::move(kept));
  }
  return path;
}

void check_replay_input(const EventStream& events, const SimOptions& options) {
  options.noise.validate();
  if (events.sessions.empty()) throw MissingInput("no events to replay");
  for (const auto& s : events.sessions) {
    if (s.size() <= options.burn_in) throw GridMismatch("burn-in covers a whole session");
  }
}

DiffusionCurve finish_D(std::vector<double> D) {
  DiffusionCurve out;
  out.provenance = Provenance::Simulated;
  out.D = std::move(D);
  return out;
}

}  // namespace

std::string_view to_string(SignLaw law) {
  switch (law) {
    case SignLaw::Iid: return "iid";
    case SignLaw::Markov: return "markov";
    case SignLaw::LongMemory: return "long_memory";
  }
  return "?";
}

std::optional<SignLaw> parse_sign_law(std::string_view text) {
  if (text == "iid") return SignLaw::Iid;
  if (text == "markov") return SignLaw::Markov;
  if (text == "long_memory") return SignLaw::LongMemory;
  return std::nullopt;
}

void SyntheticConfig::validate() const {
  if (n_events == 0) throw Error("n_events must be positive");
  if (n_sessions == 0 || n_sessions > n_events) throw Error("n_sessions must be between 1 and n_events");
  if (type_transition) {
    for (const auto& row : *type_transition) check_distribution(row, "transition matrix row");
  } else {
    check_distribution(type_probs, "type probabilities");
  }
  if (sign_law == SignLaw::Markov && !(sign_rho > -1.0 && sign_rho < 1.0)) {
    throw Error("markov sign correlation must lie in (-1, 1)");
  }
  if (sign_law == SignLaw::LongMemory) {
    if (!(gamma > 0.0 && gamma < 1.0)) throw Error("long-memory exponent must lie in (0, 1)");
    if (max_run < 2) throw Error("max_run must be at least 2");
  }
  for (double g : gap) {
    if (!(g > 0.0) || !std::isfinite(g)) throw Error("gaps must be strictly positive");
  }
  if (gap_law == GapLaw::Dynamic) {
    if (!gap_kernels) throw MissingInput("dynamic gaps need ground-truth influence kernels");
    if (!(gap_floor > 0.0)) throw Error("gap floor must be strictly positive");
  }
  if (!std::isfinite(initial_mid)) throw Error("initial mid must be finite");
}

SyntheticResult generate_synthetic(const SyntheticConfig& config) {
  config.validate();
  std::mt19937_64 rng(config.seed);
  std::uniform_real_distribution<double> uniform(0.0, 1.0);

  const auto start_law = config.type_transition ? stationary_law(*config.type_transition) : config.type_probs;
  std::discrete_distribution<int> start_dist(start_law.begin(), start_law.end());
  std::vector<std::discrete_distribution<int>> rows;
  if (config.type_transition) {
    for (const auto& row : *config.type_transition) rows.emplace_back(row.begin(), row.end());
  }

  std::optional<RunSigns> runs;
  if (config.sign_law == SignLaw::LongMemory) runs.emplace(config.gamma, config.max_run);
  const double flip = 0.5 * (1.0 - config.sign_rho);
  const std::size_t L = config.gap_kernels ? config.gap_kernels->length() : 0;

  SyntheticResult result;
  result.stream.instrument = config.instrument;
  const auto lengths = session_lengths(config.n_events, config.n_sessions);
  for (std::size_t si = 0; si < lengths.size(); ++si) {
    Session s;
    s.id = static_cast<std::int64_t>(si + 1);
    double mid = config.initial_mid;
    int type = start_dist(rng);
    int sign = uniform(rng) < 0.5 ? 1 : -1;
    if (runs) runs->start(rng);
    for (std::size_t k = 0; k < lengths[si]; ++k) {
      if (k > 0) {
        type = config.type_transition ? rows[static_cast<std::size_t>(type)](rng) : start_dist(rng);
      }
      switch (config.sign_law) {
        case SignLaw::Iid: sign = uniform(rng) < 0.5 ? 1 : -1; break;
        case SignLaw::Markov:
          if (k > 0 && uniform(rng) < flip) sign = -sign;
          break;
        case SignLaw::LongMemory: sign = runs->next(rng); break;
      }
      const auto pi = static_cast<EventType>(type);
      double gap = 0.0;
      if (is_price_changing(pi)) {
        ++result.price_changing;
        gap = config.gap[pc_index(pi)];
        if (config.gap_law == GapLaw::Dynamic) {
          double memory = 0.0;
          for (std::size_t lag = 1; lag <= std::min(k, L); ++lag) {
            memory += config.gap_kernels->effective(s.pi[k - lag], pi, lag) * s.epsilon[k - lag];
          }
          gap += sign * memory;
          if (gap < config.gap_floor) {
            gap = config.gap_floor;
            ++result.floored;
          }
        }
      }
      s.push_back(SignedEvent{s.id, static_cast<std::int64_t>(k), pi, sign, gap, mid});
      mid += sign * gap;
    }
    s.close_mid = mid;
    result.stream.sessions.push_back(std::move(s));
  }
  return result;
}

double sign_autocorrelation(const SyntheticConfig& config, std::size_t lag) {
  if (lag == 0) return 1.0;
  switch (config.sign_law) {
    case SignLaw::Iid: return 0.0;
    case SignLaw::Markov: return std::pow(config.sign_rho, static_cast<double>(lag));
    case SignLaw::LongMemory: {
      const double alpha = 1.0 + config.gamma;
      double total = 0.0;
      double tail = 0.0;
      for (std::size_t j = config.max_run; j >= 1; --j) {
        const double w = run_weight(j, alpha);
        total += w;
        if (j > lag) tail += w;
      }
      return tail / total;
    }
  }
  return 0.0;
}

ExactStatistics exact_statistics(const SyntheticConfig& config, std::size_t max_lag) {
  config.validate();
  ExactStatistics out;
  out.P = config.type_transition ? stationary_law(*config.type_transition) : config.type_probs;

  std::vector<double> rho(max_lag + 1);
  if (config.sign_law == SignLaw::LongMemory) {
    // one pass over the run-length tail for all lags
    const double alpha = 1.0 + config.gamma;
    std::vector<double> w(config.max_run + 1, 0.0);
    for (std::size_t j = 1; j <= config.max_run; ++j) w[j] = run_weight(j, alpha);
    std::vector<double> tail(config.max_run + 2, 0.0);
    for (std::size_t j = config.max_run; j >= 1; --j) tail[j] = tail[j + 1] + w[j];
    for (std::size_t l = 0; l <= max_lag; ++l) rho[l] = l + 1 <= config.max_run ? tail[l + 1] / tail[1] : 0.0;
  } else {
    for (std::size_t l = 0; l <= max_lag; ++l) rho[l] = sign_autocorrelation(config, l);
  }

  auto& cs = out.correlations;
  cs.grid.ell_max = max_lag;
  cs.P = out.P;
  cs.C = PairCurves(max_lag, std::numeric_limits<double>::quiet_NaN());
  cs.Pi = PairCurves(max_lag, std::numeric_limits<double>::quiet_NaN());
  TypeMatrix power{};
  for (std::size_t a = 0; a < kNumTypes; ++a) power[a][a] = 1.0;
  for (std::size_t l = 0; l <= max_lag; ++l) {
    if (l > 0 && config.type_transition) {
      TypeMatrix next{};
      for (std::size_t a = 0; a < kNumTypes; ++a) {
        for (std::size_t c = 0; c < kNumTypes; ++c) {
          for (std::size_t b = 0; b < kNumTypes; ++b) next[a][b] += power[a][c] * (*config.type_transition)[c][b];
        }
      }
      power = next;
    }
    for (EventType a : kAllTypes) {
      for (EventType b : kAllTypes) {
        const double pa = out.P[index(a)];
        const double pb = out.P[index(b)];
        if (pa <= 0.0 || pb <= 0.0) continue;
        double pi;
        if (l == 0) {
          pi = (a == b ? 1.0 / pa : 0.0) - 1.0;
        } else if (config.type_transition) {
          pi = power[index(a)][index(b)] / pb - 1.0;
        } else {
          pi = 0.0;
        }
        cs.Pi.at(a, b, l) = pi;
        cs.C.at(a, b, l) = l == 0 ? (a == b ? 1.0 / pa : 0.0) : (1.0 + pi) * rho[l];
      }
    }
  }
  return out;
}

SimPath simulate_tim(const EventStream& events, const TimKernels& kernels, const SimOptions& options) {
  check_replay_input(events, options);
  const std::size_t L = kernels.length();
  // x[type][k]: k = 0 immediate impact, then increments
  std::array<std::vector<double>, kNumTypes> x;
  for (EventType t : kAllTypes) {
    x[index(t)].assign(L, 0.0);
    x[index(t)][0] = kernels.at(t, 1);
    for (std::size_t k = 1; k < L; ++k) x[index(t)][k] = kernels.increment(t, k);
  }
  std::mt19937_64 rng(options.seed);
  std::normal_distribution<double> normal(0.0, std::sqrt(options.noise.D0));
  const bool noisy = options.noise.D0 > 0.0;

  std::vector<std::vector<double>> returns;
  for (const auto& s : events.sessions) {
    std::vector<double> r(s.size());
    for (std::size_t t = 0; t < s.size(); ++t) {
      double v = x[index(s.pi[t])][0] * s.epsilon[t];
      for (std::size_t k = 1; k < L && k <= t; ++k) v += x[index(s.pi[t - k])][k] * s.epsilon[t - k];
      if (noisy) v += normal(rng);
      r[t] = v;
    }
    returns.push_back(std::move(r));
  }
  return emit_path(events, std::move(returns), options.burn_in, SimModel::Tim, options.seed);
}

SimPath simulate_hdim(const EventStream& events, const HdimKernels& kernels, const SimOptions& options) {
  check_replay_input(events, options);
  const std::size_t L = kernels.length();
  // k[source][target][lag] with scale applied
  std::array<std::array<std::vector<double>, kNumPriceChanging>, kNumTypes> k;
  for (EventType a : kAllTypes) {
    for (EventType p : kPriceChanging) {
      auto& v = k[index(a)][pc_index(p)];
      v.assign(L + 1, 0.0);
      for (std::size_t lag = 1; lag <= L; ++lag) v[lag] = kernels.effective(a, p, lag);
    }
  }
  std::mt19937_64 rng(options.seed);
  std::normal_distribution<double> normal(0.0, std::sqrt(options.noise.D0));
  const bool noisy = options.noise.D0 > 0.0;

  std::vector<std::vector<double>> returns;
  for (const auto& s : events.sessions) {
    std::vector<double> r(s.size(), 0.0);
    for (std::size_t t = 0; t < s.size(); ++t) {
      const EventType pi = s.pi[t];
      double v = 0.0;
      if (is_price_changing(pi)) {
        const std::size_t p = pc_index(pi);
        v = kernels.delta_R[p] * s.epsilon[t];
        for (std::size_t lag = 1; lag <= L && lag <= t; ++lag) {
          v += k[index(s.pi[t - lag])][p][lag] * s.epsilon[t - lag];
        }
      }
      if (noisy && (is_price_changing(pi) || !options.noise.price_changing_only)) v += normal(rng);
      r[t] = v;
    }
    returns.push_back(std::move(r));
  }
  return emit_path(events, std::move(returns), options.burn_in, SimModel::Hdim, options.seed);
}

DiffusionCurve measure_D(const EventStream& stream, std::size_t ell_max) {
  const detail::FlatStream f(stream);
  for (std::size_t s = 0; s < f.sessions(); ++s) {
    if (f.length(s) < ell_max) throw GridMismatch("diffusion lag exceeds a session length");
  }
  std::vector<double> D(ell_max + 1, 0.0);
  const auto lags = static_cast<std::int64_t>(ell_max);
#pragma omp parallel for schedule(dynamic, 4)
  for (std::int64_t li = 1; li <= lags; ++li) {
    const auto lag = static_cast<std::size_t>(li);
    CompensatedSum acc;
    std::int64_t pairs = 0;
    for (std::size_t s = 0; s < f.sessions(); ++s) {
      const std::size_t pb = f.price_begin(s);
      const std::size_t np = f.length(s) + 1;
      for (std::size_t i = 0; i + lag < np; ++i) {
        const double d = f.price[pb + i + lag] - f.price[pb + i];
        acc.add(d * d);
      }
      pairs += static_cast<std::int64_t>(np - lag);
    }
    D[lag] = acc.value() / static_cast<double>(pairs);
  }
  return finish_D(std::move(D));
}

Measurement measure(const SimPath& path, const LagGrid& grid) {
  return Measurement{estimate_R(path.stream, grid), measure_D(path.stream, grid.ell_max)};
}

namespace serial {

DiffusionCurve measure_D(const EventStream& stream, std::size_t ell_max) {
  std::vector<double> sums(ell_max + 1, 0.0);
  std::vector<double> pairs(ell_max + 1, 0.0);
  for (const auto& s : stream.sessions) {
    if (s.size() < ell_max) throw GridMismatch("diffusion lag exceeds a session length");
    for (std::size_t i = 0; i <= s.size(); ++i) {
      for (std::size_t lag = 1; lag <= ell_max && i + lag <= s.size(); ++lag) {
        const double d = s.price(i + lag) - s.price(i);
        sums[lag] += d * d;
        pairs[lag] += 1.0;
      }
    }
  }
  std::vector<double> D(ell_max + 1, 0.0);
  for (std::size_t lag = 1; lag <= ell_max; ++lag) D[lag] = sums[lag] / pairs[lag];
  return finish_D(std::move(D));
}

}  // namespace serial

}  // namespace impact
