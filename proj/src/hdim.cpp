#include "impact/hdim.hpp"

#include <cmath>
#include <limits>
#include <sstream>

#include "diffusion_detail.hpp"
#include "impact/summation.hpp"

namespace impact {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

void require_correlation_lag(const CorrelationSet& C, std::size_t needed, const char* what) {
  if (C.max_lag() < needed) {
    std::ostringstream os;
    os << what << " needs correlations up to lag " << needed << ", estimated only to " << C.max_lag();
    throw GridMismatch(os.str());
  }
}

std::vector<EventType> present_of(const EventStats& stats, std::span<const EventType> candidates) {
  std::vector<EventType> out;
  for (EventType t : candidates) {
    if (stats.present(t)) out.push_back(t);
  }
  return out;
}

// Dense copy of scale * kappa for fast inner loops: k[a][p][tau], tau = 0..L.
using KappaTable = std::array<std::array<std::vector<double>, kNumPriceChanging>, kNumTypes>;

KappaTable effective_table(const HdimKernels& kernels) {
  KappaTable k;
  const std::size_t L = kernels.length();
  for (EventType a : kAllTypes) {
    for (EventType p : kPriceChanging) {
      auto& v = k[index(a)][pc_index(p)];
      v.assign(L + 1, 0.0);
      for (std::size_t tau = 1; tau <= L; ++tau) v[tau] = kernels.effective(a, p, tau);
    }
  }
  return k;
}

DiffusionCurve add_lag_terms(DiffusionCurve curve, const std::vector<double>& symmetric_terms) {
  // curve(l) += sum_{|t|<l} (l - |t|) a(t), with a(t) given as
  // symmetric_terms[t] = a(t) + a(-t) for t >= 1 and a(0) at index 0.
  double running = 0.0;
  double slope = 0.0;
  for (std::size_t l = 1; l < curve.D.size(); ++l) {
    slope += symmetric_terms[l - 1];
    running += slope;
    curve.D[l] += running;
  }
  curve.provenance = Provenance::ClosedFormHdim;
  return curve;
}

}  // namespace

double HdimKernels::raw(EventType source, EventType target, std::size_t lag) const {
  if (!is_price_changing(target) || lag == 0 || lag > length()) return 0.0;
  const auto& v = kappa[index(source)][pc_index(target)];
  return v.empty() ? 0.0 : v[lag];
}

double HdimKernels::effective(EventType source, EventType target, std::size_t lag) const {
  return scale * raw(source, target, lag);
}

HdimKernels HdimKernels::zero(const LagGrid& grid, const std::array<double, kNumPriceChanging>& delta_R) {
  HdimKernels k;
  k.grid = grid;
  k.delta_R = delta_R;
  for (auto& row : k.kappa) {
    for (auto& v : row) v.assign(grid.ell_max + 1, 0.0);
  }
  return k;
}

HdimKernels HdimKernels::from_tim(const TimKernels& tim) {
  std::array<double, kNumPriceChanging> gaps{};
  for (EventType p : kPriceChanging) gaps[pc_index(p)] = tim.at(p, 1);
  HdimKernels k = zero(tim.grid, gaps);
  for (EventType a : kAllTypes) {
    for (EventType p : kPriceChanging) {
      for (std::size_t l = 1; l <= k.length(); ++l) k.kappa[index(a)][pc_index(p)][l] = tim.increment(a, l);
    }
  }
  return k;
}

std::array<double, kNumPriceChanging> realized_gaps(const EventStats& stats) {
  std::array<double, kNumPriceChanging> out{};
  for (EventType p : kPriceChanging) out[pc_index(p)] = stats.realized_gap(p);
  return out;
}

HdimKernels calibrate_hdim(const CorrelationSet& C, const ReturnResponseSet& S, const EventStats& stats,
                           const LagGrid& grid, const CalibrationOptions& options) {
  const std::size_t L = grid.ell_max;
  if (L == 0) throw GridMismatch("empty lag grid");
  if (S.grid.ell_max < L) throw GridMismatch("return responses shorter than the calibration grid");
  require_correlation_lag(C, L, "influence calibration");
  const auto gaps = realized_gaps(stats);

  const auto types = present_of(stats, kAllTypes);
  if (!options.allow_absent_types && types.size() != kNumTypes) {
    for (EventType t : kAllTypes) {
      if (!stats.present(t)) throw MissingInput(std::string("no events of type ") + std::string(to_string(t)));
    }
  }
  for (EventType t : types) {
    if (!S.available(t)) throw MissingInput(std::string("no return response for ") + std::string(to_string(t)));
  }

  // Every target shares the same matrix; only the right-hand side changes.
  const BlockToeplitzSystem system(
      types.size(), L,
      [&](std::size_t rb, std::size_t cb, std::ptrdiff_t lag) {
        return stats.prob(types[cb]) * C.c(types[rb], types[cb], lag);
      },
      options.solver);

  HdimKernels out = HdimKernels::zero(grid, gaps);
  out.condition = system.condition();
  for (EventType p : kPriceChanging) {
    const double pp = stats.prob(p);
    const double gap = gaps[pc_index(p)];
    std::vector<double> rhs(system.size());
    for (std::size_t ia = 0; ia < types.size(); ++ia) {
      const EventType a = types[ia];
      for (std::size_t i = 0; i < L; ++i) {
        rhs[ia * L + i] = S.at(a, p, i + 1) / pp - gap * C.c(a, p, static_cast<std::ptrdiff_t>(i + 1));
      }
    }
    const auto x = system.solve(rhs);
    for (std::size_t ib = 0; ib < types.size(); ++ib) {
      auto& v = out.kappa[index(types[ib])][pc_index(p)];
      for (std::size_t j = 0; j < L; ++j) v[j + 1] = x[ib * L + j];
    }
  }
  return out;
}

ReturnResponseSet predict_S_hdim(const HdimKernels& kernels, const CorrelationSet& C, const EventStats& stats) {
  const std::size_t L = kernels.length();
  require_correlation_lag(C, L, "return response prediction");
  const auto types = present_of(stats, kAllTypes);
  ReturnResponseSet out;
  out.grid = kernels.grid;
  out.counts = stats.counts;
  for (auto& row : out.S) {
    for (auto& v : row) v.assign(L + 1, kNaN);
  }
  for (EventType a : types) {
    for (EventType p : kPriceChanging) {
      if (!stats.present(p)) continue;
      auto& s = out.S[index(a)][pc_index(p)];
      for (std::size_t n = 0; n <= L; ++n) {
        double v = kernels.gap(p) * C.c(a, p, static_cast<std::ptrdiff_t>(n));
        for (EventType b : types) {
          double part = 0.0;
          for (std::size_t k = 1; k <= L; ++k) {
            part += kernels.effective(b, p, k) *
                    C.c(a, b, static_cast<std::ptrdiff_t>(n) - static_cast<std::ptrdiff_t>(k));
          }
          v += stats.prob(b) * part;
        }
        s[n] = stats.prob(p) * v;
      }
    }
  }
  return out;
}

ResponseSet predict_R_hdim(const HdimKernels& kernels, const CorrelationSet& C, const EventStats& stats) {
  const auto S = predict_S_hdim(kernels, C, stats);
  const std::size_t L = kernels.length();
  ResponseSet out;
  out.grid = kernels.grid;
  out.counts = stats.counts;
  for (EventType a : kAllTypes) {
    auto& r = out.R[index(a)];
    r.assign(L + 1, kNaN);
    if (!stats.present(a)) continue;
    r[0] = 0.0;
    double level = 0.0;
    for (std::size_t l = 1; l <= L; ++l) {
      for (EventType p : kPriceChanging) {
        if (stats.present(p)) level += S.at(a, p, l - 1);
      }
      r[l] = level;
    }
  }
  return out;
}

DeltaGStar delta_g_star(const HdimKernels& kernels, const EventStats& stats) {
  const std::size_t L = kernels.length();
  DeltaGStar out;
  out.grid = kernels.grid;
  for (EventType a : kAllTypes) {
    auto& c = out.curve[index(a)];
    c.assign(L + 1, 0.0);
    double level = 0.0;
    for (std::size_t l = 2; l <= L; ++l) {
      for (EventType p : kPriceChanging) level += stats.prob(p) * kernels.effective(a, p, l - 1);
      c[l] = level;
    }
  }
  return out;
}

DiffusionCurve predict_D_hdim(const HdimKernels& kernels, const CorrelationSet& C, const EventStats& stats,
                              const NoiseModel& noise, std::size_t ell_max) {
  const std::size_t L = kernels.length();
  if (ell_max == 0) throw GridMismatch("empty diffusion grid");
  if (!C.has_pi()) throw MissingInput("influence diffusion needs event-type correlations");
  require_correlation_lag(C, ell_max + L - 1, "influence diffusion");
  if (C.Pi.max_lag() < std::max(L, ell_max - 1)) throw GridMismatch("event-type correlations too short");

  DiffusionCurve base = detail::constant_gap_curve(stats, C, noise, ell_max, kernels.delta_R);

  const auto all = present_of(stats, kAllTypes);
  const auto pcs = present_of(stats, kPriceChanging);
  const KappaTable k = effective_table(kernels);
  auto P = [&](EventType t) { return stats.prob(t); };
  auto kap = [&](EventType a, EventType p) -> const std::vector<double>& { return k[index(a)][pc_index(p)]; };
  auto gap = [&](EventType p) { return kernels.delta_R[pc_index(p)]; };
  const auto sl = [](std::size_t v) { return static_cast<std::ptrdiff_t>(v); };

  // kbar_b(tau) = sum_p P(p) kappa_{b,p}(tau)
  std::array<std::vector<double>, kNumTypes> kbar;
  for (EventType b : all) {
    kbar[index(b)].assign(L + 1, 0.0);
    for (EventType p : pcs) {
      for (std::size_t tau = 1; tau <= L; ++tau) kbar[index(b)][tau] += P(p) * kap(b, p)[tau];
    }
  }

  // hp[b][q][u] = sum_c P(c) sum_tau' kappa_{c,q}(tau') C_{b,c}(u - tau'), u = 0..L+ell_max-1
  const std::size_t U = L + ell_max;
  std::vector<std::vector<double>> hp(kNumTypes * kNumPriceChanging);
  for (EventType b : all) {
    for (EventType q : pcs) {
      auto& h = hp[index(b) * kNumPriceChanging + pc_index(q)];
      h.assign(U, 0.0);
      for (std::size_t u = 1; u < U; ++u) {
        double acc = 0.0;
        for (EventType c : all) {
          const auto& kc = kap(c, q);
          double part = 0.0;
          for (std::size_t tp = 1; tp <= L; ++tp) part += kc[tp] * C.c(b, c, sl(u) - sl(tp));
          acc += P(c) * part;
        }
        h[u] = acc;
      }
    }
  }

  // E[b][p][c] = sum_tau kappa_{b,p}(tau) C_{b,c}(tau)
  std::array<double, kNumTypes * kNumPriceChanging * kNumTypes> E{};
  for (EventType b : all) {
    for (EventType p : pcs) {
      for (EventType c : all) {
        double acc = 0.0;
        for (std::size_t tau = 1; tau <= L; ++tau) acc += kap(b, p)[tau] * C.c(b, c, sl(tau));
        E[(index(b) * kNumPriceChanging + pc_index(p)) * kNumTypes + index(c)] = acc;
      }
    }
  }
  auto e_at = [&](EventType b, EventType p, EventType c) {
    return E[(index(b) * kNumPriceChanging + pc_index(p)) * kNumTypes + index(c)];
  };

  auto cross = [&](std::ptrdiff_t t) {
    // A(t): gap event at s, kappa target at s - t, kappa source tau before the target.
    double a_t = 0.0;
    for (EventType b : all) {
      for (EventType q : pcs) {
        const double w = P(b) * P(q) * gap(q);
        double part = 0.0;
        if (t == 0) {
          for (std::size_t tau = 1; tau <= L; ++tau) part += C.c(b, q, sl(tau)) * kap(b, q)[tau];
        } else {
          for (std::size_t tau = 1; tau <= L; ++tau) part += C.c(b, q, t + sl(tau)) * kbar[index(b)][tau];
        }
        a_t += w * part;
      }
    }
    if (t < 0 && static_cast<std::size_t>(-t) <= L) {
      // source and gap event coincide
      const auto tau = static_cast<std::size_t>(-t);
      for (EventType q : pcs) {
        double part = 0.0;
        for (EventType p : pcs) part += kap(q, p)[tau] * P(p) * C.pi(q, p, sl(tau));
        a_t += P(q) * gap(q) * part;
      }
    }
    return a_t;
  };

  auto quadratic = [&](std::size_t t) {
    // B(t), t >= 0: targets at s and s + t.
    double b2 = 0.0;
    for (EventType p : pcs) {
      for (EventType q : pcs) {
        const double w = P(p) * P(q) * (1.0 + C.pi(p, q, sl(t)));
        double inner = 0.0;
        for (EventType b : all) {
          const auto& kb = kap(b, p);
          const auto& h = hp[index(b) * kNumPriceChanging + pc_index(q)];
          double part = 0.0;
          for (std::size_t tau = 1; tau <= L; ++tau) part += kb[tau] * h[tau + t];
          inner += P(b) * part;
        }
        b2 += w * inner;
      }
    }
    if (t == 0 || t > L) return b2;
    // Second source coincides with the first target: replace the generic
    // factorized term at tau' = t.
    double b1 = 0.0;
    double corr = 0.0;
    for (EventType p : pcs) {
      double head = 0.0;
      for (EventType b : all) head += P(b) * P(p) * e_at(b, p, p);
      double tail = 0.0;
      for (EventType q : pcs) tail += P(q) * kap(p, q)[t];
      b1 += head * tail;
      for (EventType q : pcs) {
        const double w = P(p) * P(q) * (1.0 + C.pi(p, q, sl(t)));
        double inner = 0.0;
        for (EventType b : all) {
          for (EventType c : all) inner += P(b) * P(c) * kap(c, q)[t] * e_at(b, p, c);
        }
        corr += w * inner;
      }
    }
    return b2 + b1 - corr;
  };

  // terms[t] = 2 (A(t) + A(-t)) + 2 B(t) for t >= 1, 2 A(0) + B(0) at t = 0.
  std::vector<double> terms(ell_max, 0.0);
  const auto n = static_cast<std::int64_t>(ell_max);
#pragma omp parallel for schedule(dynamic, 4)
  for (std::int64_t ti = 0; ti < n; ++ti) {
    const auto t = static_cast<std::size_t>(ti);
    if (t == 0) {
      terms[0] = 2.0 * cross(0) + quadratic(0);
    } else {
      terms[t] = 2.0 * (cross(sl(t)) + cross(-sl(t))) + 2.0 * quadratic(t);
    }
  }
  return add_lag_terms(std::move(base), terms);
}

ResponseSet large_tick_R(const EventStats& stats, const CorrelationSet& C, const LagGrid& grid) {
  const std::size_t L = grid.ell_max;
  require_correlation_lag(C, L - 1, "large-tick response");
  const auto gaps = realized_gaps(stats);
  ResponseSet out;
  out.grid = grid;
  out.counts = stats.counts;
  for (EventType a : kAllTypes) {
    auto& r = out.R[index(a)];
    r.assign(L + 1, kNaN);
    if (!stats.present(a)) continue;
    r[0] = 0.0;
    double level = is_price_changing(a) ? gaps[pc_index(a)] : 0.0;
    for (std::size_t l = 1; l <= L; ++l) {
      if (l > 1) {
        for (EventType p : kPriceChanging) {
          level += gaps[pc_index(p)] * stats.prob(p) * C.c(a, p, static_cast<std::ptrdiff_t>(l - 1));
        }
      }
      r[l] = level;
    }
  }
  return out;
}

namespace serial {

DiffusionCurve predict_D_hdim(const HdimKernels& kernels, const CorrelationSet& C, const EventStats& stats,
                              const NoiseModel& noise, std::size_t ell_max) {
  const std::size_t L = kernels.length();
  if (!C.has_pi()) throw MissingInput("influence diffusion needs event-type correlations");
  require_correlation_lag(C, ell_max + L - 1, "influence diffusion");
  DiffusionCurve base = detail::constant_gap_curve(stats, C, noise, ell_max, kernels.delta_R);

  const auto all = present_of(stats, kAllTypes);
  const auto pcs = present_of(stats, kPriceChanging);
  auto P = [&](EventType t) { return stats.prob(t); };
  auto kap = [&](EventType a, EventType p, std::size_t tau) { return kernels.effective(a, p, tau); };
  const auto sl = [](std::size_t v) { return static_cast<std::ptrdiff_t>(v); };

  auto kplus = [&](EventType b, EventType q, std::size_t tau, std::ptrdiff_t t) {
    double acc = 0.0;
    for (EventType p : pcs) {
      double f = 0.0;
      if (t == 0 && p == q) f += 1.0;
      if (t != 0) f += P(p);
      if (t == -sl(tau)) f += P(p) * C.pi(b, p, sl(tau));
      acc += kap(b, p, tau) * f;
    }
    return acc;
  };
  // t >= 0 form; negative t by reflection.
  auto kpp_pos = [&](EventType b, EventType c, std::size_t tau, std::size_t tp, std::size_t t) {
    double acc = 0.0;
    for (EventType p : pcs) {
      for (EventType q : pcs) {
        double f = 0.0;
        if (t == tp && p == c) f += P(q);
        if (t != tp) f += P(p) * P(q) * (1.0 + C.pi(p, q, sl(t)));
        acc += kap(b, p, tau) * kap(c, q, tp) * f;
      }
    }
    return acc;
  };
  auto kpp = [&](EventType b, EventType c, std::size_t tau, std::size_t tp, std::ptrdiff_t t) {
    return t >= 0 ? kpp_pos(b, c, tau, tp, static_cast<std::size_t>(t))
                  : kpp_pos(c, b, tp, tau, static_cast<std::size_t>(-t));
  };

  const auto lmax = sl(ell_max);
  std::vector<double> a(2 * ell_max, 0.0);
  std::vector<double> bq(2 * ell_max, 0.0);
  for (std::ptrdiff_t t = -(lmax - 1); t < lmax; ++t) {
    double at = 0.0;
    double bt = 0.0;
    for (EventType b : all) {
      for (EventType q : pcs) {
        for (std::size_t tau = 1; tau <= L; ++tau) {
          at += P(b) * P(q) * kernels.delta_R[pc_index(q)] * kplus(b, q, tau, t) * C.c(b, q, t + sl(tau));
        }
      }
      for (EventType c : all) {
        for (std::size_t tau = 1; tau <= L; ++tau) {
          for (std::size_t tp = 1; tp <= L; ++tp) {
            bt += P(b) * P(c) * kpp(b, c, tau, tp, t) * C.c(b, c, sl(tau) - sl(tp) + t);
          }
        }
      }
    }
    a[static_cast<std::size_t>(t + lmax)] = at;
    bq[static_cast<std::size_t>(t + lmax)] = bt;
  }
  for (std::size_t l = 1; l <= ell_max; ++l) {
    double extra = 0.0;
    for (std::ptrdiff_t t = -(sl(l) - 1); t < sl(l); ++t) {
      const double w = static_cast<double>(sl(l) - std::abs(t));
      const auto i = static_cast<std::size_t>(t + lmax);
      extra += w * (2.0 * a[i] + bq[i]);
    }
    base.D[l] += extra;
  }
  base.provenance = Provenance::ClosedFormHdim;
  return base;
}

}  // namespace serial

}  // namespace impact
