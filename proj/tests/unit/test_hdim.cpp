#include <gtest/gtest.h>

#include <cmath>

#include "impact/hdim.hpp"
#include "impact/simengine.hpp"
#include "test_support.hpp"

using namespace impact;
using impact::fixtures::stats_from;

namespace {

const std::array<double, kNumTypes> kP = {0.3, 0.05, 0.25, 0.05, 0.3, 0.05};
const std::array<double, kNumPriceChanging> kGaps = {0.5, 0.8, 0.6};

ExactStatistics exact(double rho, std::size_t max_lag, bool markov_types, const std::array<double, kNumTypes>& P = kP) {
  SyntheticConfig cfg;
  cfg.type_probs = P;
  cfg.sign_law = rho == 0.0 ? SignLaw::Iid : SignLaw::Markov;
  cfg.sign_rho = rho;
  if (markov_types) {
    TypeMatrix m{};
    for (std::size_t a = 0; a < kNumTypes; ++a) {
      for (std::size_t b = 0; b < kNumTypes; ++b) m[a][b] = 0.6 * P[b] + (a == b ? 0.4 : 0.0);
    }
    cfg.type_transition = m;
  }
  return exact_statistics(cfg, max_lag);
}

HdimKernels sample_kernels(std::size_t L, double amp = 0.05) {
  LagGrid grid;
  grid.ell_max = L;
  auto k = HdimKernels::zero(grid, kGaps);
  for (EventType a : kAllTypes) {
    for (EventType p : kPriceChanging) {
      auto& v = k.kappa[index(a)][pc_index(p)];
      const double sign = (index(a) + pc_index(p)) % 2 == 0 ? 1.0 : -0.6;
      for (std::size_t l = 1; l <= L; ++l) v[l] = sign * amp * std::exp(-0.3 * static_cast<double>(l)) * (1.0 + 0.1 * static_cast<double>(index(a)));
    }
  }
  return k;
}

ReturnResponseSet empty_S(std::size_t L, const EventStats& stats) {
  ReturnResponseSet S;
  S.grid.ell_max = L;
  S.counts = stats.counts;
  for (auto& row : S.S) {
    for (auto& v : row) v.assign(L + 1, 0.0);
  }
  return S;
}

}  // namespace

TEST(CalibrateHdim, IidFlowIsDiagonal) {
  const std::size_t L = 12;
  const auto C = exact(0.0, L, false).correlations;
  const auto stats = stats_from(kP, kGaps);
  auto S = empty_S(L, stats);
  for (EventType a : kAllTypes) {
    for (EventType p : kPriceChanging) {
      for (std::size_t l = 1; l <= L; ++l) S.S[index(a)][pc_index(p)][l] = 0.01 * std::cos(static_cast<double>(l + index(a)));
    }
  }
  LagGrid grid;
  grid.ell_max = L;
  const auto k = calibrate_hdim(C, S, stats, grid);
  for (EventType a : kAllTypes) {
    for (EventType p : kPriceChanging) {
      for (std::size_t l = 1; l <= L; ++l) EXPECT_NEAR(k.raw(a, p, l), S.at(a, p, l) / kP[index(p)], 1e-12);
    }
  }
  EXPECT_EQ(k.scale, 1.0);
  EXPECT_EQ(k.delta_R, kGaps);
}

TEST(CalibrateHdim, ConstantGapWorldGivesZeroKappa) {
  const std::size_t L = 16;
  const auto C = exact(0.6, L, true).correlations;
  const auto stats = stats_from(kP, kGaps);
  auto S = empty_S(L, stats);
  for (EventType a : kAllTypes) {
    for (EventType p : kPriceChanging) {
      for (std::size_t l = 0; l <= L; ++l) {
        S.S[index(a)][pc_index(p)][l] = kP[index(p)] * kGaps[pc_index(p)] * C.c(a, p, static_cast<std::ptrdiff_t>(l));
      }
    }
  }
  LagGrid grid;
  grid.ell_max = L;
  const auto k = calibrate_hdim(C, S, stats, grid);
  for (EventType a : kAllTypes) {
    for (EventType p : kPriceChanging) {
      for (std::size_t l = 1; l <= L; ++l) EXPECT_NEAR(k.raw(a, p, l), 0.0, 1e-12);
    }
  }
}

TEST(CalibrateHdim, ForwardFactorizationIsReproduced) {
  const std::size_t L = 14;
  const auto C = exact(0.5, L, true).correlations;
  const auto stats = stats_from(kP, kGaps);
  const auto truth = sample_kernels(L);
  const auto S = predict_S_hdim(truth, C, stats);
  const auto k = calibrate_hdim(C, S, stats, truth.grid);
  for (EventType a : kAllTypes) {
    for (EventType p : kPriceChanging) {
      for (std::size_t l = 1; l <= L; ++l) EXPECT_NEAR(k.raw(a, p, l), truth.raw(a, p, l), 1e-10);
    }
  }
  // R is the partial sum of S over targets
  const auto R = predict_R_hdim(truth, C, stats);
  for (EventType a : kAllTypes) {
    double acc = 0.0;
    for (std::size_t l = 1; l <= L; ++l) {
      for (EventType p : kPriceChanging) acc += S.at(a, p, l - 1);
      EXPECT_NEAR(R.at(a, l), acc, 1e-14);
    }
  }
}

TEST(CalibrateHdim, MissingGapIsAnError) {
  const std::size_t L = 4;
  const auto C = exact(0.0, L, false).correlations;
  auto stats = stats_from(kP, kGaps);
  stats.delta_R[1].reset();
  LagGrid grid;
  grid.ell_max = L;
  EXPECT_THROW(calibrate_hdim(C, empty_S(L, stats), stats, grid), MissingInput);
}

TEST(DeltaGStar, FirstLagIsEmpty) {
  const auto k = sample_kernels(8);
  const auto d = delta_g_star(k, stats_from(kP, kGaps));
  for (EventType a : kAllTypes) EXPECT_EQ(d.curve[index(a)][1], 0.0);
}

TEST(DeltaGStar, HandExample) {
  LagGrid grid;
  grid.ell_max = 4;
  auto k = HdimKernels::zero(grid, kGaps);
  for (EventType p : kPriceChanging) k.kappa[index(EventType::MO0)][pc_index(p)][1] = 0.5;
  const std::array<double, kNumTypes> P = {0.4, 0.1, 0.0, 0.2, 0.0, 0.3};
  const auto d = delta_g_star(k, stats_from(P, kGaps));
  EXPECT_DOUBLE_EQ(d.curve[index(EventType::MO0)][2], 0.3);
  const auto z = delta_g_star(HdimKernels::zero(grid, kGaps), stats_from(P, kGaps));
  for (EventType a : kAllTypes) {
    for (std::size_t l = 1; l <= 4; ++l) EXPECT_EQ(z.curve[index(a)][l], 0.0);
  }
}

TEST(DeltaGStar, LinearInKappa) {
  auto k = sample_kernels(10);
  const auto stats = stats_from(kP, kGaps);
  const auto d1 = delta_g_star(k, stats);
  for (auto& row : k.kappa) {
    for (auto& v : row) {
      for (auto& x : v) x *= 2.0;
    }
  }
  const auto d2 = delta_g_star(k, stats);
  for (EventType a : kAllTypes) {
    for (std::size_t l = 1; l <= 10; ++l) EXPECT_EQ(d2.curve[index(a)][l], 2.0 * d1.curve[index(a)][l]);
  }
  k.scale = 0.5;
  const auto d3 = delta_g_star(k, stats);
  for (EventType a : kAllTypes) {
    for (std::size_t l = 1; l <= 10; ++l) EXPECT_NEAR(d3.curve[index(a)][l], d1.curve[index(a)][l], 1e-15);
  }
}

TEST(PredictDHdim, ZeroKappaIsConstantGapBitForBit) {
  const std::size_t L = 10;
  const std::size_t ell = 40;
  const auto C = exact(0.7, ell + L, true).correlations;
  const auto stats = stats_from(kP, kGaps);
  LagGrid grid;
  grid.ell_max = L;
  for (bool pc_only : {false, true}) {
    NoiseModel noise;
    noise.D0 = 0.03;
    noise.D_hf = 0.01;
    noise.price_changing_only = pc_only;
    const auto h = predict_D_hdim(HdimKernels::zero(grid, kGaps), C, stats, noise, ell);
    const auto cg = constant_gap_curve(stats, C, noise, ell);
    EXPECT_EQ(h.D, cg.D);
    EXPECT_EQ(h.provenance, Provenance::ClosedFormHdim);
  }
}

TEST(PredictDHdim, ZeroKappaIidIsAnalytic) {
  const std::size_t L = 6;
  const auto C = exact(0.0, 40, false).correlations;
  const auto stats = stats_from(kP, kGaps);
  LagGrid grid;
  grid.ell_max = L;
  NoiseModel noise;
  noise.D0 = 0.2;
  const auto D = predict_D_hdim(HdimKernels::zero(grid, kGaps), C, stats, noise, 30);
  double level = 0.0;
  for (EventType p : kPriceChanging) level += kP[index(p)] * kGaps[pc_index(p)] * kGaps[pc_index(p)];
  for (std::size_t l = 1; l <= 30; ++l) EXPECT_NEAR(D.at(l), 0.2 * l + l * level, 1e-12 * l);
}

TEST(PredictDHdim, FastMatchesLiteralEvaluation) {
  const std::size_t L = 5;
  const std::size_t ell = 12;
  const auto C = exact(0.5, ell + L + 2, true).correlations;
  const auto stats = stats_from(kP, kGaps);
  const auto k = sample_kernels(L, 0.2);
  NoiseModel noise;
  noise.D0 = 0.01;
  noise.price_changing_only = true;
  const auto fast = predict_D_hdim(k, C, stats, noise, ell);
  const auto ref = serial::predict_D_hdim(k, C, stats, noise, ell);
  for (std::size_t l = 1; l <= ell; ++l) EXPECT_NEAR(fast.at(l), ref.at(l), 1e-12 * std::abs(ref.at(l))) << l;
  EXPECT_NE(fast.D, constant_gap_curve(stats, C, noise, ell).D);
}

TEST(PredictDHdim, PropagatorEquivalentSingleTypeMatchesTim) {
  const std::size_t L = 8;
  const std::size_t ell = 20;
  const std::array<double, kNumTypes> P = {0, 1, 0, 0, 0, 0};
  const auto C = exact(0.6, ell + L + 2, false, P).correlations;
  const auto stats = stats_from(P, kGaps);
  std::array<std::vector<double>, kNumTypes> G;
  G[index(EventType::MOP)].assign(L + 1, 0.0);
  for (std::size_t l = 1; l <= L; ++l) G[index(EventType::MOP)][l] = 0.5 * std::pow(static_cast<double>(l), -0.25);
  LagGrid grid;
  grid.ell_max = L;
  const auto tim = TimKernels::from_G(grid, G);
  auto hd = HdimKernels::from_tim(tim);
  const auto Dt = predict_D_tim(tim, C, stats, {}, ell);
  const auto Dh = predict_D_hdim(hd, C, stats, {}, ell);
  for (std::size_t l = 1; l <= ell; ++l) EXPECT_NEAR(Dh.at(l), Dt.at(l), 1e-12 * Dt.at(l)) << l;
}

TEST(PredictDHdim, RequiresEventTypeCorrelations) {
  auto C = exact(0.0, 30, false).correlations;
  C.Pi = PairCurves();
  LagGrid grid;
  grid.ell_max = 4;
  EXPECT_THROW(predict_D_hdim(HdimKernels::zero(grid, kGaps), C, stats_from(kP, kGaps), {}, 8), MissingInput);
}

TEST(FromTim, KappaEqualsIncrements) {
  std::array<std::vector<double>, kNumTypes> G;
  for (EventType t : kAllTypes) {
    G[index(t)] = {0.0, 1.0, 0.8, 0.7, 0.65};
    for (auto& g : G[index(t)]) g *= 1.0 + static_cast<double>(index(t));
  }
  LagGrid grid;
  grid.ell_max = 4;
  const auto tim = TimKernels::from_G(grid, G);
  const auto k = HdimKernels::from_tim(tim);
  for (EventType a : kAllTypes) {
    for (EventType p : kPriceChanging) {
      for (std::size_t l = 1; l <= 4; ++l) EXPECT_EQ(k.effective(a, p, l), tim.increment(a, l));
    }
    EXPECT_EQ(k.effective(a, EventType::LO0, 1), 0.0);
  }
  for (EventType p : kPriceChanging) EXPECT_EQ(k.gap(p), tim.at(p, 1));
}

TEST(LargeTickR, IidEventsAreFlat) {
  const auto C = exact(0.0, 20, false).correlations;
  const auto stats = stats_from(kP, kGaps);
  LagGrid grid;
  grid.ell_max = 20;
  const auto R = large_tick_R(stats, C, grid);
  for (EventType t : kAllTypes) {
    const double level = is_price_changing(t) ? kGaps[pc_index(t)] : 0.0;
    for (std::size_t l = 1; l <= 20; ++l) EXPECT_NEAR(R.at(t, l), level, 1e-15);
  }
}

TEST(LargeTickR, MatchesZeroKappaForwardModel) {
  const auto C = exact(0.4, 20, true).correlations;
  const auto stats = stats_from(kP, kGaps);
  LagGrid grid;
  grid.ell_max = 20;
  const auto R = large_tick_R(stats, C, grid);
  const auto Rf = predict_R_hdim(HdimKernels::zero(grid, kGaps), C, stats);
  for (EventType t : kAllTypes) {
    for (std::size_t l = 1; l <= 20; ++l) EXPECT_NEAR(R.at(t, l), Rf.at(t, l), 1e-13);
  }
}

TEST(RefineScale, ZeroKappaIsNonIdentifiable) {
  SyntheticConfig cfg;
  cfg.n_events = 4000;
  cfg.seed = 2;
  const auto st = generate_synthetic(cfg).stream;
  LagGrid grid;
  grid.ell_max = 10;
  const auto target = estimate_R(st, grid);
  const auto res = refine_scale(HdimKernels::zero(grid, {0.5, 0.5, 0.5}), st, target);
  EXPECT_TRUE(res.non_identifiable);
  EXPECT_EQ(res.kernels.scale, 1.0);
}

TEST(RefineScale, SelfConsistentKernelsStayAtUnitScale) {
  SyntheticConfig cfg;
  cfg.n_events = 20000;
  cfg.seed = 9;
  const auto st = generate_synthetic(cfg).stream;
  const auto k = sample_kernels(10, 0.1);
  const auto path = simulate_hdim(st, k);
  LagGrid grid;
  grid.ell_max = 10;
  const auto target = estimate_R(path.stream, grid);
  const auto res = refine_scale(k, st, target);
  EXPECT_FALSE(res.non_identifiable);
  EXPECT_FALSE(res.hit_bound);
  EXPECT_NEAR(res.kernels.scale, 1.0, 0.05);
  EXPECT_LE(res.objective, 1e-6);
}

TEST(RefineScale, RejectsBadBounds) {
  SyntheticConfig cfg;
  cfg.n_events = 100;
  const auto st = generate_synthetic(cfg).stream;
  LagGrid grid;
  grid.ell_max = 4;
  RefineOptions opt;
  opt.lower = 2.0;
  opt.upper = 1.0;
  EXPECT_THROW(refine_scale(HdimKernels::zero(grid, {0.5, 0.5, 0.5}), st, estimate_R(st, grid), opt), Error);
}
