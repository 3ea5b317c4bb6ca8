#include <gtest/gtest.h>

#include <cmath>

#include "impact/simengine.hpp"
#include "impact/tim.hpp"
#include "test_support.hpp"

using namespace impact;
using impact::fixtures::stats_from;

namespace {

const std::array<double, kNumTypes> kP = {0.3, 0.05, 0.25, 0.05, 0.3, 0.05};

CorrelationSet markov_correlations(double rho, std::size_t max_lag, const std::array<double, kNumTypes>& P = kP) {
  SyntheticConfig cfg;
  cfg.type_probs = P;
  cfg.sign_law = rho == 0.0 ? SignLaw::Iid : SignLaw::Markov;
  cfg.sign_rho = rho;
  return exact_statistics(cfg, max_lag).correlations;
}

TimKernels decaying_kernels(std::size_t L) {
  std::array<std::vector<double>, kNumTypes> G;
  for (EventType t : kAllTypes) {
    auto& g = G[index(t)];
    g.assign(L + 1, 0.0);
    const double amp = is_price_changing(t) ? 0.8 : 0.1 + 0.02 * static_cast<double>(index(t));
    for (std::size_t l = 1; l <= L; ++l) g[l] = amp * std::pow(static_cast<double>(l), -0.3) + 0.01 * static_cast<double>(index(t));
  }
  LagGrid grid;
  grid.ell_max = L;
  return TimKernels::from_G(grid, G);
}

// Quadratic-form oracle: p_{t+l} - p_t = sum_i eps_i sum_b 1{pi_i = b} w_b(i) with
// w_b(i) = G_b(t+l-i) - G_b(t-i), G(<=0) = 0. Its second moment is
// sum_{i<=j} (2 - [i=j]) P_a P_b C_ab(j-i) w_a(i) w_b(j).
double oracle_D(const TimKernels& k, const CorrelationSet& C, const EventStats& stats, std::size_t l, double D0) {
  const auto L = static_cast<std::ptrdiff_t>(k.length());
  const auto ll = static_cast<std::ptrdiff_t>(l);
  auto G = [&](EventType t, std::ptrdiff_t u) { return u <= 0 ? 0.0 : k.at(t, static_cast<std::size_t>(u)); };
  auto w = [&](EventType t, std::ptrdiff_t i) { return G(t, ll - i) - G(t, -i); };
  double d = 0.0;
  for (std::ptrdiff_t i = -L - 1; i < ll; ++i) {
    for (std::ptrdiff_t j = i; j < ll; ++j) {
      for (EventType a : kAllTypes) {
        for (EventType b : kAllTypes) {
          if (!stats.present(a) || !stats.present(b)) continue;
          const double term = stats.prob(a) * stats.prob(b) * C.c(a, b, j - i) * w(a, i) * w(b, j);
          d += (i == j ? 1.0 : 2.0) * term;
        }
      }
    }
  }
  return d + D0 * static_cast<double>(l);
}

}  // namespace

TEST(CalibrateTim, UncorrelatedFlowGivesResponseAsPropagator) {
  const std::size_t L = 20;
  const auto C = markov_correlations(0.0, L);
  const auto stats = stats_from(kP);
  ResponseSet R;
  R.grid.ell_max = L;
  R.counts = stats.counts;
  for (EventType t : kAllTypes) {
    R.R[index(t)].assign(L + 1, 0.0);
    for (std::size_t l = 1; l <= L; ++l) {
      R.R[index(t)][l] = 0.1 * static_cast<double>(index(t) + 1) * (1.0 + std::pow(static_cast<double>(l), 0.3));
    }
  }
  LagGrid grid;
  grid.ell_max = L;
  const auto k = calibrate_tim(C, R, stats, grid);
  for (EventType t : kAllTypes) {
    for (std::size_t l = 1; l <= L; ++l) EXPECT_NEAR(k.at(t, l), R.at(t, l), 1e-12);
  }
}

TEST(CalibrateTim, ForwardModelIsReproduced) {
  const std::size_t L = 24;
  const auto C = markov_correlations(0.6, L);
  const auto stats = stats_from(kP);
  const auto truth = decaying_kernels(L);
  const auto R = predict_R_tim(truth, C, stats);
  const auto k = calibrate_tim(C, R, stats, truth.grid);
  for (EventType t : kAllTypes) {
    for (std::size_t l = 1; l <= L; ++l) EXPECT_NEAR(k.at(t, l), truth.at(t, l), 1e-9);
  }
  const auto R2 = predict_R_tim(k, C, stats);
  for (EventType t : kAllTypes) {
    for (std::size_t l = 1; l <= L; ++l) EXPECT_NEAR(R2.at(t, l), R.at(t, l), 1e-10);
  }
  EXPECT_GT(k.condition, 1.0);
}

TEST(CalibrateTim, SingleTypeMatchesSingleEventFit) {
  const std::size_t L = 16;
  const std::array<double, kNumTypes> P = {0, 1, 0, 0, 0, 0};
  const auto C = markov_correlations(0.7, L, P);
  const auto stats = stats_from(P);
  ResponseSet R;
  R.grid.ell_max = L;
  R.counts = stats.counts;
  for (auto& r : R.R) r.assign(L + 1, 0.0);
  for (std::size_t l = 1; l <= L; ++l) R.R[index(EventType::MOP)][l] = 1.0 + 0.5 * std::log(static_cast<double>(l));
  LagGrid grid;
  grid.ell_max = L;
  CalibrationOptions opt;
  opt.allow_absent_types = true;
  const auto k = calibrate_tim(C, R, stats, grid, opt);

  std::vector<double> c(L + 1), s(L);
  for (std::size_t l = 0; l <= L; ++l) c[l] = C.c(EventType::MOP, EventType::MOP, static_cast<std::ptrdiff_t>(l));
  for (std::size_t l = 0; l < L; ++l) s[l] = R.at(EventType::MOP, l + 1) - R.at(EventType::MOP, l);
  const auto single = calibrate_single(c, s, L);
  for (std::size_t l = 1; l <= L; ++l) EXPECT_NEAR(k.at(EventType::MOP, l), single.G[l], 1e-8);
  for (EventType t : kAllTypes) {
    if (t != EventType::MOP) EXPECT_FALSE(k.active[index(t)]);
  }
}

TEST(CalibrateTim, AbsentTypeIsAnError) {
  const std::array<double, kNumTypes> P = {0.5, 0.5, 0, 0, 0, 0};
  const auto C = markov_correlations(0.0, 4, P);
  const auto stats = stats_from(P);
  ResponseSet R;
  R.grid.ell_max = 4;
  R.counts = stats.counts;
  for (auto& r : R.R) r.assign(5, 0.0);
  LagGrid grid;
  grid.ell_max = 4;
  EXPECT_THROW(calibrate_tim(C, R, stats, grid), MissingInput);
}

TEST(CalibrateSingle, WhiteFlowGivesPermanentImpact) {
  const std::vector<double> c = {2.0, 0.0, 0.0, 0.0, 0.0};
  const std::vector<double> s = {1.0, 0.0, 0.0, 0.0, 0.0};
  const auto k = calibrate_single(c, s, 5);
  for (std::size_t l = 1; l <= 5; ++l) EXPECT_NEAR(k.G[l], 0.5, 1e-15);
}

TEST(CalibrateSingle, HandThreeLagRecovery) {
  // G = (1, 0.7, 0.6): x = (1, -0.3, -0.1); C = (1, 0.5, 0.25)
  const std::vector<double> c = {1.0, 0.5, 0.25};
  const std::vector<double> s = {1.0 - 0.15 - 0.025, 0.5 - 0.3 - 0.05, 0.25 - 0.15 - 0.1};
  const auto k = calibrate_single(c, s, 3);
  EXPECT_NEAR(k.G[1], 1.0, 1e-14);
  EXPECT_NEAR(k.G[2], 0.7, 1e-14);
  EXPECT_NEAR(k.G[3], 0.6, 1e-14);
}

TEST(SingleEventCurves, ThetaZeroReducesToSigns) {
  const std::vector<int> e = {1, 1, -1, 1, -1, -1};
  const std::vector<double> v = {2, 5, 1, 3, 4, 7};
  const std::vector<double> r = {0.5, 0.0, -1.0, 0.5, 0.0, -0.5};
  const auto out = single_event_curves(e, v, r, 0.0, 2);
  EXPECT_DOUBLE_EQ(out.C[0], 1.0);
  EXPECT_DOUBLE_EQ(out.C[1], (1 - 1 - 1 - 1 + 1) / 5.0);
  EXPECT_DOUBLE_EQ(out.S[0], (0.5 + 0.0 + 1.0 + 0.5 + 0.0 + 0.5) / 6.0);
  const auto vol = single_event_curves(e, v, r, 1.0, 1);
  EXPECT_DOUBLE_EQ(vol.C[0], (4 + 25 + 1 + 9 + 16 + 49) / 6.0);
}

TEST(PredictDTim, ConstantKernelsWhiteFlow) {
  const std::size_t L = 8;
  const auto C = markov_correlations(0.0, 40);
  const auto stats = stats_from(kP);
  std::array<std::vector<double>, kNumTypes> G;
  double level = 0.0;
  for (EventType t : kAllTypes) {
    const double g1 = 0.2 + 0.1 * static_cast<double>(index(t));
    G[index(t)].assign(L + 1, g1);
    level += kP[index(t)] * g1 * g1;
  }
  LagGrid grid;
  grid.ell_max = L;
  const auto k = TimKernels::from_G(grid, G);
  NoiseModel noise;
  noise.D0 = 0.04;
  const auto D = predict_D_tim(k, C, stats, noise, 30);
  for (std::size_t l = 1; l <= 30; ++l) EXPECT_NEAR(D.at(l), 0.04 * l + l * level, 1e-12 * l);
  EXPECT_EQ(D.provenance, Provenance::ClosedFormTim);
}

TEST(PredictDTim, FirstLagWhiteFlow) {
  const std::size_t L = 10;
  const auto C = markov_correlations(0.0, 20);
  const auto stats = stats_from(kP);
  const auto k = decaying_kernels(L);
  NoiseModel noise;
  noise.D0 = 0.01;
  double expected = 0.01;
  for (EventType t : kAllTypes) {
    double tail = 0.0;
    for (std::size_t n = 1; n < L; ++n) tail += std::pow(k.at(t, n + 1) - k.at(t, n), 2);
    expected += kP[index(t)] * (k.at(t, 1) * k.at(t, 1) + tail);
  }
  EXPECT_NEAR(predict_D_tim(k, C, stats, noise, 1).at(1), expected, 1e-14);
}

TEST(PredictDTim, FastSerialAndQuadraticFormAgree) {
  const std::size_t L = 6;
  const std::size_t ell = 12;
  const auto C = markov_correlations(0.55, ell + L + 2);
  const auto stats = stats_from(kP);
  const auto k = decaying_kernels(L);
  NoiseModel noise;
  noise.D0 = 0.02;
  noise.D_hf = 0.003;
  const auto fast = predict_D_tim(k, C, stats, noise, ell);
  const auto ref = serial::predict_D_tim(k, C, stats, noise, ell);
  for (std::size_t l = 1; l <= ell; ++l) {
    const double o = oracle_D(k, C, stats, l, noise.D0) + noise.D_hf;
    EXPECT_NEAR(fast.at(l), o, 1e-12 * o) << l;
    EXPECT_NEAR(ref.at(l), o, 1e-12 * o) << l;
  }
}

TEST(PredictDTim, NeedsLongEnoughCorrelations) {
  const auto C = markov_correlations(0.5, 10);
  const auto k = decaying_kernels(8);
  EXPECT_THROW(predict_D_tim(k, C, stats_from(kP), {}, 8), GridMismatch);
}

TEST(PredictDTim, NonNegativeAndAboveNoise) {
  const auto C = markov_correlations(0.8, 80);
  const auto k = decaying_kernels(16);
  NoiseModel noise;
  noise.D0 = 0.05;
  const auto D = predict_D_tim(k, C, stats_from(kP), noise, 64);
  EXPECT_GE(D.at(1), noise.D0);
  for (std::size_t l = 1; l <= 64; ++l) EXPECT_GE(D.at(l), 0.0);
}

TEST(ConstantGap, IidEventsAreDiffusive) {
  const auto C = markov_correlations(0.0, 50);
  const std::array<double, kNumPriceChanging> gaps = {0.5, 1.0, 0.75};
  const auto stats = stats_from(kP, gaps);
  NoiseModel noise;
  noise.D0 = 0.1;
  const auto D = constant_gap_curve(stats, C, noise, 50);
  double level = 0.0;
  for (EventType t : kPriceChanging) level += kP[index(t)] * gaps[pc_index(t)] * gaps[pc_index(t)];
  for (std::size_t l = 1; l <= 50; ++l) EXPECT_NEAR(D.at(l), 0.1 * l + l * level, 1e-12 * l);
  EXPECT_EQ(D.provenance, Provenance::ConstantGap);
}

TEST(ConstantGap, NoiseOnPriceChangingEventsOnly) {
  const auto C = markov_correlations(0.0, 10);
  const auto stats = stats_from(kP);
  NoiseModel all;
  all.D0 = 0.1;
  NoiseModel pc = all;
  pc.price_changing_only = true;
  const auto a = constant_gap_curve(stats, C, all, 10);
  const auto b = constant_gap_curve(stats, C, pc, 10);
  for (std::size_t l = 1; l <= 10; ++l) EXPECT_NEAR(a.at(l) - b.at(l), 0.1 * l * (1.0 - 0.15), 1e-12);
}

TEST(ConstantGap, CorrelatedMarketOrdersAreSuperDiffusive) {
  const std::array<double, kNumTypes> P = {0, 1, 0, 0, 0, 0};
  const auto C = markov_correlations(0.5, 40, P);
  const auto D = constant_gap_curve(stats_from(P), C, {}, 40);
  for (std::size_t l = 2; l <= 40; ++l) EXPECT_GT(D.normalized(l), D.normalized(l - 1));
}

TEST(NoiseModel, RejectsNegativeVariance) {
  NoiseModel n;
  n.D0 = -1.0;
  EXPECT_THROW(n.validate(), Error);
}

TEST(Provenance, NamesRoundTrip) {
  for (auto p : {Provenance::ClosedFormTim, Provenance::ClosedFormHdim, Provenance::ConstantGap, Provenance::Simulated}) {
    EXPECT_EQ(parse_provenance(to_string(p)), p);
  }
  EXPECT_FALSE(parse_provenance("bogus"));
}

TEST(TimKernels, FlatBeyondLength) {
  const auto k = decaying_kernels(5);
  EXPECT_EQ(k.at(EventType::MOP, 9), k.at(EventType::MOP, 5));
  EXPECT_EQ(k.increment(EventType::MOP, 5), 0.0);
  EXPECT_NEAR(k.increment(EventType::MOP, 2), k.at(EventType::MOP, 3) - k.at(EventType::MOP, 2), 0.0);
}
