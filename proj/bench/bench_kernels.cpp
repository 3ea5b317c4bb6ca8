#include <benchmark/benchmark.h>

#include <cmath>

#include "impact/estimators.hpp"
#include "impact/hdim.hpp"
#include "impact/simengine.hpp"
#include "impact/tim.hpp"

using namespace impact;

namespace {

const EventStream& stream() {
  static const EventStream s = [] {
    SyntheticConfig cfg;
    cfg.n_events = 200000;
    cfg.n_sessions = 4;
    cfg.sign_law = SignLaw::Markov;
    cfg.sign_rho = 0.6;
    cfg.seed = 1;
    return generate_synthetic(cfg).stream;
  }();
  return s;
}

LagGrid grid(std::size_t L) {
  LagGrid g;
  g.ell_max = L;
  return g;
}

void BM_Correlations(benchmark::State& state) {
  const auto stats = estimate_stats(stream());
  const auto L = static_cast<std::size_t>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(estimate_correlations(stream(), stats, grid(L)));
}

void BM_CorrelationsSerial(benchmark::State& state) {
  const auto stats = estimate_stats(stream());
  const auto L = static_cast<std::size_t>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(serial::estimate_correlations(stream(), stats, grid(L), L));
}

void BM_Responses(benchmark::State& state) {
  const auto L = static_cast<std::size_t>(state.range(0));
  for (auto _ : state) {
    benchmark::DoNotOptimize(estimate_R(stream(), grid(L)));
    benchmark::DoNotOptimize(estimate_S(stream(), grid(L)));
  }
}

void BM_ResponsesSerial(benchmark::State& state) {
  const auto L = static_cast<std::size_t>(state.range(0));
  for (auto _ : state) {
    benchmark::DoNotOptimize(serial::estimate_R(stream(), grid(L)));
    benchmark::DoNotOptimize(serial::estimate_S(stream(), grid(L)));
  }
}

void BM_MeasureD(benchmark::State& state) {
  const auto L = static_cast<std::size_t>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(measure_D(stream(), L));
}

void BM_MeasureDSerial(benchmark::State& state) {
  const auto L = static_cast<std::size_t>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(serial::measure_D(stream(), L));
}

struct DiffusionInputs {
  EventStats stats;
  CorrelationSet C;
  TimKernels tim;
  HdimKernels hdim;
};

const DiffusionInputs& diffusion_inputs() {
  static const DiffusionInputs in = [] {
    const std::size_t L = 16;
    SyntheticConfig cfg;
    cfg.sign_law = SignLaw::Markov;
    cfg.sign_rho = 0.5;
    const auto ex = exact_statistics(cfg, 64 + L);
    DiffusionInputs d;
    for (EventType t : kAllTypes) {
      d.stats.P[index(t)] = ex.P[index(t)];
      d.stats.counts[index(t)] = 1;
      if (is_price_changing(t)) d.stats.delta_R[pc_index(t)] = 0.5;
    }
    d.C = ex.correlations;
    std::array<std::vector<double>, kNumTypes> G;
    for (EventType t : kAllTypes) {
      G[index(t)].assign(L + 1, 0.0);
      for (std::size_t l = 1; l <= L; ++l) G[index(t)][l] = 0.5 / std::sqrt(static_cast<double>(l));
    }
    d.tim = TimKernels::from_G(grid(L), G);
    d.hdim = HdimKernels::from_tim(d.tim);
    return d;
  }();
  return in;
}

void BM_PredictDTim(benchmark::State& state) {
  const auto& d = diffusion_inputs();
  for (auto _ : state) benchmark::DoNotOptimize(predict_D_tim(d.tim, d.C, d.stats, {}, 64));
}

void BM_PredictDTimSerial(benchmark::State& state) {
  const auto& d = diffusion_inputs();
  for (auto _ : state) benchmark::DoNotOptimize(serial::predict_D_tim(d.tim, d.C, d.stats, {}, 64));
}

void BM_PredictDHdim(benchmark::State& state) {
  const auto& d = diffusion_inputs();
  for (auto _ : state) benchmark::DoNotOptimize(predict_D_hdim(d.hdim, d.C, d.stats, {}, 64));
}

void BM_PredictDHdimSerial(benchmark::State& state) {
  const auto& d = diffusion_inputs();
  for (auto _ : state) benchmark::DoNotOptimize(serial::predict_D_hdim(d.hdim, d.C, d.stats, {}, 64));
}

}  // namespace

BENCHMARK(BM_Correlations)->Arg(64)->Arg(256)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_CorrelationsSerial)->Arg(64)->Arg(256)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Responses)->Arg(64)->Arg(256)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_ResponsesSerial)->Arg(64)->Arg(256)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_MeasureD)->Arg(256)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_MeasureDSerial)->Arg(256)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_PredictDTim)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_PredictDTimSerial)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_PredictDHdim)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_PredictDHdimSerial)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
