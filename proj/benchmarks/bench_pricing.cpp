#include <benchmark/benchmark.h>

#include <vector>

#include "supou/calib.hpp"
#include "supou/charfn.hpp"
#include "supou/fourier.hpp"
#include "supou/sim.hpp"
#include "supou/zpred.hpp"

using namespace supou;

namespace {

GammaSupOUParams published() {
  return GammaSupOUParams({-10.8797, 0.2225, 29.4025, -0.0004, 4.3632, 0.0, 0.0, -0.5});
}

const MarketContext kCtx(8366.29, 0.0015173);

void BM_Theta(benchmark::State& state) {
  const auto p = published();
  for (auto _ : state) benchmark::DoNotOptimize(theta(cplx(1.2, 15.0), p, 213.0 / 365.0));
}
BENCHMARK(BM_Theta);

void BM_MgfEvaluator(benchmark::State& state) {
  const auto p = published().risk_neutral(kCtx.rate());
  const MgfEvaluator mgf(p, kCtx.log_spot(), 0.0093, 213.0 / 365.0);
  double v = 0.0;
  for (auto _ : state) {
    v += 1e-3;
    benchmark::DoNotOptimize(mgf(cplx(1.5, v)));
  }
}
BENCHMARK(BM_MgfEvaluator);

void BM_PriceCalls(benchmark::State& state) {
  const auto p = published().risk_neutral(kCtx.rate());
  std::vector<double> strikes;
  for (int i = 0; i < state.range(0); ++i) strikes.push_back(7000.0 + 2500.0 * i / std::max<int>(1, state.range(0) - 1));
  for (auto _ : state) benchmark::DoNotOptimize(price_calls(p, 0.0093, 213.0 / 365.0, strikes, kCtx));
}
BENCHMARK(BM_PriceCalls)->Arg(1)->Arg(10)->Arg(50)->Unit(benchmark::kMillisecond);

void BM_ZCov(benchmark::State& state) {
  const ZCovKernel k(published());
  for (auto _ : state) benchmark::DoNotOptimize(k.cov(59.0 / 365.0, 213.0 / 365.0));
}
BENCHMARK(BM_ZCov);

void BM_SimulateConditional(benchmark::State& state) {
  PathConfig cfg;
  cfg.paths = 10000;
  cfg.maturity = 213.0 / 365.0;
  cfg.threads = 1;
  for (auto _ : state) benchmark::DoNotOptimize(simulate_XT(published(), kCtx, 0.0093, cfg));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(cfg.paths));
}
BENCHMARK(BM_SimulateConditional)->Unit(benchmark::kMillisecond);

void BM_Objective(benchmark::State& state) {
  const MarketContext ctx(100.0, 0.01);
  const GammaSupOUParams p({-5.0, 0.3, 20.0, -0.01, 3.0, 0.0, 0.0, -0.5});
  std::vector<RawQuote> raw;
  for (int d : {59, 213}) {
    for (int k = 0; k < 10; ++k) {
      RawQuote q;
      q.maturity_days = d;
      q.strike = 80.0 + 40.0 * k / 9.0;
      q.implied_vol = 0.25;
      raw.push_back(q);
    }
  }
  const OptionChain chain(ctx, raw);
  const ZCurve z({{59.0 / 365.0, 0.006}, {213.0 / 365.0, 0.023}});
  for (auto _ : state) benchmark::DoNotOptimize(rmse_objective(p, z, chain));
}
BENCHMARK(BM_Objective)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
