// Microbenchmarks for the hot paths: one PF step, journal replay against a
// forward pass, backfitting, and one outer sampler step.

#include <cmath>
#include <vector>

#include <Eigen/Dense>
#include <benchmark/benchmark.h>

#include "smc2/calibration.hpp"
#include "smc2/kernels.hpp"
#include "smc2/models.hpp"
#include "smc2/particle_filter.hpp"
#include "smc2/smc2.hpp"

namespace {

const smc2::Theta kSvTheta{0.0, 0.9, 0.3};

smc2::Dataset sv_data(std::size_t T) {
  smc2::StochasticVolatilityModel sv;
  smc2::Rng rng(2024);
  return smc2::simulate(sv, kSvTheta, T, rng).data;
}

void BM_PfStep(benchmark::State& state) {
  smc2::StochasticVolatilityModel sv;
  const auto n_x = static_cast<std::size_t>(state.range(0));
  const auto data = sv_data(1);
  smc2::Rng rng(1);
  smc2::Frontier f = smc2::pf_init(sv, kSvTheta, n_x, data.y[0], rng);
  for (auto _ : state) {
    f = smc2::pf_step(sv, kSvTheta, f, data.y[1], rng);
    benchmark::DoNotOptimize(f.cum_loglik);
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_PfStep)->Arg(100)->Arg(1000)->Arg(10000);

// Forward pass that builds the island journal.
void BM_ForwardJournal(benchmark::State& state) {
  smc2::StochasticVolatilityModel sv;
  const auto T = static_cast<std::size_t>(state.range(0));
  const auto data = sv_data(T);
  for (auto _ : state) {
    smc2::Island island;
    island.theta = kSvTheta;
    island.rng = smc2::Rng(3);
    smc2::island_start(island, sv, 100, data.y[0]);
    for (std::size_t t = 1; t <= T; ++t) smc2::island_extend(island, sv, data.y[t]);
    benchmark::DoNotOptimize(island.frontier.cum_loglik);
  }
}
BENCHMARK(BM_ForwardJournal)->Arg(50)->Arg(200);

// Regenerating the full history from that journal.
void BM_RebuildHistory(benchmark::State& state) {
  smc2::StochasticVolatilityModel sv;
  const auto T = static_cast<std::size_t>(state.range(0));
  const auto data = sv_data(T);
  smc2::Island island;
  island.theta = kSvTheta;
  island.rng = smc2::Rng(3);
  smc2::island_start(island, sv, 100, data.y[0]);
  for (std::size_t t = 1; t <= T; ++t) smc2::island_extend(island, sv, data.y[t]);
  for (auto _ : state) {
    auto h = smc2::rebuild_history(island.journal, sv, kSvTheta, data.y);
    benchmark::DoNotOptimize(h.particles.data());
  }
}
BENCHMARK(BM_RebuildHistory)->Arg(50)->Arg(200);

void BM_BackfitGam(benchmark::State& state) {
  const auto n = static_cast<Eigen::Index>(state.range(0));
  smc2::Rng rng(5);
  Eigen::MatrixXd c(n, 3);
  std::vector<double> r(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < 3; ++j) c(i, j) = rng.normal();
    r[static_cast<std::size_t>(i)] = std::sin(c(i, 0)) + 0.5 * c(i, 1) * c(i, 1) + 0.3 * rng.normal();
  }
  for (auto _ : state) {
    auto fit = smc2::backfit_gam(r, c);
    benchmark::DoNotOptimize(fit.residual_variance);
  }
}
BENCHMARK(BM_BackfitGam)->Arg(200)->Arg(1000);

// One absorbed observation for 200 islands, forced through resample-move.
void BM_Smc2Step(benchmark::State& state) {
  smc2::StochasticVolatilityModel sv;
  const auto data = sv_data(30);
  smc2::Smc2Config c;
  c.n_theta = 200;
  c.n_x_init = 50;
  c.ess_min_frac = 1.0;
  c.variant = static_cast<smc2::Variant>(state.range(0));
  c.clock = smc2::ClockMode::Work;
  for (auto _ : state) {
    state.PauseTiming();
    auto s = smc2::smc2_init(c, sv);
    for (std::size_t t = 0; t < 20; ++t) smc2::smc2_step(s, c, sv, data.prefix(t));
    state.ResumeTiming();
    smc2::smc2_step(s, c, sv, data.prefix(20));
    benchmark::DoNotOptimize(s.log_evidence);
  }
}
BENCHMARK(BM_Smc2Step)->DenseRange(0, 3)->Unit(benchmark::kMillisecond)->Iterations(3);

}  // namespace

BENCHMARK_MAIN();
