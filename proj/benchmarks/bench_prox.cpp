#include <benchmark/benchmark.h>

#include <random>

#include "pwprox/data.hpp"
#include "pwprox/prox.hpp"

namespace {

using namespace pwprox;

// One closed-form surrogate prox per piece of each built-in penalty.
void BM_ProxSurrogate(benchmark::State& state, PiecewiseFn fn) {
  std::mt19937_64 rng(1);
  std::vector<double> xs(1024);
  for (double& x : xs) x = -5.0 + 10.0 * uniform01(rng);
  std::size_t i = 0;
  for (auto _ : state) {
    const SurrogateFn& fm = fn.surrogate(i % fn.num_pieces());
    benchmark::DoNotOptimize(prox_surrogate(fm, 0.5, xs[i % xs.size()]));
    ++i;
  }
}
BENCHMARK_CAPTURE(BM_ProxSurrogate, capped_l1, capped_l1(0.2, 1.0));
BENCHMARK_CAPTURE(BM_ProxSurrogate, leaky_capped_l1, leaky_capped_l1(0.2, 1.0, 0.1));
BENCHMARK_CAPTURE(BM_ProxSurrogate, indicator, indicator_penalty(0.2, 1.0));
BENCHMARK_CAPTURE(BM_ProxSurrogate, l0, l0_penalty(0.2));

void BM_ProxPiecewise(benchmark::State& state) {
  const PiecewiseFn fn = capped_l1(0.2, 1.0);
  std::mt19937_64 rng(2);
  std::vector<double> xs(1024);
  for (double& x : xs) x = -5.0 + 10.0 * uniform01(rng);
  std::size_t i = 0;
  for (auto _ : state) benchmark::DoNotOptimize(prox_piecewise(fn, 0.5, xs[i++ % xs.size()]));
}
BENCHMARK(BM_ProxPiecewise);

void BM_ProxVector(benchmark::State& state) {
  const PiecewiseFn fn = capped_l1(0.2, 1.0);
  const auto d = static_cast<Eigen::Index>(state.range(0));
  std::mt19937_64 rng(3);
  Vector u(d);
  for (Eigen::Index i = 0; i < d; ++i) u[i] = 2.0 * standard_normal(rng);
  std::vector<const SurrogateFn*> sur(static_cast<std::size_t>(d));
  for (Eigen::Index i = 0; i < d; ++i) sur[static_cast<std::size_t>(i)] = &fn.surrogate(fn.piece_index(u[i]));
  for (auto _ : state) benchmark::DoNotOptimize(prox_vector(sur, 0.5, u));
  state.SetItemsProcessed(state.iterations() * d);
}
BENCHMARK(BM_ProxVector)->Arg(784)->Arg(10000);

}  // namespace
