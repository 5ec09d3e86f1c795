#include <benchmark/benchmark.h>

#include <memory>

#include "pwprox/data.hpp"
#include "pwprox/solvers.hpp"

namespace {

using namespace pwprox;

Problem logistic_problem(std::size_t n, std::size_t d) {
  SynthSpec spec;
  spec.kind = LossKind::logistic;
  spec.n = n;
  spec.d = d;
  spec.sparsity = 0.05;
  spec.noise = 0.1;
  spec.feature_scale = 2.0;
  spec.seed = 1;
  return Problem(SmoothLoss(LossKind::logistic, synth(spec).data),
                 std::make_shared<const PiecewiseFn>(capped_l1(0.2, 1.0)));
}

// Cost of a 20-iteration run, reported per iteration.
void BM_Solver(benchmark::State& state, const char* name) {
  const Problem problem = logistic_problem(static_cast<std::size_t>(state.range(0)), 784);
  SolverOptions o;
  o.K = 20;
  o.timing = false;
  const Vector x0 = Vector::Zero(problem.dim());
  for (auto _ : state) benchmark::DoNotOptimize(run_solver(name, problem, x0, o).rows.back().F);
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(o.K));
}
BENCHMARK_CAPTURE(BM_Solver, ppgd, "ppgd")->Arg(1000)->Arg(10000)->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(BM_Solver, pgd, "pgd")->Arg(1000)->Arg(10000)->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(BM_Solver, apg, "apg")->Arg(1000)->Arg(10000)->Unit(benchmark::kMillisecond);

void BM_Nce(benchmark::State& state) {
  const PiecewiseFn fn = capped_l1(0.2, 1.0);
  const Eigen::Index d = 784;
  Vector x = Vector::Constant(d, 0.9);
  Vector w = Vector::Constant(d, 0.95);
  Vector z = Vector::Constant(d, 1.2);
  for (auto _ : state) benchmark::DoNotOptimize(nce(x, z, w, 0.5, fn).outcome);
}
BENCHMARK(BM_Nce);

}  // namespace
