// Serial reference vs OpenMP execution of the sampling kernels.

#include <benchmark/benchmark.h>

#include "lagrangeforge/constructors.hpp"
#include "lagrangeforge/dynamics.hpp"

using namespace lagrangeforge;

namespace {

DomainBox box_with_grid(int grid) {
  DomainBox box({-1.0, 1.0}, {0.2, 2.0}, {0.0, 2.0});
  box.grid = grid;
  return box;
}

// x'' + a(x,t) v^2 + b v + c = 0 with a quadrature-backed standard Lagrangian,
// so every sample does nontrivial work.
struct Fixture {
  OdeSpec ode;
  Lagrangian standard;
  // Two Lagrangians of x'' + k x' = 0 for the equivalence kernel.
  Lagrangian damped;
  Lagrangian exponential;

  explicit Fixture(int grid) {
    const Expr x = var(Variable::kX);
    const Expr t = var(Variable::kT);
    const Expr a = 0.3 * x * t;
    const Expr b = 0.5 + 0.3 * x * x;
    const Expr c = sin(x) + 0.2 * t;
    ode = OdeSpec::standard(a, b, c);
    BuilderOptions opts;
    opts.domain = box_with_grid(grid);
    standard = build_standard(a, b, c, opts);
    const Expr k = constant(0.5);
    BuilderOptions eopts;
    eopts.domain = box_with_grid(grid);
    exponential = build_exponential_family(neg(k), constant(0.0), 0.5 * pow(var(kXi), 2.0), eopts);
    damped = build_standard(constant(0.0), k, constant(0.0), eopts);
  }
};

void BM_ResidualField(benchmark::State& state, Execution exec) {
  const Fixture f(static_cast<int>(state.range(0)));
  for (auto _ : state) {
    benchmark::DoNotOptimize(el_residual_field(f.standard, f.ode, f.standard.domain, 1e-6, exec));
  }
  state.counters["samples"] = static_cast<double>(f.standard.domain.sample_points().size());
}

void BM_Equivalence(benchmark::State& state, Execution exec) {
  const Fixture f(static_cast<int>(state.range(0)));
  const DomainBox box = box_with_grid(static_cast<int>(state.range(0)));
  for (auto _ : state) {
    benchmark::DoNotOptimize(equivalence_check(f.damped, f.exponential, box, 1e-8, exec));
  }
}

}  // namespace

BENCHMARK_CAPTURE(BM_ResidualField, serial, Execution::kSerial)->Arg(7)->Arg(12)->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(BM_ResidualField, parallel, Execution::kParallel)->Arg(7)->Arg(12)->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(BM_Equivalence, serial, Execution::kSerial)->Arg(7)->Arg(20)->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(BM_Equivalence, parallel, Execution::kParallel)->Arg(7)->Arg(20)->Unit(benchmark::kMillisecond);

int main(int argc, char** argv) {
  configure_threads_from_env();
  benchmark::Initialize(&argc, argv);
  if (benchmark::ReportUnrecognizedArguments(argc, argv)) return 1;
  benchmark::RunSpecifiedBenchmarks();
  benchmark::Shutdown();
  return 0;
}
