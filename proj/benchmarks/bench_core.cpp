#include <benchmark/benchmark.h>

#include "zomax/oracles.hpp"
#include "zomax/problems.hpp"
#include "zomax/solvers.hpp"

namespace {

void BM_MetricSample(benchmark::State& state) {
  const auto metric =
      zomax::MetricMatrix::identity(state.range(0), state.range(0));
  zomax::RngStream stream(42);
  for (auto _ : state) {
    benchmark::DoNotOptimize(metric.sample(stream));
  }
}
BENCHMARK(BM_MetricSample)->Arg(8)->Arg(64)->Arg(256);

void BM_AveragedOracleRls(benchmark::State& state) {
  const auto problem = zomax::random_rls_problem(30, 50, 5.0, 7);
  zomax::OracleConfig cfg = zomax::OracleConfig::defaults(50, 30);
  cfg.mu = zomax::MuSchedule::constant(1e-5);
  cfg.samples_per_call = zomax::SampleSchedule::constant(state.range(0));
  const zomax::Rng rng(11);
  const auto z = zomax::JointPoint::Zero(50, 30);
  const zomax::Objective f = [&problem](const zomax::JointPoint& p) {
    return problem.evaluate(p);
  };
  long long k = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(zomax::averaged_oracle(f, z, cfg, rng, k++));
  }
}
BENCHMARK(BM_AveragedOracleRls)->Arg(1)->Arg(10)->Arg(100);

void BM_LaneMergingRollout(benchmark::State& state) {
  zomax::LaneMergingSpec spec;
  spec.control_points = static_cast<int>(state.range(0));
  spec.dt = 20.0 / static_cast<double>(state.range(0));
  const auto controls = zomax::JointPoint::Zero(2 * spec.control_points,
                                                spec.control_points);
  for (auto _ : state) {
    benchmark::DoNotOptimize(zomax::lane_merging_rollout(spec, controls));
  }
}
BENCHMARK(BM_LaneMergingRollout)->Arg(20)->Arg(50);

void BM_ZoegIterationToyF1(benchmark::State& state) {
  const auto problem = zomax::toy_f1();
  zomax::SolverConfig cfg;
  cfg.variant = zomax::SolverVariant::ZOEG;
  cfg.start = zomax::JointPoint::Scalars(5.0, -7.0);
  cfg.h1 = zomax::StepSchedule::constant(2e-3);
  cfg.h2 = zomax::StepSchedule::constant(1e-3);
  cfg.iterations = 1000;
  cfg.record_every = 1000;
  cfg.oracle = zomax::OracleConfig::defaults(1, 1);
  for (auto _ : state) {
    benchmark::DoNotOptimize(zomax::run_zoeg(problem, cfg));
  }
}
BENCHMARK(BM_ZoegIterationToyF1);

}  // namespace

BENCHMARK_MAIN();
