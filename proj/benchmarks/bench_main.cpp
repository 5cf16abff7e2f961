#include <benchmark/benchmark.h>

#include "defl/delay_model.hpp"
#include "defl/fl_sim.hpp"
#include "defl/planner.hpp"

using namespace defl;

namespace {

PlanInputs default_inputs() {
  PlanInputs in;
  in.t_cm = 0.005;
  in.ratios.assign(10, 0.015);
  in.learning = LearningParams::from_alpha(0.01, 1.0, 1.0, 1.0, 10);
  return in;
}

void BM_objective_eval(benchmark::State& state) {
  const PlanInputs in = default_inputs();
  double b = 1.0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(objective_eval(b, 0.5, in));
    b = b >= 1024.0 ? 1.0 : b + 1.0;
  }
}
BENCHMARK(BM_objective_eval);

void BM_closed_form_plan(benchmark::State& state) {
  const PlanInputs in = default_inputs();
  for (auto _ : state) benchmark::DoNotOptimize(closed_form_plan(in));
}
BENCHMARK(BM_closed_form_plan);

void BM_oracle_plan(benchmark::State& state) {
  const PlanInputs in = default_inputs();
  OracleGrid grid;
  grid.b_points = static_cast<int>(state.range(0));
  grid.alpha_points = static_cast<int>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(oracle_plan(in, grid));
}
BENCHMARK(BM_oracle_plan)->Arg(50)->Arg(200);

void BM_sim_round(benchmark::State& state) {
  const SyntheticTask task = make_quadratic_task(10, 0.5, 1.0, 1.0, 12345);
  SimConfig config;
  config.devices = 10;
  config.local_steps = state.range(0);
  config.rounds = 1;
  config.batch_size = 4;
  config.eta = 0.05;
  config.seed = 1;
  for (auto _ : state) benchmark::DoNotOptimize(run_defl(task, config));
}
BENCHMARK(BM_sim_round)->Arg(1)->Arg(10)->Arg(100);

}  // namespace

BENCHMARK_MAIN();
