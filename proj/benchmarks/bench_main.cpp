#include <benchmark/benchmark.h>

#include <vector>

#include "bmirl/estimation.hpp"
#include "bmirl/gridworld.hpp"
#include "bmirl/occupancy.hpp"
#include "bmirl/sampling.hpp"
#include "bmirl/training.hpp"

namespace {

using namespace bmirl;

struct World {
  TabularMdp mdp;
  Dataset data;
};

World square(int side) {
  World w{build_gridworld(GridworldSpec::corner_to_corner(side, side)), {}};
  w.data = generate_expert_dataset(w.mdp, 100, 50, 0);
  return w;
}

void BM_SoftValueIteration(benchmark::State& state) {
  const World w = square(static_cast<int>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(soft_value_iteration(w.mdp).v);
}
BENCHMARK(BM_SoftValueIteration)->Arg(5)->Arg(10)->Arg(20);

void BM_Occupancy(benchmark::State& state) {
  const World w = square(static_cast<int>(state.range(0)));
  const MatrixXd policy = soft_value_iteration(w.mdp).policy;
  for (auto _ : state) benchmark::DoNotOptimize(occupancy_measure(w.mdp, policy).d);
}
BENCHMARK(BM_Occupancy)->Arg(5)->Arg(10)->Arg(20);

void BM_SurrogateGradient(benchmark::State& state) {
  const World w = square(static_cast<int>(state.range(0)));
  TrainConfig cfg;
  const ThetaParams theta = initial_theta(w.data, cfg);
  const SoftSolution sol = solve_policy(theta, w.mdp.discount);
  for (auto _ : state) benchmark::DoNotOptimize(surrogate_gradient(theta, sol, w.data));
}
BENCHMARK(BM_SurrogateGradient)->Arg(5)->Arg(10);

void BM_ReinforceBatch(benchmark::State& state) {
  const World w = square(5);
  TrainConfig cfg;
  const ThetaParams theta = initial_theta(w.data, cfg);
  const SoftSolution sol = solve_policy(theta, w.mdp.discount);
  std::vector<StateAction> starts;
  for (int i = 0; i < state.range(0); ++i) starts.push_back({i % 25, i % 4});
  for (auto _ : state) {
    const RolloutBatch batch =
        branch_rollouts(theta, sol, BranchOrigin::fake_branch, starts, 40, 1);
    benchmark::DoNotOptimize(reinforce_dynamics_grad(theta, sol, batch, {}).mean);
  }
}
BENCHMARK(BM_ReinforceBatch)->Arg(100)->Arg(1000);

void BM_TrainingIteration(benchmark::State& state) {
  const World w = square(5);
  TrainConfig cfg;
  cfg.outer_iters = 1;
  cfg.variant = static_cast<Variant>(state.range(0));
  cfg.lambda2 = 10.0;
  for (auto _ : state) benchmark::DoNotOptimize(train(w.mdp, w.data, cfg).final_theta);
}
BENCHMARK(BM_TrainingIteration)
    ->Arg(static_cast<int>(Variant::bm_irl))
    ->Arg(static_cast<int>(Variant::rm_irl))
    ->Arg(static_cast<int>(Variant::two_stage));

}  // namespace

BENCHMARK_MAIN();
