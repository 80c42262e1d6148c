#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "bmirl/estimation.hpp"
#include "bmirl/gridworld.hpp"
#include "bmirl/sampling.hpp"
#include "bmirl/training.hpp"
#include "test_support.hpp"

namespace bmirl {
namespace {

using testing::random_theta;

std::vector<StateAction> cycle_pairs(int n_states, int n_actions, int n) {
  std::vector<StateAction> out;
  out.reserve(n);
  for (int i = 0; i < n; ++i) {
    const int p = i % (n_states * n_actions);
    out.push_back({p / n_actions, p % n_actions});
  }
  return out;
}

MatrixXd start_weights(const std::vector<StateAction>& starts, int n_states, int n_actions) {
  MatrixXd w = MatrixXd::Zero(n_states, n_actions);
  for (const StateAction& sa : starts) w(sa.state, sa.action) += 1.0;
  return w / static_cast<double>(starts.size());
}

// Every component within 3 standard errors; exactly-zero-variance components
// must match to rounding.
void expect_within_3se(const MatrixXd& mean, const MatrixXd& se, const MatrixXd& exact) {
  for (Eigen::Index i = 0; i < mean.size(); ++i) {
    const double diff = std::abs(mean.data()[i] - exact.data()[i]);
    EXPECT_LE(diff, 3.0 * se.data()[i] + 1e-12)
        << "component " << i << " mean " << mean.data()[i] << " exact " << exact.data()[i];
  }
}

TEST(BranchRollouts, DeterministicForSeed) {
  const ThetaParams theta = random_theta(4, 2, 1);
  const SoftSolution sol = solve_policy(theta, 0.9);
  const auto starts = cycle_pairs(4, 2, 50);
  for (BranchOrigin origin : {BranchOrigin::real_branch, BranchOrigin::fake_branch}) {
    const RolloutBatch a = branch_rollouts(theta, sol, origin, starts, 12, 77);
    const RolloutBatch b = branch_rollouts(theta, sol, origin, starts, 12, 77);
    EXPECT_EQ(a.trajectories, b.trajectories);
    EXPECT_EQ(a.branch_points, b.branch_points);
  }
}

TEST(BranchRollouts, StartAtBranchPointWithFixedLength) {
  const ThetaParams theta = random_theta(4, 2, 2);
  const SoftSolution sol = solve_policy(theta, 0.9);
  const auto starts = cycle_pairs(4, 2, 16);
  const RolloutBatch real = branch_rollouts(theta, sol, BranchOrigin::real_branch, starts, 1, 3);
  ASSERT_EQ(real.trajectories.size(), 16u);
  for (std::size_t i = 0; i < starts.size(); ++i) {
    const Trajectory& tau = real.trajectories[i];
    EXPECT_EQ(tau.states.size(), 2u);
    EXPECT_EQ(tau.actions.size(), 1u);
    EXPECT_EQ(tau.states[0], starts[i].state);
    EXPECT_EQ(tau.actions[0], starts[i].action);
  }
  const RolloutBatch fake = branch_rollouts(theta, sol, BranchOrigin::fake_branch, starts, 7, 3);
  for (std::size_t i = 0; i < starts.size(); ++i) {
    EXPECT_EQ(fake.trajectories[i].states[0], starts[i].state);
    EXPECT_EQ(fake.trajectories[i].actions[0], fake.branch_points[i].action);
    EXPECT_EQ(fake.trajectories[i].length(), 7);
  }
}

TEST(BranchRollouts, DeterministicDynamicsFixStates) {
  const GridworldSpec spec = GridworldSpec::corner_to_corner(3, 3);
  const TabularMdp mdp = build_gridworld(spec);
  const ThetaParams theta = theta_from_mdp(mdp, target_logits(spec), 1.0);
  const SoftSolution sol = solve_policy(theta, mdp.discount);
  const auto starts = cycle_pairs(9, 4, 40);
  const RolloutBatch batch =
      branch_rollouts(theta, sol, BranchOrigin::real_branch, starts, 20, 5);
  for (const Trajectory& tau : batch.trajectories) {
    for (int t = 0; t < tau.length(); ++t) {
      EXPECT_EQ(tau.states[t + 1], successor(spec, tau.states[t], kMoves[tau.actions[t]]));
    }
  }
  // Score of a sure successor is zero, so the estimator stays finite.
  ReinforceOptions opts;
  const GradientEstimate g = reinforce_dynamics_grad(theta, sol, batch, opts);
  EXPECT_TRUE(g.mean.all_finite());
}

TEST(BranchRollouts, SuccessorFrequenciesMatchModel) {
  const ThetaParams theta = random_theta(5, 2, 4);
  const SoftSolution sol = solve_policy(theta, 0.9);
  const int n = 100000;
  const std::vector<StateAction> starts(n, StateAction{2, 1});
  const RolloutBatch batch = branch_rollouts(theta, sol, BranchOrigin::real_branch, starts, 1, 9);
  VectorXd freq = VectorXd::Zero(5);
  for (const Trajectory& tau : batch.trajectories) freq(tau.states[1]) += 1.0;
  freq /= n;
  const auto p = theta.dynamics().row(2 * 2 + 1);
  for (int k = 0; k < 5; ++k) {
    const double se = std::sqrt(p(k) * (1.0 - p(k)) / n);
    EXPECT_LE(std::abs(freq(k) - p(k)), 3.0 * se) << "successor " << k;
  }
}

TEST(Reinforce, NormalizationNeedsTwoTransitions) {
  const ThetaParams theta = random_theta(3, 2, 5);
  const SoftSolution sol = solve_policy(theta, 0.9);
  const std::vector<StateAction> one{{0, 0}};
  const RolloutBatch batch = branch_rollouts(theta, sol, BranchOrigin::real_branch, one, 1, 1);
  EXPECT_THROW(reinforce_dynamics_grad(theta, sol, batch), std::invalid_argument);
  ReinforceOptions off;
  off.normalize = false;
  EXPECT_NO_THROW(reinforce_dynamics_grad(theta, sol, batch, off));
}

TEST(Reinforce, NormalizedAdvantagesHaveZeroMeanUnitScale) {
  const ThetaParams theta = random_theta(4, 3, 6);
  const SoftSolution sol = solve_policy(theta, 0.9);
  const auto starts = cycle_pairs(4, 3, 200);
  const RolloutBatch batch = branch_rollouts(theta, sol, BranchOrigin::real_branch, starts, 5, 2);
  const auto adv = rollout_advantages(theta, sol, batch, ReinforceOptions{});
  double sum = 0.0;
  double sum_sq = 0.0;
  int n = 0;
  for (const auto& row : adv) {
    for (double x : row) {
      sum += x;
      sum_sq += x * x;
      ++n;
    }
  }
  EXPECT_NEAR(sum / n, 0.0, 1e-12);
  EXPECT_NEAR(sum_sq / n, 1.0, 1e-6);
}

TEST(Reinforce, UnbiasedWithoutNormalization) {
  for (std::uint64_t seed = 0; seed < 3; ++seed) {
    const ThetaParams theta = random_theta(3, 2, 20 + seed, 1.0, RewardMode::table);
    const SoftSolution sol = solve_policy(theta, 0.7);
    const auto starts = cycle_pairs(3, 2, 20000);
    const int steps = 8;
    const RolloutBatch batch =
        branch_rollouts(theta, sol, BranchOrigin::real_branch, starts, steps, 100 + seed);
    ReinforceOptions opts;
    opts.normalize = false;
    const GradientEstimate est = reinforce_dynamics_grad(theta, sol, batch, opts);
    const auto exact = testing::enumerate_branches(theta, sol, start_weights(starts, 3, 2), steps);
    expect_within_3se(est.mean.d_dynamics, est.std_error.d_dynamics, exact.ev_dynamics_grad);
  }
}

TEST(Reinforce, ConstantValueGivesZeroMean) {
  // A zero reward table makes V constant whatever the dynamics.
  ThetaParams theta = random_theta(4, 2, 30, 1.0, RewardMode::table);
  theta.reward_logits.setZero();
  const SoftSolution sol = solve_policy(theta, 0.8);
  ASSERT_LE(sol.v.maxCoeff() - sol.v.minCoeff(), 1e-9);
  const auto starts = cycle_pairs(4, 2, 20000);
  const RolloutBatch batch = branch_rollouts(theta, sol, BranchOrigin::real_branch, starts, 5, 8);
  ReinforceOptions opts;
  opts.normalize = false;
  opts.baseline = Baseline::zero;
  const GradientEstimate est = reinforce_dynamics_grad(theta, sol, batch, opts);
  expect_within_3se(est.mean.d_dynamics, est.std_error.d_dynamics,
                    MatrixXd::Zero(est.mean.d_dynamics.rows(), est.mean.d_dynamics.cols()));
}

TEST(Reinforce, BaselineDoesNotChangeExpectation) {
  const ThetaParams theta = random_theta(3, 2, 40);
  const SoftSolution sol = solve_policy(theta, 0.7);
  const auto starts = cycle_pairs(3, 2, 30000);
  const int steps = 6;
  const RolloutBatch batch = branch_rollouts(theta, sol, BranchOrigin::real_branch, starts, steps, 4);
  const auto exact = testing::enumerate_branches(theta, sol, start_weights(starts, 3, 2), steps);

  ReinforceOptions opts;
  opts.normalize = false;
  opts.baseline = Baseline::custom;
  opts.custom_baseline = random_theta(3, 2, 41, 3.0, RewardMode::table).reward_logits;
  for (Baseline b : {Baseline::zero, Baseline::q_minus_r, Baseline::custom}) {
    opts.baseline = b;
    const GradientEstimate est = reinforce_dynamics_grad(theta, sol, batch, opts);
    expect_within_3se(est.mean.d_dynamics, est.std_error.d_dynamics, exact.ev_dynamics_grad);
  }
}

TEST(Reinforce, ValueBaselineReducesVarianceOnGridworld) {
  const GridworldSpec spec = GridworldSpec::corner_to_corner(5, 5);
  const TabularMdp mdp = build_gridworld(spec);
  const Dataset data = generate_expert_dataset(mdp, 100, 50, 0);
  const ThetaParams theta = initial_theta(data, TrainConfig{});
  const SoftSolution sol = solve_policy(theta, mdp.discount);
  std::vector<StateAction> starts;
  for (const Trajectory& tau : data.trajectories) {
    for (int t = 0; t < tau.length(); ++t) starts.push_back({tau.states[t], tau.actions[t]});
  }
  const RolloutBatch batch = branch_rollouts(theta, sol, BranchOrigin::real_branch, starts, 10, 6);
  ReinforceOptions opts;
  opts.normalize = false;
  opts.baseline = Baseline::q_minus_r;
  const double se_value = reinforce_dynamics_grad(theta, sol, batch, opts).std_error.norm();
  opts.baseline = Baseline::zero;
  const double se_zero = reinforce_dynamics_grad(theta, sol, batch, opts).std_error.norm();
  EXPECT_LE(se_value, se_zero);
}

TEST(RewardGrad, MatchesEnumeratedVisitation) {
  const ThetaParams theta = random_theta(3, 2, 50, 1.0, RewardMode::table);
  const SoftSolution sol = solve_policy(theta, 0.8);
  const auto starts = cycle_pairs(3, 2, 30000);
  const int steps = 6;
  const RolloutBatch batch = branch_rollouts(theta, sol, BranchOrigin::real_branch, starts, steps, 9);
  const GradientEstimate est = discounted_reward_grad(theta, sol, batch);
  const auto exact = testing::enumerate_branches(theta, sol, start_weights(starts, 3, 2), steps);
  expect_within_3se(est.mean.d_reward, est.std_error.d_reward, exact.visitation);
}

}  // namespace
}  // namespace bmirl
