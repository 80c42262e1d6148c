#include <gtest/gtest.h>

#include <cmath>
#include <fstream>

#include "bmirl/errors.hpp"
#include "bmirl/gridworld.hpp"
#include "bmirl/mdp.hpp"
#include "bmirl/occupancy.hpp"
#include "bmirl/random.hpp"
#include "bmirl/soft_solver.hpp"
#include "json.hpp"
#include "test_support.hpp"

namespace bmirl {
namespace {

TabularMdp single_state(int n_actions, double reward, double gamma) {
  TabularMdp mdp;
  mdp.n_states = 1;
  mdp.n_actions = n_actions;
  mdp.transition = MatrixXd::Ones(n_actions, 1);
  mdp.reward = MatrixXd::Constant(1, n_actions, reward);
  mdp.init_dist = VectorXd::Ones(1);
  mdp.discount = gamma;
  return mdp;
}

TEST(Validate, RejectsBadMdps) {
  TabularMdp mdp = single_state(2, 0.0, 0.9);
  EXPECT_NO_THROW(validate(mdp));

  TabularMdp bad = mdp;
  bad.discount = 1.0;
  EXPECT_THROW(validate(bad), std::invalid_argument);

  bad = mdp;
  bad.transition(0, 0) = 0.5;
  EXPECT_THROW(validate(bad), std::invalid_argument);

  bad = mdp;
  bad.init_dist(0) = 2.0;
  EXPECT_THROW(validate(bad), std::invalid_argument);

  bad = mdp;
  bad.reward.resize(2, 2);
  EXPECT_THROW(validate(bad), std::invalid_argument);
}

TEST(SoftValueIteration, SingleStateSingleAction) {
  const SoftSolution sol = soft_value_iteration(single_state(1, 0.0, 0.9));
  EXPECT_NEAR(sol.v(0), 0.0, 1e-12);
  EXPECT_NEAR(sol.q(0, 0), 0.0, 1e-12);
  EXPECT_NEAR(sol.policy(0, 0), 1.0, 1e-15);
}

TEST(SoftValueIteration, SingleStateTwoActions) {
  const SoftSolution sol = soft_value_iteration(single_state(2, 0.0, 0.9));
  EXPECT_NEAR(sol.v(0), std::log(2.0) / 0.1, 1e-8);
  EXPECT_NEAR(sol.policy(0, 0), 0.5, 1e-12);
  EXPECT_NEAR(sol.policy(0, 1), 0.5, 1e-12);
}

TEST(SoftValueIteration, SolutionInvariants) {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const TabularMdp mdp = testing::random_mdp(6, 3, 0.9, seed);
    const SoftSolution sol = soft_value_iteration(mdp);
    EXPECT_LE(sol.bellman_residual, 1e-10);
    for (int s = 0; s < mdp.n_states; ++s) {
      EXPECT_NEAR(sol.v(s), log_sum_exp(sol.q.row(s)), 1e-12);
      for (int a = 0; a < mdp.n_actions; ++a) {
        EXPECT_NEAR(sol.policy(s, a), std::exp(sol.q(s, a) - sol.v(s)), 1e-12);
      }
    }
    // Independent residual.
    const MatrixXd target = mdp.reward + mdp.discount * expected_next_value(mdp, sol.v);
    EXPECT_LE((sol.q - target).cwiseAbs().maxCoeff(), 1e-10);
  }
}

TEST(SoftValueIteration, ContractionOfSuccessiveDifferences) {
  const TabularMdp mdp = testing::random_mdp(5, 3, 0.8, 11);
  std::vector<double> trace;
  SolverOptions opts;
  opts.delta_trace = &trace;
  soft_value_iteration(mdp, opts);
  ASSERT_GT(trace.size(), 3u);
  for (std::size_t k = 1; k < trace.size(); ++k) {
    EXPECT_LE(trace[k], mdp.discount * trace[k - 1] + 1e-12) << "sweep " << k;
  }
}

TEST(SoftValueIteration, ValueMagnitudeBound) {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const TabularMdp mdp = testing::random_mdp(4, 3, 0.95, seed, 3.0);
    const SoftSolution sol = soft_value_iteration(mdp);
    const double r_max = mdp.reward.cwiseAbs().maxCoeff() + std::log(3.0);
    EXPECT_LE(sol.v.cwiseAbs().maxCoeff(), r_max / (1.0 - mdp.discount) + 1e-9);
  }
}

TEST(SoftValueIteration, NonConvergenceThrowsWithResidual) {
  const TabularMdp mdp = testing::random_mdp(4, 2, 0.99, 3);
  try {
    soft_value_iteration(mdp, 1e-12, 3);
    FAIL() << "expected ConvergenceError";
  } catch (const ConvergenceError& e) {
    EXPECT_GT(e.residual(), 1e-12);
    EXPECT_EQ(e.iterations(), 3);
  }
}

TEST(SoftValueIteration, WarmStartReachesSameFixedPoint) {
  const TabularMdp mdp = testing::random_mdp(5, 2, 0.9, 21);
  const SoftSolution cold = soft_value_iteration(mdp);
  const VectorXd warm_v = cold.v + VectorXd::Constant(5, 0.3);
  const SoftSolution warm = soft_value_iteration(mdp, {}, &warm_v);
  // Each stops within gamma / (1 - gamma) * tol of the fixed point.
  EXPECT_LE((cold.v - warm.v).cwiseAbs().maxCoeff(), 2.0 * 9.0 * 1e-10 + 1e-12);
}

TEST(SoftValueIteration, GridworldMatchesIndependentOracle) {
  std::ifstream in(std::string(BMIRL_TEST_DATA_DIR) + "/gridworld_expert_5x5.json");
  ASSERT_TRUE(in.good());
  const nlohmann::json golden = nlohmann::json::parse(in);

  const GridworldSpec spec = GridworldSpec::corner_to_corner(5, 5);
  const TabularMdp mdp = build_gridworld(spec);
  const SoftSolution sol = soft_value_iteration(mdp);
  EXPECT_LE(sol.bellman_residual, 1e-10);
  for (int s = 0; s < 25; ++s) {
    EXPECT_NEAR(sol.v(s), golden["v"][s].get<double>(), 1e-8);
    for (int a = 0; a < 4; ++a) {
      EXPECT_NEAR(sol.policy(s, a), golden["policy"][s][a].get<double>(), 1e-8);
    }
  }
}

TEST(Occupancy, SingleStateMass) {
  const TabularMdp mdp = single_state(3, 0.0, 0.9);
  MatrixXd policy(1, 3);
  policy << 0.2, 0.3, 0.5;
  const OccupancyMeasure occ = occupancy_measure(mdp, policy);
  EXPECT_NEAR(occ.rho.sum(), 10.0, 1e-10);
  EXPECT_NEAR(occ.d.sum(), 1.0, 1e-12);
  EXPECT_NEAR(occ.rho(0, 2), 5.0, 1e-10);
}

TEST(Occupancy, SymmetricChainGivesUniformD) {
  TabularMdp mdp;
  mdp.n_states = 2;
  mdp.n_actions = 2;
  mdp.transition.resize(4, 2);
  mdp.transition << 1, 0, 0, 1, 0, 1, 1, 0;  // action 0 stays, 1 switches
  mdp.reward = MatrixXd::Zero(2, 2);
  mdp.init_dist = VectorXd::Constant(2, 0.5);
  mdp.discount = 0.9;
  const OccupancyMeasure occ = occupancy_measure(mdp, MatrixXd::Constant(2, 2, 0.5));
  for (int i = 0; i < 4; ++i) EXPECT_NEAR(occ.d.data()[i], 0.25, 1e-12);
}

TEST(Occupancy, DenseAndIterativeAgreeWithPowerSeries) {
  for (std::uint64_t seed = 0; seed < 4; ++seed) {
    const TabularMdp mdp = testing::random_mdp(6, 3, 0.85, seed);
    const MatrixXd policy = soft_value_iteration(mdp).policy;
    OccupancyOptions dense;
    dense.method = OccupancyMethod::dense;
    OccupancyOptions iter;
    iter.method = OccupancyMethod::iterative;
    const MatrixXd a = occupancy_measure(mdp, policy, dense).rho;
    const MatrixXd b = occupancy_measure(mdp, policy, iter).rho;
    const int horizon = tolerance_horizon(mdp.discount);
    const MatrixXd c = truncated_occupancy(mdp, policy, mdp.init_dist, horizon).rho;
    EXPECT_LE((a - b).cwiseAbs().maxCoeff(), 1e-8);
    EXPECT_LE((a - c).cwiseAbs().maxCoeff(), 1e-8);
    EXPECT_GE(a.minCoeff(), 0.0);
    EXPECT_NEAR(a.sum(), 1.0 / (1.0 - mdp.discount), 1e-9);
  }
}

TEST(Occupancy, MatchesMonteCarlo) {
  const TabularMdp mdp = testing::random_mdp(6, 3, 0.8, 5);
  const MatrixXd policy = soft_value_iteration(mdp).policy;
  const MatrixXd exact = occupancy_measure(mdp, policy).rho;

  const int n = 100000;
  const int horizon = tolerance_horizon(mdp.discount, 1e-9);
  MatrixXd sum = MatrixXd::Zero(6, 3);
  MatrixXd sum_sq = MatrixXd::Zero(6, 3);
  MatrixXd per = MatrixXd::Zero(6, 3);
  for (int i = 0; i < n; ++i) {
    Rng rng(99, i);
    per.setZero();
    int s = rng.categorical(mdp.init_dist);
    double w = 1.0;
    for (int t = 0; t < horizon; ++t) {
      const int a = rng.categorical(policy.row(s));
      per(s, a) += w;
      s = rng.categorical(mdp.transition.row(mdp.row(s, a)));
      w *= mdp.discount;
    }
    sum += per;
    sum_sq += per.cwiseAbs2();
  }
  const MatrixXd mean = sum / n;
  const MatrixXd se = ((sum_sq / n - mean.cwiseAbs2()) / (n - 1.0)).cwiseSqrt();
  for (int i = 0; i < mean.size(); ++i) {
    EXPECT_LE(std::abs(mean.data()[i] - exact.data()[i]), 3.0 * se.data()[i] + 1e-12)
        << "component " << i;
  }
}

TEST(ConditionalOccupancy, SingleStateSingleAction) {
  const OccupancyMeasure occ =
      conditional_occupancy(single_state(1, 0.0, 0.5), MatrixXd::Ones(1, 1), 0, 0);
  EXPECT_NEAR(occ.rho(0, 0), 2.0, 1e-12);
}

TEST(ConditionalOccupancy, AbsorbingGoal) {
  // State 1 is absorbing; from state 0 action 0 goes to 1.
  TabularMdp mdp;
  mdp.n_states = 2;
  mdp.n_actions = 2;
  mdp.transition.resize(4, 2);
  mdp.transition << 0, 1, 1, 0, 0, 1, 0, 1;
  mdp.reward = MatrixXd::Zero(2, 2);
  mdp.init_dist = VectorXd::Unit(2, 0);
  mdp.discount = 0.9;
  MatrixXd policy(2, 2);
  policy << 1, 0, 1, 0;  // "stay" in the goal is action 0
  const OccupancyMeasure occ = conditional_occupancy(mdp, policy, 0, 0);
  EXPECT_NEAR(occ.rho(0, 0), 1.0, 1e-12);
  EXPECT_NEAR(occ.rho(0, 1), 0.0, 1e-12);
  EXPECT_NEAR(occ.rho(1, 0), 0.9 / 0.1, 1e-10);
  EXPECT_NEAR(occ.rho(1, 1), 0.0, 1e-12);
}

TEST(ConditionalOccupancy, MatrixRowsMatchSingleSolves) {
  const TabularMdp mdp = testing::random_mdp(4, 3, 0.9, 8);
  const MatrixXd policy = soft_value_iteration(mdp).policy;
  const MatrixXd m = conditional_occupancy_matrix(mdp, policy);
  for (int s = 0; s < 4; ++s) {
    for (int a = 0; a < 3; ++a) {
      const MatrixXd rho = conditional_occupancy(mdp, policy, s, a).rho;
      EXPECT_NEAR(rho.sum(), 10.0, 1e-9);
      for (int s2 = 0; s2 < 4; ++s2) {
        for (int a2 = 0; a2 < 3; ++a2) {
          EXPECT_NEAR(m(mdp.row(s, a), mdp.row(s2, a2)), rho(s2, a2), 1e-9);
        }
      }
      const MatrixXd trunc =
          truncated_conditional_occupancy(mdp, policy, s, a, tolerance_horizon(0.9, 1e-12));
      EXPECT_LE((trunc - rho).cwiseAbs().maxCoeff(), 1e-9);
    }
  }
}

TEST(ConditionalOccupancy, MatchesMonteCarlo) {
  const TabularMdp mdp = testing::random_mdp(4, 2, 0.7, 12);
  const MatrixXd policy = soft_value_iteration(mdp).policy;
  const MatrixXd exact = conditional_occupancy(mdp, policy, 2, 1).rho;
  const int n = 100000;
  const int horizon = tolerance_horizon(mdp.discount, 1e-9);
  MatrixXd sum = MatrixXd::Zero(4, 2);
  MatrixXd sum_sq = MatrixXd::Zero(4, 2);
  MatrixXd per(4, 2);
  for (int i = 0; i < n; ++i) {
    Rng rng(5, i);
    per.setZero();
    int s = 2;
    int a = 1;
    double w = 1.0;
    for (int t = 0; t < horizon; ++t) {
      if (t > 0) a = rng.categorical(policy.row(s));
      per(s, a) += w;
      s = rng.categorical(mdp.transition.row(mdp.row(s, a)));
      w *= mdp.discount;
    }
    sum += per;
    sum_sq += per.cwiseAbs2();
  }
  const MatrixXd mean = sum / n;
  const MatrixXd se = ((sum_sq / n - mean.cwiseAbs2()) / (n - 1.0)).cwiseSqrt();
  for (int i = 0; i < mean.size(); ++i) {
    EXPECT_LE(std::abs(mean.data()[i] - exact.data()[i]), 3.0 * se.data()[i] + 1e-12);
  }
}

TEST(Occupancy, RejectsInvalidPolicy) {
  const TabularMdp mdp = testing::random_mdp(3, 2, 0.9, 1);
  EXPECT_THROW(occupancy_measure(mdp, MatrixXd::Constant(3, 2, 0.7)), std::invalid_argument);
  EXPECT_THROW(conditional_occupancy(mdp, MatrixXd::Constant(3, 2, 0.5), 3, 0),
               std::out_of_range);
}

TEST(Horizons, ToleranceAndHeuristic) {
  EXPECT_EQ(tolerance_horizon(0.5, 1e-9), 30);  // 2^-30 < 1e-9 <= 2^-29
  EXPECT_EQ(heuristic_horizon(0.7), 3);
  EXPECT_EQ(heuristic_horizon(0.9), 10);
  EXPECT_EQ(heuristic_horizon(0.5), 2);
}

TEST(DiscountedReturn, ClosedForms) {
  EXPECT_NEAR(discounted_return(single_state(1, 1.0, 0.9), MatrixXd::Ones(1, 1)), 10.0, 1e-10);
  EXPECT_NEAR(discounted_return(single_state(2, 0.0, 0.9), MatrixXd::Constant(1, 2, 0.5)),
              std::log(2.0) / 0.1, 1e-10);
  EXPECT_NEAR(discounted_reward_return(single_state(2, 1.0, 0.9), MatrixXd::Constant(1, 2, 0.5)),
              10.0, 1e-10);
}

TEST(DiscountedReturn, SoftOptimalEqualsInitialValue) {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const TabularMdp mdp = testing::random_mdp(6, 3, 0.9, seed);
    const SoftSolution sol = soft_value_iteration(mdp);
    EXPECT_NEAR(discounted_return(mdp, sol.policy), mdp.init_dist.dot(sol.v), 1e-8);
  }
}

}  // namespace
}  // namespace bmirl
