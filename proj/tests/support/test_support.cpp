#include "test_support.hpp"

#include <algorithm>
#include <cmath>

#include "bmirl/occupancy.hpp"
#include "bmirl/random.hpp"

namespace bmirl::testing {

TabularMdp random_mdp(int n_states, int n_actions, double discount, std::uint64_t seed,
                      double reward_scale) {
  std::mt19937_64 gen(seed);
  std::uniform_real_distribution<double> unif(0.05, 1.0);
  std::normal_distribution<double> normal(0.0, reward_scale);

  TabularMdp mdp;
  mdp.n_states = n_states;
  mdp.n_actions = n_actions;
  mdp.discount = discount;
  mdp.transition.resize(n_states * n_actions, n_states);
  for (int r = 0; r < n_states * n_actions; ++r) {
    for (int k = 0; k < n_states; ++k) {
      const double u = unif(gen);
      mdp.transition(r, k) = u * u * u;
    }
    mdp.transition.row(r) /= mdp.transition.row(r).sum();
  }
  mdp.reward.resize(n_states, n_actions);
  for (int s = 0; s < n_states; ++s) {
    for (int a = 0; a < n_actions; ++a) mdp.reward(s, a) = normal(gen);
  }
  mdp.init_dist.resize(n_states);
  for (int s = 0; s < n_states; ++s) mdp.init_dist(s) = unif(gen);
  mdp.init_dist /= mdp.init_dist.sum();
  return mdp;
}

ThetaParams random_theta(int n_states, int n_actions, std::uint64_t seed, double scale,
                         RewardMode mode, double lambda) {
  std::mt19937_64 gen(seed);
  std::normal_distribution<double> normal(0.0, scale);
  ThetaParams theta = ThetaParams::zeros(n_states, n_actions, mode);
  for (Eigen::Index i = 0; i < theta.reward_logits.size(); ++i) {
    theta.reward_logits.data()[i] = normal(gen);
  }
  for (Eigen::Index i = 0; i < theta.dynamics_logits.size(); ++i) {
    theta.dynamics_logits.data()[i] = normal(gen);
  }
  theta.lambda = lambda;
  return theta;
}

Dataset sample_dataset(const TabularMdp& mdp, const MatrixXd& policy, int n_traj, int horizon,
                       std::uint64_t seed) {
  std::vector<Trajectory> trajs;
  for (int i = 0; i < n_traj; ++i) {
    Rng rng(seed, static_cast<std::uint64_t>(i));
    Trajectory tau;
    int s = rng.categorical(mdp.init_dist);
    tau.states.push_back(s);
    for (int t = 0; t < horizon; ++t) {
      const int a = rng.categorical(policy.row(s));
      s = rng.categorical(mdp.transition.row(mdp.row(s, a)));
      tau.actions.push_back(a);
      tau.states.push_back(s);
    }
    trajs.push_back(std::move(tau));
  }
  return make_dataset(std::move(trajs), mdp.n_states, mdp.n_actions);
}

SoftSolution smooth_solve(const TabularMdp& mdp) {
  const int sweeps = tolerance_horizon(mdp.discount, 1e-18) + 20;
  return soft_bellman_sweeps(mdp, VectorXd::Zero(mdp.n_states), sweeps);
}

SoftSolution smooth_solve(const ThetaParams& theta, double discount) {
  return smooth_solve(
      learner_mdp(theta, discount, VectorXd::Constant(theta.n_states(), 1.0 / theta.n_states())));
}

BranchExpectation enumerate_branches(const ThetaParams& theta, const SoftSolution& sol,
                                     const MatrixXd& start_pairs, int steps) {
  const int n_states = theta.n_states();
  const int n_actions = theta.n_actions();
  const MatrixXd p = theta.dynamics();
  BranchExpectation out{MatrixXd::Zero(n_states, n_actions),
                        MatrixXd::Zero(p.rows(), p.cols())};
  MatrixXd dist = start_pairs;
  double w = 1.0;
  for (int t = 0; t < steps; ++t) {
    VectorXd next = VectorXd::Zero(n_states);
    for (int s = 0; s < n_states; ++s) {
      for (int a = 0; a < n_actions; ++a) {
        const double m = dist(s, a);
        if (m == 0.0) continue;
        const int r = s * n_actions + a;
        double ev = 0.0;
        for (int k = 0; k < n_states; ++k) ev += p(r, k) * sol.v(k);
        for (int k = 0; k < n_states; ++k) {
          out.ev_dynamics_grad(r, k) += w * m * p(r, k) * (sol.v(k) - ev);
          next(k) += m * p(r, k);
        }
        out.visitation(s, a) += w * m;
      }
    }
    for (int s = 0; s < n_states; ++s) {
      for (int a = 0; a < n_actions; ++a) dist(s, a) = next(s) * sol.policy(s, a);
    }
    w *= sol.discount;
  }
  return out;
}

GradientVector finite_difference(const ThetaParams& theta,
                                 const std::function<double(const ThetaParams&)>& f, double step) {
  GradientVector g = GradientVector::zeros_like(theta);
  ThetaParams probe = theta;
  for (Eigen::Index i = 0; i < theta.reward_logits.size(); ++i) {
    const double x = theta.reward_logits.data()[i];
    probe.reward_logits.data()[i] = x + step;
    const double up = f(probe);
    probe.reward_logits.data()[i] = x - step;
    const double down = f(probe);
    probe.reward_logits.data()[i] = x;
    g.d_reward.data()[i] = (up - down) / (2.0 * step);
  }
  for (Eigen::Index i = 0; i < theta.dynamics_logits.size(); ++i) {
    const double x = theta.dynamics_logits.data()[i];
    probe.dynamics_logits.data()[i] = x + step;
    const double up = f(probe);
    probe.dynamics_logits.data()[i] = x - step;
    const double down = f(probe);
    probe.dynamics_logits.data()[i] = x;
    g.d_dynamics.data()[i] = (up - down) / (2.0 * step);
  }
  return g;
}

double max_relative_error(const GradientVector& a, const GradientVector& b, double floor) {
  double worst = 0.0;
  auto scan = [&](const MatrixXd& x, const MatrixXd& y) {
    for (Eigen::Index i = 0; i < x.size(); ++i) {
      const double xi = x.data()[i];
      const double yi = y.data()[i];
      const double denom = std::max({std::abs(xi), std::abs(yi), floor});
      worst = std::max(worst, std::abs(xi - yi) / denom);
    }
  };
  scan(a.d_reward, b.d_reward);
  scan(a.d_dynamics, b.d_dynamics);
  return worst;
}

double relative_norm_error(const GradientVector& a, const GradientVector& b, double floor) {
  return (a - b).norm() / std::max({a.norm(), b.norm(), floor});
}

double cosine(const GradientVector& a, const GradientVector& b) {
  return a.dot(b) / (a.norm() * b.norm());
}

}  // namespace bmirl::testing
