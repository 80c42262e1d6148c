#include "bmirl/analysis.hpp"

#include <cmath>
#include <stdexcept>

#include "bmirl/estimation.hpp"
#include "bmirl/occupancy.hpp"

namespace bmirl {
namespace {

constexpr double kInnerTol = 1e-12;

SoftSolution tight_solve(const ThetaParams& theta, double discount) {
  SolverOptions opts;
  opts.tol = kInnerTol;
  return solve_policy(theta, discount, opts);
}

void check_shapes(const ThetaParams& theta, const TabularMdp& mdp_true,
                  const MatrixXd& expert_policy) {
  validate(theta);
  validate(mdp_true);
  if (theta.n_states() != mdp_true.n_states || theta.n_actions() != mdp_true.n_actions) {
    throw std::invalid_argument("analysis: theta and MDP disagree on S or A");
  }
  if (expert_policy.rows() != mdp_true.n_states || expert_policy.cols() != mdp_true.n_actions) {
    throw std::invalid_argument("analysis: expert policy must be S x A");
  }
}

DecompositionReport decompose(const ThetaParams& theta, const TabularMdp& mdp_true,
                              const MatrixXd& rho, const VectorXd& start) {
  const SoftSolution sol = tight_solve(theta, mdp_true.discount);
  const double gamma = mdp_true.discount;
  const TabularMdp model = learner_mdp(theta, gamma, mdp_true.init_dist);

  const MatrixXd log_pi = sol.q.colwise() - sol.v;
  const MatrixXd ev_model = expected_next_value(model, sol.v);
  const MatrixXd ev_true = expected_next_value(mdp_true, sol.v);

  DecompositionReport rep;
  rep.discounted_loglik = (rho.array() * log_pi.array()).sum();
  rep.ell_theta = (rho.array() * model.reward.array()).sum() - start.dot(sol.v);
  rep.t1 = gamma * (rho.array() * (ev_model - ev_true).array()).sum();
  rep.residual = std::abs(rep.discounted_loglik - (rep.ell_theta + rep.t1));

  const double mass = rho.sum();
  if (mass > 0.0) {
    const MatrixXd kl = row_kl(mdp_true.transition, model.transition, mdp_true.n_actions);
    rep.epsilon_kl = (rho.array() * kl.array()).sum() / mass;
  }
  return rep;
}

}  // namespace

MatrixXd row_kl(const MatrixXd& p, const MatrixXd& q, int n_actions) {
  const int n_states = static_cast<int>(p.cols());
  MatrixXd out = MatrixXd::Zero(n_states, n_actions);
  for (int s = 0; s < n_states; ++s) {
    for (int a = 0; a < n_actions; ++a) {
      const int r = s * n_actions + a;
      double kl = 0.0;
      for (int k = 0; k < n_states; ++k) {
        const double pk = p(r, k);
        if (pk > 0.0) {
          kl += pk * (std::log(pk) - std::log(q(r, k)));
        }
      }
      out(s, a) = std::max(kl, 0.0);
    }
  }
  return out;
}

double reward_bound(const MatrixXd& reward) {
  return reward.cwiseAbs().maxCoeff() + std::log(static_cast<double>(reward.cols()));
}

double t1_bound_value(double gamma, double r_max, double eps) {
  const double h = 1.0 - gamma;
  return gamma * r_max / (h * h) * std::sqrt(2.0 * std::max(eps, 0.0));
}

DecompositionReport decompose_likelihood(const ThetaParams& theta, const TabularMdp& mdp_true,
                                         const MatrixXd& expert_policy) {
  check_shapes(theta, mdp_true, expert_policy);
  const MatrixXd rho = occupancy_measure(mdp_true, expert_policy).rho;
  return decompose(theta, mdp_true, rho, mdp_true.init_dist);
}

DecompositionReport decompose_likelihood_empirical(const ThetaParams& theta,
                                                   const TabularMdp& mdp_true,
                                                   const Dataset& data) {
  validate(theta);
  if (data.trajectories.empty()) {
    throw std::invalid_argument("decompose_likelihood_empirical: empty dataset");
  }
  VectorXd start = VectorXd::Zero(data.n_states);
  for (const Trajectory& tau : data.trajectories) start(tau.states.front()) += 1.0;
  start /= static_cast<double>(data.trajectories.size());
  return decompose(theta, mdp_true, empirical_discounted_occupancy(data, mdp_true.discount), start);
}

double t1_bound(const ThetaParams& theta, const TabularMdp& mdp_true,
                const MatrixXd& expert_policy) {
  const DecompositionReport rep = decompose_likelihood(theta, mdp_true, expert_policy);
  return t1_bound_value(mdp_true.discount, reward_bound(theta.reward()), rep.epsilon_kl);
}

double performance_bound_value(double eps_policy, double eps_dynamics, double c, double r_max,
                               double gamma) {
  const double h = 1.0 - gamma;
  return eps_policy / h +
         gamma * (c + 1.0) * r_max / (h * h) * std::sqrt(2.0 * std::max(eps_dynamics, 0.0));
}

BoundReport performance_bound(const ThetaParams& theta, const TabularMdp& mdp_true,
                              const MatrixXd& expert_policy) {
  check_shapes(theta, mdp_true, expert_policy);
  const SoftSolution sol = tight_solve(theta, mdp_true.discount);
  const double gamma = mdp_true.discount;
  const MatrixXd d_expert = occupancy_measure(mdp_true, expert_policy).d;
  const MatrixXd d_learner = occupancy_measure(mdp_true, sol.policy).d;

  BoundReport rep;
  rep.gamma = gamma;
  const MatrixXd log_pi = sol.q.colwise() - sol.v;
  rep.eps_policy = -(d_expert.array() * log_pi.array()).sum();
  rep.eps_dynamics =
      (d_expert.array() *
       row_kl(mdp_true.transition, theta.dynamics(), mdp_true.n_actions).array())
          .sum();

  double c = 0.0;
  for (Eigen::Index i = 0; i < d_learner.size(); ++i) {
    const double dl = d_learner.data()[i];
    if (dl <= 0.0) continue;
    const double de = d_expert.data()[i];
    if (de <= 0.0) {
      c = std::numeric_limits<double>::infinity();
      break;
    }
    c = std::max(c, dl / de);
  }
  rep.density_ratio_c = c;

  const MatrixXd reward = theta.reward();
  rep.r_max = reward_bound(reward);

  TabularMdp eval = mdp_true;
  eval.reward = reward;
  rep.observed_gap =
      std::abs(discounted_return(eval, sol.policy) - discounted_return(eval, expert_policy));

  if (std::isinf(c)) {
    rep.vacuous = true;
    rep.bound = std::numeric_limits<double>::infinity();
    rep.holds = true;
  } else {
    rep.bound = performance_bound_value(rep.eps_policy, rep.eps_dynamics, c, rep.r_max, gamma);
    rep.holds = rep.observed_gap <= rep.bound + 1e-9;
  }
  return rep;
}

WitnessResult unidentifiability_witness(const ThetaParams& theta, const MatrixXd& delta,
                                        double discount) {
  validate(theta);
  const int n_states = theta.n_states();
  const int n_actions = theta.n_actions();
  if (delta.rows() != n_states * n_actions || delta.cols() != n_states) {
    throw std::invalid_argument("unidentifiability_witness: delta must be (S*A) x S");
  }
  const MatrixXd p = theta.dynamics();
  const MatrixXd p_new = p + delta;
  for (Eigen::Index r = 0; r < p_new.rows(); ++r) {
    if (p_new.row(r).minCoeff() < -1e-12 || std::abs(p_new.row(r).sum() - 1.0) > 1e-9) {
      throw std::invalid_argument("unidentifiability_witness: perturbed row " + std::to_string(r) +
                                  " is not a distribution");
    }
  }

  const SoftSolution sol = tight_solve(theta, discount);
  MatrixXd shift(n_states, n_actions);
  for (int s = 0; s < n_states; ++s) {
    for (int a = 0; a < n_actions; ++a) {
      shift(s, a) = -discount * delta.row(s * n_actions + a).dot(sol.v);
    }
  }

  WitnessResult out;
  out.theta.reward_mode = RewardMode::table;
  out.theta.reward_logits = theta.reward() + shift;
  out.theta.dynamics_logits = logits_from_probs(p_new.cwiseMax(0.0));
  out.theta.lambda = theta.lambda;

  const SoftSolution sol_new = tight_solve(out.theta, discount);
  out.policy_distance = (sol.policy - sol_new.policy).cwiseAbs().maxCoeff();
  out.q_distance = (sol.q - sol_new.q).cwiseAbs().maxCoeff();
  out.v_distance = (sol.v - sol_new.v).cwiseAbs().maxCoeff();
  return out;
}

MatrixXd mass_shift(int n_states, int n_actions, int s, int a, int from, int to, double amount) {
  if (s < 0 || s >= n_states || a < 0 || a >= n_actions || from < 0 || from >= n_states || to < 0 ||
      to >= n_states) {
    throw std::out_of_range("mass_shift: index out of range");
  }
  MatrixXd delta = MatrixXd::Zero(n_states * n_actions, n_states);
  delta(s * n_actions + a, from) -= amount;
  delta(s * n_actions + a, to) += amount;
  return delta;
}

}  // namespace bmirl
