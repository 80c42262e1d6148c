#include "bmirl/estimation.hpp"

#include <cmath>
#include <stdexcept>

#include "bmirl/occupancy.hpp"

namespace bmirl {
namespace {

// S x A table <-> length S*A vector indexed s * A + a.
VectorXd flatten(const MatrixXd& sa) {
  const MatrixXd t = sa.transpose();
  return Eigen::Map<const VectorXd>(t.data(), t.size());
}

MatrixXd unflatten(const VectorXd& flat, int n_states, int n_actions) {
  return Eigen::Map<const MatrixXd>(flat.data(), n_actions, n_states).transpose();
}

VectorXd uniform_start(int n_states) {
  return VectorXd::Constant(n_states, 1.0 / n_states);
}

void require_data(const Dataset& data, const ThetaParams& theta) {
  if (data.n_transitions() <= 0.0) {
    throw std::invalid_argument("estimation: dataset has no transitions");
  }
  if (data.n_states != theta.n_states() || data.n_actions != theta.n_actions()) {
    throw std::invalid_argument("estimation: dataset and theta disagree on S or A");
  }
}

MatrixXd log_dynamics(const ThetaParams& theta) {
  MatrixXd out = theta.dynamics_logits;
  for (Eigen::Index r = 0; r < out.rows(); ++r) {
    out.row(r).array() -= log_sum_exp(theta.dynamics_logits.row(r));
  }
  return out;
}

}  // namespace

SoftSolution solve_policy(const ThetaParams& theta, double discount, const SolverOptions& opts) {
  validate(theta);
  return soft_value_iteration(learner_mdp(theta, discount, uniform_start(theta.n_states())), opts);
}

Linearization linearize_frozen(const ThetaParams& theta, const MatrixXd& policy,
                               const VectorXd& v, double discount) {
  const TabularMdp mdp = learner_mdp(theta, discount, uniform_start(theta.n_states()));
  Linearization lin;
  lin.discount = discount;
  lin.reward = mdp.reward;
  lin.dynamics = mdp.transition;
  lin.next_value = expected_next_value(mdp, v);
  lin.cond_occ = conditional_occupancy_matrix(mdp, policy);
  lin.v = v;
  lin.policy = policy;
  return lin;
}

Linearization linearize(const ThetaParams& theta, const SoftSolution& sol) {
  return linearize_frozen(theta, sol.policy, sol.v, sol.discount);
}

LogPosterior log_posterior(const ThetaParams& theta, const SoftSolution& sol, const Dataset& data) {
  require_data(data, theta);
  const double total = data.n_transitions();
  LogPosterior out;

  for (int s = 0; s < data.n_states; ++s) {
    for (int a = 0; a < data.n_actions; ++a) {
      const double n = data.sa_counts(s, a);
      if (n > 0.0) {
        double lp = sol.q(s, a) - sol.v(s);
        if (!(lp >= kLogProbFloor)) {
          lp = kLogProbFloor;
          out.clamped = true;
        }
        out.policy_loglik += n * lp;
      }
    }
  }
  out.policy_loglik /= total;

  const MatrixXd logp = log_dynamics(theta);
  for (Eigen::Index r = 0; r < data.counts.rows(); ++r) {
    for (Eigen::Index k = 0; k < data.counts.cols(); ++k) {
      const double n = data.counts(r, k);
      if (n > 0.0) {
        double lp = logp(r, k);
        if (!(lp >= kLogProbFloor)) {
          lp = kLogProbFloor;
          out.clamped = true;
        }
        out.dynamics_loglik += n * lp;
      }
    }
  }
  out.dynamics_loglik /= total;
  out.value = out.policy_loglik + theta.lambda * out.dynamics_loglik;
  return out;
}

LogPosterior log_posterior(const ThetaParams& theta, const Dataset& data, double discount) {
  require_data(data, theta);
  return log_posterior(theta, solve_policy(theta, discount), data);
}

double data_dynamics_loglik(const ThetaParams& theta, const Dataset& data) {
  require_data(data, theta);
  const MatrixXd logp = log_dynamics(theta).cwiseMax(kLogProbFloor);
  return (data.counts.array() * logp.array()).sum() / data.n_transitions();
}

GradientVector dynamics_loglik_gradient(const ThetaParams& theta, const Dataset& data) {
  require_data(data, theta);
  GradientVector g = GradientVector::zeros_like(theta);
  const MatrixXd p = theta.dynamics();
  for (int s = 0; s < data.n_states; ++s) {
    for (int a = 0; a < data.n_actions; ++a) {
      const int r = s * data.n_actions + a;
      g.d_dynamics.row(r) = data.counts.row(r) - data.sa_counts(s, a) * p.row(r);
    }
  }
  g.d_dynamics /= data.n_transitions();
  return g;
}

GradientVector pullback(const ThetaParams& theta, const Linearization& lin, const MatrixXd& w,
                        double reward_scale, double dynamics_scale) {
  GradientVector g = GradientVector::zeros_like(theta);
  const int n_states = theta.n_states();
  const int n_actions = theta.n_actions();

  if (reward_scale != 0.0) {
    if (theta.reward_mode == RewardMode::table) {
      g.d_reward = reward_scale * w;
    } else {
      // dR(s)/dtheta_k = [s == k] - softmax(theta)_k
      const VectorXd logits = theta.reward_logits.col(0);
      const VectorXd p = (logits.array() - log_sum_exp(logits.transpose())).exp();
      g.d_reward.col(0) = reward_scale * (w.rowwise().sum() - w.sum() * p);
    }
  }

  if (dynamics_scale != 0.0) {
    for (int s = 0; s < n_states; ++s) {
      for (int a = 0; a < n_actions; ++a) {
        const double weight = w(s, a);
        if (weight == 0.0) {
          continue;
        }
        const int r = s * n_actions + a;
        g.d_dynamics.row(r) = (dynamics_scale * weight) * lin.dynamics.row(r).array() *
                              (lin.v.transpose().array() - lin.next_value(s, a));
      }
    }
  }
  return g;
}

GradientVector exact_policy_log_grad(const ThetaParams& theta, const Linearization& lin, int s,
                                     int a) {
  const int n_states = theta.n_states();
  const int n_actions = theta.n_actions();
  if (s < 0 || s >= n_states || a < 0 || a >= n_actions) {
    throw std::out_of_range("exact_policy_log_grad: (s, a) out of range");
  }
  // Row of grad Q(s, a) minus its policy average, as an occupancy weighting.
  VectorXd row = lin.cond_occ.row(s * n_actions + a).transpose();
  for (int b = 0; b < n_actions; ++b) {
    row -= lin.policy(s, b) * lin.cond_occ.row(s * n_actions + b).transpose();
  }
  return pullback(theta, lin, unflatten(row, n_states, n_actions), 1.0, lin.discount);
}

GradientVector exact_policy_log_grad(const ThetaParams& theta, const SoftSolution& sol, int s,
                                     int a) {
  return exact_policy_log_grad(theta, linearize(theta, sol), s, a);
}

GradientVector log_posterior_gradient(const ThetaParams& theta, const SoftSolution& sol,
                                      const Dataset& data) {
  require_data(data, theta);
  const Linearization lin = linearize(theta, sol);
  const double total = data.n_transitions();
  GradientVector g = GradientVector::zeros_like(theta);
  for (int s = 0; s < data.n_states; ++s) {
    for (int a = 0; a < data.n_actions; ++a) {
      const double n = data.sa_counts(s, a);
      if (n > 0.0) {
        g += (n / total) * exact_policy_log_grad(theta, lin, s, a);
      }
    }
  }
  if (theta.lambda != 0.0) {
    g += theta.lambda * dynamics_loglik_gradient(theta, data);
  }
  return g;
}

MatrixXd energy_table(const Linearization& lin) {
  const int n_states = static_cast<int>(lin.reward.rows());
  const int n_actions = static_cast<int>(lin.reward.cols());
  const VectorXd target = flatten(lin.reward + lin.discount * lin.next_value);
  return unflatten(lin.cond_occ * target, n_states, n_actions);
}

double energy(const ThetaParams& theta, const SoftSolution& sol, int s, int a) {
  if (s < 0 || s >= theta.n_states() || a < 0 || a >= theta.n_actions()) {
    throw std::out_of_range("energy: (s, a) out of range");
  }
  const TabularMdp mdp = learner_mdp(theta, sol.discount, uniform_start(theta.n_states()));
  const OccupancyMeasure occ = conditional_occupancy(mdp, sol.policy, s, a);
  const MatrixXd ev = expected_next_value(mdp, sol.v);
  return (occ.rho.array() * (mdp.reward + sol.discount * ev).array()).sum();
}

MatrixXd contrast_start_weights(const Dataset& data, const MatrixXd& policy) {
  const double total = data.n_transitions();
  const VectorXd state_mass = data.sa_counts.rowwise().sum() / total;
  return data.sa_counts / total - MatrixXd(policy.array().colwise() * state_mass.array());
}

MatrixXd propagate_weights(const Linearization& lin, const MatrixXd& start_weights) {
  const int n_states = static_cast<int>(start_weights.rows());
  const int n_actions = static_cast<int>(start_weights.cols());
  return unflatten(lin.cond_occ.transpose() * flatten(start_weights), n_states, n_actions);
}

double surrogate_objective(const ThetaParams& theta, const SoftSolution& sol, const Dataset& data) {
  require_data(data, theta);
  const Linearization lin = linearize(theta, sol);
  const MatrixXd c = contrast_start_weights(data, sol.policy);
  double value = (c.array() * energy_table(lin).array()).sum();
  if (theta.lambda != 0.0) {
    value += theta.lambda * data_dynamics_loglik(theta, data);
  }
  return value;
}

double surrogate_objective(const ThetaParams& theta, const Dataset& data, double discount) {
  require_data(data, theta);
  return surrogate_objective(theta, solve_policy(theta, discount), data);
}

GradientVector surrogate_gradient(const ThetaParams& theta, const SoftSolution& sol,
                                  const Dataset& data) {
  require_data(data, theta);
  const Linearization lin = linearize(theta, sol);
  const MatrixXd w = propagate_weights(lin, contrast_start_weights(data, sol.policy));
  GradientVector g = pullback(theta, lin, w, 1.0, lin.discount);
  if (theta.lambda != 0.0) {
    g += theta.lambda * dynamics_loglik_gradient(theta, data);
  }
  return g;
}

FrozenSurrogate freeze_surrogate(const ThetaParams& theta, const SoftSolution& sol,
                                 const Dataset& data) {
  require_data(data, theta);
  const Linearization lin = linearize(theta, sol);
  return {propagate_weights(lin, contrast_start_weights(data, sol.policy)), sol.v, sol.discount};
}

double frozen_surrogate_value(const FrozenSurrogate& frozen, const ThetaParams& theta,
                              const Dataset& data) {
  const TabularMdp mdp = learner_mdp(theta, frozen.discount, uniform_start(theta.n_states()));
  const MatrixXd ev = expected_next_value(mdp, frozen.v);
  double value = (frozen.weights.array() * (mdp.reward + frozen.discount * ev).array()).sum();
  if (theta.lambda != 0.0) {
    value += theta.lambda * data_dynamics_loglik(theta, data);
  }
  return value;
}

}  // namespace bmirl
