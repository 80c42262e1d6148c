#pragma once

#include "bmirl/dataset.hpp"
#include "bmirl/params.hpp"
#include "bmirl/soft_solver.hpp"

namespace bmirl {

/// Inner problem: soft-optimal policy for (P^_theta2, R_theta1).
SoftSolution solve_policy(const ThetaParams& theta, double discount,
                          const SolverOptions& opts = {});

/**
 * Everything the exact gradients need from one inner solve: the reward and
 * dynamics tables, EV(s, a) = sum_s' P^(s'|s, a) V(s'), and the matrix of
 * conditional occupancies M = (I - gamma P^ Pi^)^{-1} (rows indexed s*A + a).
 */
struct Linearization {
  double discount = 0.0;
  MatrixXd reward;
  MatrixXd dynamics;
  MatrixXd next_value;
  MatrixXd cond_occ;
  VectorXd v;
  MatrixXd policy;
};

Linearization linearize(const ThetaParams& theta, const SoftSolution& sol);

/// Same as above but with an explicit policy and value (both frozen) and the
/// current dynamics of theta. Used when theta_2 moves while the inner
/// solution is held fixed.
Linearization linearize_frozen(const ThetaParams& theta, const MatrixXd& policy,
                               const VectorXd& v, double discount);

struct LogPosterior {
  double value = 0.0;            ///< policy_loglik + lambda * dynamics_loglik
  double policy_loglik = 0.0;    ///< E_D[log pi^(a|s)]
  double dynamics_loglik = 0.0;  ///< E_D[log P^(s'|s, a)]
  bool clamped = false;          ///< a zero probability was clamped
};

/// Floor applied to log-probabilities that underflow to -inf.
inline constexpr double kLogProbFloor = -700.0;

/// (1/NT) sum over data of [log pi^(a|s) + lambda log P^(s'|s, a)].
/// Throws std::invalid_argument for an empty dataset.
LogPosterior log_posterior(const ThetaParams& theta, const SoftSolution& sol, const Dataset& data);
LogPosterior log_posterior(const ThetaParams& theta, const Dataset& data, double discount);

/// E_D[log P^(s'|s, a)].
double data_dynamics_loglik(const ThetaParams& theta, const Dataset& data);

/// Gradient of E_D[log P^(s'|s, a)] w.r.t. the dynamics logits.
GradientVector dynamics_loglik_gradient(const ThetaParams& theta, const Dataset& data);

/**
 * Chain rule from an occupancy weighting w (S x A) to the parameters:
 *   d_reward   = reward_scale   * sum_{s,a} w(s,a) dR(s,a)/dtheta_1
 *   d_dynamics = dynamics_scale * w(s,a) P^(k|s,a) (V(k) - EV(s,a))   at row (s,a), col k
 * i.e. the gradient of sum w(s,a) [reward_scale R + dynamics_scale EV] with w and V held fixed.
 */
GradientVector pullback(const ThetaParams& theta, const Linearization& lin, const MatrixXd& w,
                        double reward_scale, double dynamics_scale);

/// grad log pi^(a|s; theta) = grad Q(s, a) - E_{a~ ~ pi^(.|s)} grad Q(s, a~), exact.
GradientVector exact_policy_log_grad(const ThetaParams& theta, const Linearization& lin, int s,
                                     int a);
GradientVector exact_policy_log_grad(const ThetaParams& theta, const SoftSolution& sol, int s,
                                     int a);

/// Gradient of log_posterior, summing exact_policy_log_grad over the data.
GradientVector log_posterior_gradient(const ThetaParams& theta, const SoftSolution& sol,
                                      const Dataset& data);

/// E(s, a) = E_{rho(.|s, a)}[R + gamma EV], all pairs as an S x A table.
MatrixXd energy_table(const Linearization& lin);
double energy(const ThetaParams& theta, const SoftSolution& sol, int s, int a);

/// c(s, a) = N(s, a)/NT - N(s)/NT pi^(a|s): expert-minus-learner start weights.
MatrixXd contrast_start_weights(const Dataset& data, const MatrixXd& policy);

/// Occupancy weighting M^T c for start weights c (both S x A).
MatrixXd propagate_weights(const Linearization& lin, const MatrixXd& start_weights);

/// E_D[E(s,a)] - E_{s~D, a~pi^}[E(s,a)] + lambda E_D[log P^(s'|s,a)].
double surrogate_objective(const ThetaParams& theta, const SoftSolution& sol, const Dataset& data);
double surrogate_objective(const ThetaParams& theta, const Dataset& data, double discount);

/// Gradient of the surrogate with its sampling distributions (occupancies,
/// learner policy) and V held fixed.
GradientVector surrogate_gradient(const ThetaParams& theta, const SoftSolution& sol,
                                  const Dataset& data);

/**
 * The surrogate with the occupancy weighting and V frozen at some theta_0,
 * evaluated at another theta. Its gradient at theta = theta_0 is
 * surrogate_gradient(theta_0); this form exists so that gradient can be
 * checked by finite differences.
 */
struct FrozenSurrogate {
  MatrixXd weights;  ///< M^T c at theta_0
  VectorXd v;
  double discount = 0.0;
};

FrozenSurrogate freeze_surrogate(const ThetaParams& theta, const SoftSolution& sol,
                                 const Dataset& data);
double frozen_surrogate_value(const FrozenSurrogate& frozen, const ThetaParams& theta,
                              const Dataset& data);

}  // namespace bmirl
