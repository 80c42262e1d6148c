#pragma once

#include <limits>

#include "bmirl/dataset.hpp"
#include "bmirl/mdp.hpp"
#include "bmirl/params.hpp"
#include "bmirl/soft_solver.hpp"

namespace bmirl {

/**
 * Discounted log-likelihood of the expert under the learner, split into the
 * value-contrast term and the dynamics-mismatch term T1:
 *
 *   E_rho[log pi^] = (E_rho[R] - E_mu[V]) + gamma E_rho[P^ V - P V]
 *
 * rho is the expert's (unnormalized) discounted occupancy in the true MDP.
 */
struct DecompositionReport {
  double discounted_loglik = 0.0;
  double ell_theta = 0.0;
  double t1 = 0.0;
  double residual = 0.0;    ///< |loglik - (ell + t1)|
  double epsilon_kl = 0.0;  ///< E_{d expert}[KL(P || P^)]
};

/// Exact version: rho from the soft-optimal `expert_policy` in `mdp_true`.
DecompositionReport decompose_likelihood(const ThetaParams& theta, const TabularMdp& mdp_true,
                                         const MatrixXd& expert_policy);

/// Same quantities with rho replaced by the data's empirical discounted
/// visitation. The identity no longer holds exactly; the residual shows by
/// how much.
DecompositionReport decompose_likelihood_empirical(const ThetaParams& theta,
                                                   const TabularMdp& mdp_true,
                                                   const Dataset& data);

/// KL(P(.|s,a) || P^(.|s,a)) for every row, as S x A, with 0 log 0 = 0.
MatrixXd row_kl(const MatrixXd& p, const MatrixXd& q, int n_actions);

/// max |R| + ln |A|.
double reward_bound(const MatrixXd& reward);

/// gamma r_max / (1 - gamma)^2 sqrt(2 eps).
double t1_bound_value(double gamma, double r_max, double eps);

/// The T1 bound for theta, using R_max of theta's reward and the exact eps.
double t1_bound(const ThetaParams& theta, const TabularMdp& mdp_true,
                const MatrixXd& expert_policy);

struct BoundReport {
  double eps_policy = 0.0;
  double eps_dynamics = 0.0;
  double density_ratio_c = 0.0;  ///< +inf when the learner leaves the expert's support
  double r_max = 0.0;
  double gamma = 0.0;
  double bound = 0.0;
  double observed_gap = 0.0;
  bool holds = false;
  /// C is infinite, so the bound is infinite and `holds` is trivially true.
  bool vacuous = false;
};

/// eps_pi / (1 - gamma) + gamma (C + 1) r_max / (1 - gamma)^2 sqrt(2 eps_P).
double performance_bound_value(double eps_policy, double eps_dynamics, double c, double r_max,
                               double gamma);

/**
 * Expert-learner performance gap and its upper bound. Both returns are
 * entropy-inclusive and evaluated in the true dynamics under theta's reward.
 */
BoundReport performance_bound(const ThetaParams& theta, const TabularMdp& mdp_true,
                              const MatrixXd& expert_policy);

struct WitnessResult {
  ThetaParams theta;  ///< table-mode reward R + dR, dynamics P^ + dP
  double policy_distance = 0.0;
  double q_distance = 0.0;
  double v_distance = 0.0;
};

/**
 * Reward/dynamics pair with the same soft-optimal Q, V and policy:
 * P^' = P^ + dP and R' = R - gamma dP V. `delta` is (S*A) x S. Throws
 * std::invalid_argument when a perturbed row is not a distribution.
 */
WitnessResult unidentifiability_witness(const ThetaParams& theta, const MatrixXd& delta,
                                        double discount);

/// dP moving `amount` of probability in row (s, a) from successor `from` to `to`.
MatrixXd mass_shift(int n_states, int n_actions, int s, int a, int from, int to, double amount);

}  // namespace bmirl
