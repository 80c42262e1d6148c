#pragma once

#include "bmirl/mdp.hpp"

namespace bmirl {

/// Discounted state-action occupancy. rho sums to 1/(1-gamma); d = (1-gamma) rho.
struct OccupancyMeasure {
  MatrixXd rho;
  MatrixXd d;
};

enum class OccupancyMethod {
  automatic,  ///< dense solve when S*A <= dense_limit, iteration otherwise
  dense,
  iterative,
};

struct OccupancyOptions {
  OccupancyMethod method = OccupancyMethod::automatic;
  int dense_limit = 10000;
  double residual_tol = 1e-10;
  int max_iter = 1000000;
};

/// Solves rho(s, a) = pi(a|s) [mu(s) + gamma sum P(s|s~, a~) rho(s~, a~)].
/// Throws SolveError when the flow-equation residual exceeds the tolerance.
OccupancyMeasure occupancy_measure(const TabularMdp& mdp, const MatrixXd& policy,
                                   const OccupancyOptions& opts = {});

/// Same flow equation started from an arbitrary state distribution.
OccupancyMeasure occupancy_from_states(const TabularMdp& mdp, const MatrixXd& policy,
                                       const VectorXd& start, const OccupancyOptions& opts = {});

/// Occupancy started from the point mass on (s0, a0).
OccupancyMeasure conditional_occupancy(const TabularMdp& mdp, const MatrixXd& policy, int s0,
                                       int a0, const OccupancyOptions& opts = {});

/**
 * All conditional occupancies at once: the (S*A) x (S*A) matrix
 * M = (I - gamma P Pi)^{-1}, whose row `mdp.row(s, a)` is rho(. | s, a)
 * flattened with the same row convention.
 */
MatrixXd conditional_occupancy_matrix(const TabularMdp& mdp, const MatrixXd& policy);

/// Brute-force power series sum_{t < horizon} gamma^t Pr(s_t, a_t).
OccupancyMeasure truncated_occupancy(const TabularMdp& mdp, const MatrixXd& policy,
                                     const VectorXd& start, int horizon);

/// Same as above but started from a state-action point mass.
MatrixXd truncated_conditional_occupancy(const TabularMdp& mdp, const MatrixXd& policy, int s0,
                                         int a0, int horizon);

/// Smallest T with gamma^T <= tail_tol, i.e. ceil(ln(tail_tol) / ln(gamma)).
int tolerance_horizon(double gamma, double tail_tol = 1e-9);

/// The coarse rule T = int(1 / (1 - gamma)).
int heuristic_horizon(double gamma);

/// J_P(pi) = sum rho(s, a) [R(s, a) + H(pi(.|s))].
double discounted_return(const TabularMdp& mdp, const MatrixXd& policy);

/// sum rho(s, a) R(s, a), no entropy bonus.
double discounted_reward_return(const TabularMdp& mdp, const MatrixXd& policy);

}  // namespace bmirl
