#pragma once

#include <vector>

#include "bmirl/mdp.hpp"

namespace bmirl {

/// Entropy-regularized optimum for one (reward, dynamics) pair.
///
/// Invariants: policy(s, .) = softmax(q(s, .)), v(s) = logsumexp(q(s, .)),
/// and bellman_residual = max |q - (R + gamma * P v)|.
struct SoftSolution {
  MatrixXd q;
  VectorXd v;
  MatrixXd policy;
  double bellman_residual = 0.0;
  double discount = 0.0;
  int iterations = 0;
};

struct SolverOptions {
  double tol = 1e-10;
  int max_iter = 100000;
  /// When set, receives ||V_{k+1} - V_k||_inf for every sweep.
  std::vector<double>* delta_trace = nullptr;
};

/// Numerically stable log(sum(exp(x))) of one row.
double log_sum_exp(const Eigen::Ref<const Eigen::RowVectorXd>& x);

/// Row-wise softmax with max subtraction.
MatrixXd row_softmax(const MatrixXd& logits);

/// One soft Bellman backup: logsumexp_a(R + gamma * P v).
VectorXd soft_bellman_backup(const TabularMdp& mdp, const VectorXd& v);

/// Builds q, v, policy and the Bellman residual from a value estimate:
/// q = R + gamma * P v_in, v = logsumexp(q).
SoftSolution solution_from_values(const TabularMdp& mdp, const VectorXd& v_in);

/**
 * Soft value iteration V <- logsumexp_a(R + gamma P V), iterated until the
 * sup-norm change drops below `opts.tol` and the returned solution's Bellman
 * residual is within `opts.tol`.
 *
 * Throws ConvergenceError (carrying the last residual) after `max_iter`
 * sweeps without convergence.
 */
SoftSolution soft_value_iteration(const TabularMdp& mdp, const SolverOptions& opts = {},
                                  const VectorXd* warm_start = nullptr);

inline SoftSolution soft_value_iteration(const TabularMdp& mdp, double tol, int max_iter) {
  SolverOptions opts;
  opts.tol = tol;
  opts.max_iter = max_iter;
  return soft_value_iteration(mdp, opts);
}

/// Exactly `sweeps` backups from `v0` without a convergence requirement.
/// Used for the partially solved inner problem of two-timescale training.
SoftSolution soft_bellman_sweeps(const TabularMdp& mdp, const VectorXd& v0, int sweeps);

}  // namespace bmirl
