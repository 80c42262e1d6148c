#include "bmirl/soft_solver.hpp"

#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "bmirl/errors.hpp"

namespace bmirl {

double log_sum_exp(const Eigen::Ref<const Eigen::RowVectorXd>& x) {
  const double m = x.maxCoeff();
  if (!std::isfinite(m)) {
    return m;
  }
  return m + std::log((x.array() - m).exp().sum());
}

MatrixXd row_softmax(const MatrixXd& logits) {
  MatrixXd out(logits.rows(), logits.cols());
  for (Eigen::Index i = 0; i < logits.rows(); ++i) {
    const double m = logits.row(i).maxCoeff();
    out.row(i) = (logits.row(i).array() - m).exp();
    out.row(i) /= out.row(i).sum();
  }
  return out;
}

namespace {

MatrixXd q_from_values(const TabularMdp& mdp, const VectorXd& v) {
  return mdp.reward + mdp.discount * expected_next_value(mdp, v);
}

VectorXd row_log_sum_exp(const MatrixXd& q) {
  VectorXd out(q.rows());
  for (Eigen::Index s = 0; s < q.rows(); ++s) {
    out(s) = log_sum_exp(q.row(s));
  }
  return out;
}

}  // namespace

VectorXd soft_bellman_backup(const TabularMdp& mdp, const VectorXd& v) {
  return row_log_sum_exp(q_from_values(mdp, v));
}

SoftSolution solution_from_values(const TabularMdp& mdp, const VectorXd& v_in) {
  SoftSolution sol;
  sol.discount = mdp.discount;
  sol.q = q_from_values(mdp, v_in);
  sol.v = row_log_sum_exp(sol.q);
  sol.policy = MatrixXd(mdp.n_states, mdp.n_actions);
  for (int s = 0; s < mdp.n_states; ++s) {
    sol.policy.row(s) = (sol.q.row(s).array() - sol.v(s)).exp();
  }
  sol.bellman_residual = (sol.q - q_from_values(mdp, sol.v)).cwiseAbs().maxCoeff();
  return sol;
}

SoftSolution soft_value_iteration(const TabularMdp& mdp, const SolverOptions& opts,
                                  const VectorXd* warm_start) {
  if (!(opts.tol > 0.0) || opts.max_iter < 1) {
    throw std::invalid_argument("soft_value_iteration: tol must be > 0 and max_iter >= 1");
  }
  VectorXd v = warm_start ? *warm_start : VectorXd::Zero(mdp.n_states);
  if (v.size() != mdp.n_states) {
    throw std::invalid_argument("soft_value_iteration: warm start has wrong size");
  }

  double delta = std::numeric_limits<double>::infinity();
  int it = 0;
  while (it < opts.max_iter) {
    VectorXd next = soft_bellman_backup(mdp, v);
    delta = (next - v).cwiseAbs().maxCoeff();
    v = std::move(next);
    ++it;
    if (opts.delta_trace) {
      opts.delta_trace->push_back(delta);
    }
    if (!std::isfinite(delta)) {
      break;
    }
    // The residual of the solution assembled from v is at most gamma * delta.
    if (mdp.discount * delta <= opts.tol) {
      SoftSolution sol = solution_from_values(mdp, v);
      if (sol.bellman_residual <= opts.tol) {
        sol.iterations = it;
        return sol;
      }
    }
  }

  std::ostringstream msg;
  msg << "soft value iteration did not converge after " << it
      << " sweeps (last sup-norm change " << delta << ", tol " << opts.tol << ")";
  throw ConvergenceError(msg.str(), delta, it);
}

SoftSolution soft_bellman_sweeps(const TabularMdp& mdp, const VectorXd& v0, int sweeps) {
  VectorXd v = v0;
  for (int k = 0; k < sweeps; ++k) {
    v = soft_bellman_backup(mdp, v);
  }
  SoftSolution sol = solution_from_values(mdp, v);
  sol.iterations = sweeps;
  return sol;
}

}  // namespace bmirl
