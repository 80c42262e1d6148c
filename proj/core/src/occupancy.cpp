#include "bmirl/occupancy.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

#include "bmirl/errors.hpp"

namespace bmirl {
namespace {

void check_policy(const TabularMdp& mdp, const MatrixXd& policy) {
  if (policy.rows() != mdp.n_states || policy.cols() != mdp.n_actions) {
    throw std::invalid_argument("occupancy: policy must be S x A");
  }
  if (!is_stochastic_matrix(policy, 1e-9)) {
    throw std::invalid_argument("occupancy: policy rows must be distributions");
  }
}

double flow_residual(const MatrixXd& kernel_t, double gamma, const VectorXd& start,
                     const VectorXd& x) {
  return (x - start - gamma * kernel_t * x).cwiseAbs().maxCoeff();
}

// Discounted state visitation x = start + gamma K^T x.
VectorXd state_visitation(const TabularMdp& mdp, const MatrixXd& policy, const VectorXd& start,
                          const OccupancyOptions& opts) {
  const MatrixXd kernel_t = policy_kernel(mdp, policy).transpose();
  const double gamma = mdp.discount;
  const bool dense = opts.method == OccupancyMethod::dense ||
                     (opts.method == OccupancyMethod::automatic &&
                      mdp.n_pairs() <= opts.dense_limit);

  VectorXd x;
  if (dense) {
    const MatrixXd system =
        MatrixXd::Identity(mdp.n_states, mdp.n_states) - gamma * kernel_t;
    const Eigen::PartialPivLU<MatrixXd> lu(system);
    x = lu.solve(start);
    // One round of iterative refinement for badly conditioned systems.
    const VectorXd r = start - system * x;
    x += lu.solve(r);
  } else {
    x = start;
    for (int it = 0; it < opts.max_iter; ++it) {
      VectorXd next = start + gamma * kernel_t * x;
      const double delta = (next - x).cwiseAbs().maxCoeff();
      x = std::move(next);
      if (delta * gamma / (1.0 - gamma) <= 0.1 * opts.residual_tol) {
        break;
      }
    }
  }

  const double residual = flow_residual(kernel_t, gamma, start, x);
  const double scale = std::max(1.0, x.cwiseAbs().maxCoeff());
  if (!std::isfinite(residual) || residual > opts.residual_tol * scale) {
    std::ostringstream msg;
    msg << "occupancy flow equation residual " << residual << " exceeds tolerance";
    throw SolveError(msg.str(), residual);
  }
  return x;
}

OccupancyMeasure spread(const TabularMdp& mdp, const MatrixXd& policy, const VectorXd& x) {
  OccupancyMeasure occ;
  occ.rho = policy.array().colwise() * x.array();
  occ.d = (1.0 - mdp.discount) * occ.rho;
  return occ;
}

}  // namespace

OccupancyMeasure occupancy_from_states(const TabularMdp& mdp, const MatrixXd& policy,
                                       const VectorXd& start, const OccupancyOptions& opts) {
  check_policy(mdp, policy);
  if (start.size() != mdp.n_states) {
    throw std::invalid_argument("occupancy: start distribution has wrong size");
  }
  return spread(mdp, policy, state_visitation(mdp, policy, start, opts));
}

OccupancyMeasure occupancy_measure(const TabularMdp& mdp, const MatrixXd& policy,
                                   const OccupancyOptions& opts) {
  return occupancy_from_states(mdp, policy, mdp.init_dist, opts);
}

OccupancyMeasure conditional_occupancy(const TabularMdp& mdp, const MatrixXd& policy, int s0,
                                       int a0, const OccupancyOptions& opts) {
  check_policy(mdp, policy);
  if (s0 < 0 || s0 >= mdp.n_states || a0 < 0 || a0 >= mdp.n_actions) {
    throw std::out_of_range("conditional_occupancy: (s0, a0) out of range");
  }
  const VectorXd next = mdp.discount * mdp.transition.row(mdp.row(s0, a0)).transpose();
  OccupancyMeasure occ = spread(mdp, policy, state_visitation(mdp, policy, next, opts));
  occ.rho(s0, a0) += 1.0;
  occ.d(s0, a0) += 1.0 - mdp.discount;
  return occ;
}

MatrixXd conditional_occupancy_matrix(const TabularMdp& mdp, const MatrixXd& policy) {
  check_policy(mdp, policy);
  const int n = mdp.n_states;
  const double gamma = mdp.discount;
  const MatrixXd kernel = policy_kernel(mdp, policy);
  // (I - gamma P Pi)^{-1} = I + gamma P (I - gamma Pi P)^{-1} Pi, with Pi P = kernel.
  const MatrixXd visits =
      (MatrixXd::Identity(n, n) - gamma * kernel).partialPivLu().solve(MatrixXd::Identity(n, n));
  const MatrixXd next_visits = gamma * mdp.transition * visits;  // (S*A) x S

  MatrixXd m = MatrixXd::Identity(mdp.n_pairs(), mdp.n_pairs());
  for (int s = 0; s < n; ++s) {
    for (int a = 0; a < mdp.n_actions; ++a) {
      m.col(mdp.row(s, a)) += policy(s, a) * next_visits.col(s);
    }
  }
  return m;
}

OccupancyMeasure truncated_occupancy(const TabularMdp& mdp, const MatrixXd& policy,
                                     const VectorXd& start, int horizon) {
  check_policy(mdp, policy);
  const MatrixXd kernel_t = policy_kernel(mdp, policy).transpose();
  VectorXd dist = start;
  VectorXd x = VectorXd::Zero(mdp.n_states);
  double w = 1.0;
  for (int t = 0; t < horizon; ++t) {
    x += w * dist;
    dist = kernel_t * dist;
    w *= mdp.discount;
  }
  return spread(mdp, policy, x);
}

MatrixXd truncated_conditional_occupancy(const TabularMdp& mdp, const MatrixXd& policy, int s0,
                                         int a0, int horizon) {
  MatrixXd rho = MatrixXd::Zero(mdp.n_states, mdp.n_actions);
  if (horizon <= 0) {
    return rho;
  }
  rho(s0, a0) = 1.0;
  if (horizon > 1) {
    const VectorXd next = mdp.discount * mdp.transition.row(mdp.row(s0, a0)).transpose();
    rho += truncated_occupancy(mdp, policy, next, horizon - 1).rho;
  }
  return rho;
}

int tolerance_horizon(double gamma, double tail_tol) {
  return static_cast<int>(std::ceil(std::log(tail_tol) / std::log(gamma)));
}

int heuristic_horizon(double gamma) { return static_cast<int>(1.0 / (1.0 - gamma)); }

double discounted_return(const TabularMdp& mdp, const MatrixXd& policy) {
  const OccupancyMeasure occ = occupancy_measure(mdp, policy);
  const VectorXd h = policy_entropy(policy);
  return (occ.rho.array() * mdp.reward.array()).sum() +
         (occ.rho.rowwise().sum().array() * h.array()).sum();
}

double discounted_reward_return(const TabularMdp& mdp, const MatrixXd& policy) {
  const OccupancyMeasure occ = occupancy_measure(mdp, policy);
  return (occ.rho.array() * mdp.reward.array()).sum();
}

}  // namespace bmirl
