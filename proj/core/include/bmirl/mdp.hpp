#pragma once

#include <Eigen/Dense>

namespace bmirl {

using Eigen::MatrixXd;
using Eigen::VectorXd;

struct StateAction {
  int state = 0;
  int action = 0;
  friend bool operator==(const StateAction&, const StateAction&) = default;
};

/**
 * Finite discounted MDP (S, A, P, R, mu, gamma).
 *
 * `transition` is stored as an (S*A) x S matrix whose row `row(s, a)` is the
 * successor distribution P(.|s, a). `reward` is S x A.
 */
struct TabularMdp {
  int n_states = 0;
  int n_actions = 0;
  MatrixXd transition;
  MatrixXd reward;
  VectorXd init_dist;
  double discount = 0.9;

  int row(int s, int a) const { return s * n_actions + a; }
  int n_pairs() const { return n_states * n_actions; }
};

/// Throws std::invalid_argument when shapes, stochasticity or the discount
/// are inconsistent. Rows must sum to one within `tol`.
void validate(const TabularMdp& mdp, double tol = 1e-12);

/// True when every row of `policy` (S x A) is a distribution within `tol`.
bool is_stochastic_matrix(const MatrixXd& m, double tol);

/// State-to-state kernel P_pi(s, s') = sum_a pi(a|s) P(s'|s, a).
MatrixXd policy_kernel(const TabularMdp& mdp, const MatrixXd& policy);

/// EV(s, a) = sum_{s'} P(s'|s, a) v(s'), returned as S x A.
MatrixXd expected_next_value(const TabularMdp& mdp, const VectorXd& v);

/// Shannon entropy of every policy row, with 0 log 0 = 0.
VectorXd policy_entropy(const MatrixXd& policy);

}  // namespace bmirl
