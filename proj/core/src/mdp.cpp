#include "bmirl/mdp.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace bmirl {

bool is_stochastic_matrix(const MatrixXd& m, double tol) {
  if (!m.allFinite() || (m.array() < 0.0).any()) {
    return false;
  }
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    if (std::abs(m.row(i).sum() - 1.0) > tol) {
      return false;
    }
  }
  return true;
}

void validate(const TabularMdp& mdp, double tol) {
  if (mdp.n_states <= 0 || mdp.n_actions <= 0) {
    throw std::invalid_argument("mdp: n_states and n_actions must be positive");
  }
  if (mdp.transition.rows() != mdp.n_pairs() || mdp.transition.cols() != mdp.n_states) {
    throw std::invalid_argument("mdp: transition must be (S*A) x S");
  }
  if (mdp.reward.rows() != mdp.n_states || mdp.reward.cols() != mdp.n_actions) {
    throw std::invalid_argument("mdp: reward must be S x A");
  }
  if (mdp.init_dist.size() != mdp.n_states) {
    throw std::invalid_argument("mdp: init_dist must have S entries");
  }
  if (!(mdp.discount > 0.0 && mdp.discount < 1.0)) {
    throw std::invalid_argument("mdp: discount must lie in (0, 1)");
  }
  if (!mdp.reward.allFinite()) {
    throw std::invalid_argument("mdp: reward contains non-finite entries");
  }
  for (int s = 0; s < mdp.n_states; ++s) {
    for (int a = 0; a < mdp.n_actions; ++a) {
      const auto row = mdp.transition.row(mdp.row(s, a));
      if (!row.allFinite() || (row.array() < 0.0).any() || std::abs(row.sum() - 1.0) > tol) {
        throw std::invalid_argument("mdp: transition row (" + std::to_string(s) + ", " +
                                    std::to_string(a) + ") is not a distribution");
      }
    }
  }
  if ((mdp.init_dist.array() < 0.0).any() || std::abs(mdp.init_dist.sum() - 1.0) > tol) {
    throw std::invalid_argument("mdp: init_dist is not a distribution");
  }
}

MatrixXd policy_kernel(const TabularMdp& mdp, const MatrixXd& policy) {
  MatrixXd kernel = MatrixXd::Zero(mdp.n_states, mdp.n_states);
  for (int s = 0; s < mdp.n_states; ++s) {
    for (int a = 0; a < mdp.n_actions; ++a) {
      kernel.row(s) += policy(s, a) * mdp.transition.row(mdp.row(s, a));
    }
  }
  return kernel;
}

MatrixXd expected_next_value(const TabularMdp& mdp, const VectorXd& v) {
  const VectorXd flat = mdp.transition * v;
  MatrixXd ev(mdp.n_states, mdp.n_actions);
  for (int s = 0; s < mdp.n_states; ++s) {
    for (int a = 0; a < mdp.n_actions; ++a) {
      ev(s, a) = flat(mdp.row(s, a));
    }
  }
  return ev;
}

VectorXd policy_entropy(const MatrixXd& policy) {
  VectorXd h = VectorXd::Zero(policy.rows());
  for (Eigen::Index s = 0; s < policy.rows(); ++s) {
    for (Eigen::Index a = 0; a < policy.cols(); ++a) {
      const double p = policy(s, a);
      if (p > 0.0) {
        h(s) -= p * std::log(p);
      }
    }
  }
  return h;
}

}  // namespace bmirl
