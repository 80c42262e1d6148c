#include "bmirl/params.hpp"

#include <cmath>
#include <stdexcept>

#include "bmirl/soft_solver.hpp"

namespace bmirl {

MatrixXd ThetaParams::reward() const {
  if (reward_mode == RewardMode::table) {
    return reward_logits;
  }
  const VectorXd logits = reward_logits.col(0);
  const double lse = log_sum_exp(logits.transpose());
  return (logits.array() - lse).matrix().replicate(1, n_actions());
}

MatrixXd ThetaParams::dynamics() const { return row_softmax(dynamics_logits); }

ThetaParams ThetaParams::zeros(int n_states, int n_actions, RewardMode mode) {
  ThetaParams theta;
  theta.reward_mode = mode;
  theta.reward_logits = mode == RewardMode::table ? MatrixXd::Zero(n_states, n_actions)
                                                  : MatrixXd::Zero(n_states, 1);
  theta.dynamics_logits = MatrixXd::Zero(n_states * n_actions, n_states);
  return theta;
}

void validate(const ThetaParams& theta) {
  const int s_count = theta.n_states();
  if (s_count <= 0 || theta.dynamics_logits.rows() % s_count != 0 ||
      theta.dynamics_logits.rows() == 0) {
    throw std::invalid_argument("theta: dynamics_logits must be (S*A) x S");
  }
  const int a_count = theta.n_actions();
  const Eigen::Index want_cols = theta.reward_mode == RewardMode::table ? a_count : 1;
  if (theta.reward_logits.rows() != s_count || theta.reward_logits.cols() != want_cols) {
    throw std::invalid_argument("theta: reward_logits shape does not match reward mode");
  }
  if (!theta.reward_logits.allFinite() || !theta.dynamics_logits.allFinite()) {
    throw std::invalid_argument("theta: logits must be finite");
  }
  if (!(theta.lambda >= 0.0) || !std::isfinite(theta.lambda)) {
    throw std::invalid_argument("theta: lambda must be finite and >= 0");
  }
}

MatrixXd logits_from_probs(const MatrixXd& probs, double floor) {
  return probs.array().max(floor).log().matrix();
}

ThetaParams theta_from_mdp(const TabularMdp& mdp, const VectorXd& state_logits, double lambda) {
  ThetaParams theta;
  theta.reward_mode = RewardMode::state_log_softmax;
  theta.reward_logits = state_logits;
  theta.dynamics_logits = logits_from_probs(mdp.transition);
  theta.lambda = lambda;
  return theta;
}

ThetaParams theta_from_mdp_table(const TabularMdp& mdp, double lambda) {
  ThetaParams theta;
  theta.reward_mode = RewardMode::table;
  theta.reward_logits = mdp.reward;
  theta.dynamics_logits = logits_from_probs(mdp.transition);
  theta.lambda = lambda;
  return theta;
}

TabularMdp learner_mdp(const ThetaParams& theta, double discount, const VectorXd& init_dist) {
  TabularMdp mdp;
  mdp.n_states = theta.n_states();
  mdp.n_actions = theta.n_actions();
  mdp.transition = theta.dynamics();
  mdp.reward = theta.reward();
  mdp.init_dist = init_dist;
  mdp.discount = discount;
  return mdp;
}

GradientVector GradientVector::zeros_like(const ThetaParams& theta) {
  return {MatrixXd::Zero(theta.reward_logits.rows(), theta.reward_logits.cols()),
          MatrixXd::Zero(theta.dynamics_logits.rows(), theta.dynamics_logits.cols())};
}

double GradientVector::norm() const {
  return std::sqrt(d_reward.squaredNorm() + d_dynamics.squaredNorm());
}

double GradientVector::dot(const GradientVector& other) const {
  return (d_reward.array() * other.d_reward.array()).sum() +
         (d_dynamics.array() * other.d_dynamics.array()).sum();
}

GradientVector& GradientVector::operator+=(const GradientVector& other) {
  d_reward += other.d_reward;
  d_dynamics += other.d_dynamics;
  return *this;
}

GradientVector& GradientVector::operator-=(const GradientVector& other) {
  d_reward -= other.d_reward;
  d_dynamics -= other.d_dynamics;
  return *this;
}

GradientVector& GradientVector::operator*=(double scale) {
  d_reward *= scale;
  d_dynamics *= scale;
  return *this;
}

GradientVector operator+(GradientVector a, const GradientVector& b) { return a += b; }
GradientVector operator-(GradientVector a, const GradientVector& b) { return a -= b; }
GradientVector operator*(double scale, GradientVector g) { return g *= scale; }

}  // namespace bmirl
