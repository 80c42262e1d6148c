#pragma once

#include "bmirl/dataset.hpp"
#include "bmirl/mdp.hpp"

namespace bmirl {

enum class RewardMode {
  /// theta_1 is a length-S column; R(s, a) = log softmax(theta_1)[s].
  state_log_softmax,
  /// theta_1 is an S x A table used as the reward directly.
  table,
};

/**
 * Learnable reward and internal-dynamics parameters theta = {theta_1, theta_2}
 * plus the prior precision lambda.
 *
 * dynamics_logits is (S*A) x S; P^(s'|s, a) is the softmax of row (s, a).
 */
struct ThetaParams {
  RewardMode reward_mode = RewardMode::state_log_softmax;
  MatrixXd reward_logits;
  MatrixXd dynamics_logits;
  double lambda = 0.0;

  int n_states() const { return static_cast<int>(dynamics_logits.cols()); }
  int n_actions() const {
    return n_states() == 0 ? 0 : static_cast<int>(dynamics_logits.rows()) / n_states();
  }

  /// R_theta as an S x A table.
  MatrixXd reward() const;
  /// P^_theta as an (S*A) x S row-stochastic matrix.
  MatrixXd dynamics() const;

  static ThetaParams zeros(int n_states, int n_actions, RewardMode mode);
};

/// Throws std::invalid_argument on inconsistent shapes, non-finite logits or
/// a negative / non-finite lambda.
void validate(const ThetaParams& theta);

/// Entrywise log(max(p, floor)); the floor keeps exactly-zero probabilities
/// representable as finite logits.
MatrixXd logits_from_probs(const MatrixXd& probs, double floor = 1e-300);

/// theta reproducing a known MDP: state logits for the reward (or the reward
/// table itself) and log-probabilities for the dynamics.
ThetaParams theta_from_mdp(const TabularMdp& mdp, const VectorXd& state_logits, double lambda);
ThetaParams theta_from_mdp_table(const TabularMdp& mdp, double lambda);

/// MDP (P^_theta, R_theta) sharing the given discount and start distribution.
TabularMdp learner_mdp(const ThetaParams& theta, double discount, const VectorXd& init_dist);

/// Gradient with the same shapes as ThetaParams' two blocks.
struct GradientVector {
  MatrixXd d_reward;
  MatrixXd d_dynamics;

  static GradientVector zeros_like(const ThetaParams& theta);

  double reward_norm() const { return d_reward.norm(); }
  double dynamics_norm() const { return d_dynamics.norm(); }
  double norm() const;
  double dot(const GradientVector& other) const;
  bool all_finite() const { return d_reward.allFinite() && d_dynamics.allFinite(); }

  GradientVector& operator+=(const GradientVector& other);
  GradientVector& operator-=(const GradientVector& other);
  GradientVector& operator*=(double scale);
};

GradientVector operator+(GradientVector a, const GradientVector& b);
GradientVector operator-(GradientVector a, const GradientVector& b);
GradientVector operator*(double scale, GradientVector g);

}  // namespace bmirl
