#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "bmirl/dataset.hpp"
#include "bmirl/params.hpp"
#include "bmirl/soft_solver.hpp"

namespace bmirl {

enum class BranchOrigin {
  real_branch,  ///< first action taken from the dataset
  fake_branch,  ///< first action drawn from the learner policy
};

/// Model rollouts branched from dataset points. Every trajectory has exactly
/// `steps` transitions; discounting is left to the consumer.
struct RolloutBatch {
  BranchOrigin origin = BranchOrigin::real_branch;
  std::vector<StateAction> branch_points;
  std::vector<Trajectory> trajectories;
  int steps = 0;
};

/**
 * Simulates one trajectory per start under P^_theta and pi^ (from `sol`).
 * For fake branches the supplied start actions are ignored and replaced by
 * draws from pi^; branch_points then records the sampled first action.
 * Trajectory i draws from the random stream (seed, i).
 */
RolloutBatch branch_rollouts(const ThetaParams& theta, const SoftSolution& sol,
                             BranchOrigin origin, std::span<const StateAction> starts, int steps,
                             std::uint64_t seed);

/// Rollouts of the learner in its own model, s_0 ~ init_dist.
std::vector<Trajectory> imagined_rollouts(const ThetaParams& theta, const SoftSolution& sol,
                                          const VectorXd& init_dist, int n, int steps,
                                          std::uint64_t seed);

/// Mean and standard error (across trajectories) of a Monte-Carlo gradient.
struct GradientEstimate {
  GradientVector mean;
  GradientVector std_error;
  int samples = 0;
};

/// Streaming per-component mean / variance of GradientVector samples.
class GradientAccumulator {
 public:
  explicit GradientAccumulator(const ThetaParams& theta);

  void add(const GradientVector& sample);
  GradientEstimate estimate() const;

 private:
  GradientVector sum_;
  GradientVector sum_sq_;
  int n_ = 0;
};

enum class Baseline {
  q_minus_r,  ///< b(s, a) = Q(s, a) - R(s, a) = gamma EV(s, a)
  zero,
  custom,     ///< ReinforceOptions::custom_baseline (S x A)
};

struct ReinforceOptions {
  bool normalize = true;  ///< (x - mean) / (std + 1e-8) over the batch
  Baseline baseline = Baseline::q_minus_r;
  MatrixXd custom_baseline;
};

/// Advantages V(s_{t+1}) - b(s_t, a_t) for every transition of the batch,
/// normalized over the whole batch when requested.
std::vector<std::vector<double>> rollout_advantages(const ThetaParams& theta,
                                                    const SoftSolution& sol,
                                                    const RolloutBatch& batch,
                                                    const ReinforceOptions& opts);

/// Adds weight * sum_t gamma^t adv_t grad_theta2 log P^(s_{t+1}|s_t, a_t) to `out`.
void accumulate_reinforce(const MatrixXd& dynamics, int n_actions, const Trajectory& tau,
                          std::span<const double> advantages, double discount, double weight,
                          MatrixXd& out);

/// Adds weight * sum_t gamma^t grad_theta1 R(s_t, a_t) to `out`.
void accumulate_reward_grad(const ThetaParams& theta, const Trajectory& tau, double discount,
                            double weight, MatrixXd& out);

/**
 * REINFORCE estimate of grad_theta2 sum_t gamma^t EV(s_t, a_t) along the
 * batch, averaged over trajectories. Throws std::invalid_argument when
 * normalization is requested on fewer than two transitions.
 */
GradientEstimate reinforce_dynamics_grad(const ThetaParams& theta, const SoftSolution& sol,
                                         const RolloutBatch& batch,
                                         const ReinforceOptions& opts = {});

/// Estimate of grad_theta1 sum_t gamma^t R(s_t, a_t) along the batch.
GradientEstimate discounted_reward_grad(const ThetaParams& theta, const SoftSolution& sol,
                                        const RolloutBatch& batch);

}  // namespace bmirl
