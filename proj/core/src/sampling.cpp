#include "bmirl/sampling.hpp"

#include <cmath>
#include <stdexcept>

#include "bmirl/mdp.hpp"
#include "bmirl/random.hpp"

namespace bmirl {
namespace {

Trajectory simulate(const MatrixXd& dynamics, const MatrixXd& policy, int n_actions, int s0,
                    int a0, int steps, Rng& rng) {
  Trajectory tau;
  tau.states.reserve(steps + 1);
  tau.actions.reserve(steps);
  int s = s0;
  int a = a0;
  tau.states.push_back(s);
  for (int t = 0; t < steps; ++t) {
    if (t > 0) {
      a = rng.categorical(policy.row(s));
    }
    tau.actions.push_back(a);
    s = rng.categorical(dynamics.row(s * n_actions + a));
    tau.states.push_back(s);
  }
  return tau;
}

}  // namespace

RolloutBatch branch_rollouts(const ThetaParams& theta, const SoftSolution& sol,
                             BranchOrigin origin, std::span<const StateAction> starts, int steps,
                             std::uint64_t seed) {
  if (steps < 1) {
    throw std::invalid_argument("branch_rollouts: steps must be >= 1");
  }
  const MatrixXd dynamics = theta.dynamics();
  const int n_actions = theta.n_actions();
  RolloutBatch batch;
  batch.origin = origin;
  batch.steps = steps;
  batch.trajectories.reserve(starts.size());
  batch.branch_points.reserve(starts.size());
  for (std::size_t i = 0; i < starts.size(); ++i) {
    Rng rng(seed, static_cast<std::uint64_t>(i));
    const int s = starts[i].state;
    if (s < 0 || s >= theta.n_states()) {
      throw std::out_of_range("branch_rollouts: start state out of range");
    }
    int a = starts[i].action;
    if (origin == BranchOrigin::fake_branch) {
      a = rng.categorical(sol.policy.row(s));
    } else if (a < 0 || a >= n_actions) {
      throw std::out_of_range("branch_rollouts: start action out of range");
    }
    batch.branch_points.push_back({s, a});
    batch.trajectories.push_back(simulate(dynamics, sol.policy, n_actions, s, a, steps, rng));
  }
  return batch;
}

std::vector<Trajectory> imagined_rollouts(const ThetaParams& theta, const SoftSolution& sol,
                                          const VectorXd& init_dist, int n, int steps,
                                          std::uint64_t seed) {
  const MatrixXd dynamics = theta.dynamics();
  std::vector<Trajectory> out;
  out.reserve(n);
  for (int i = 0; i < n; ++i) {
    Rng rng(seed, static_cast<std::uint64_t>(i));
    const int s = rng.categorical(init_dist);
    const int a = rng.categorical(sol.policy.row(s));
    out.push_back(simulate(dynamics, sol.policy, theta.n_actions(), s, a, steps, rng));
  }
  return out;
}

GradientAccumulator::GradientAccumulator(const ThetaParams& theta)
    : sum_(GradientVector::zeros_like(theta)), sum_sq_(GradientVector::zeros_like(theta)) {}

void GradientAccumulator::add(const GradientVector& sample) {
  sum_ += sample;
  sum_sq_.d_reward += sample.d_reward.cwiseAbs2();
  sum_sq_.d_dynamics += sample.d_dynamics.cwiseAbs2();
  ++n_;
}

GradientEstimate GradientAccumulator::estimate() const {
  GradientEstimate est;
  est.samples = n_;
  est.mean = sum_;
  est.std_error = sum_sq_;
  if (n_ == 0) {
    return est;
  }
  const double n = static_cast<double>(n_);
  est.mean *= 1.0 / n;
  auto se = [n](const MatrixXd& sum_sq, const MatrixXd& mean) {
    if (n < 2.0) {
      return MatrixXd(MatrixXd::Zero(mean.rows(), mean.cols()));
    }
    const MatrixXd var = ((sum_sq / n - mean.cwiseAbs2()) * (n / (n - 1.0))).cwiseMax(0.0);
    return MatrixXd((var / n).cwiseSqrt());
  };
  est.std_error.d_reward = se(sum_sq_.d_reward, est.mean.d_reward);
  est.std_error.d_dynamics = se(sum_sq_.d_dynamics, est.mean.d_dynamics);
  return est;
}

std::vector<std::vector<double>> rollout_advantages(const ThetaParams& theta,
                                                    const SoftSolution& sol,
                                                    const RolloutBatch& batch,
                                                    const ReinforceOptions& opts) {
  const int n_actions = theta.n_actions();
  MatrixXd baseline;
  switch (opts.baseline) {
    case Baseline::q_minus_r:
      baseline = sol.q - theta.reward();
      break;
    case Baseline::zero:
      baseline = MatrixXd::Zero(theta.n_states(), n_actions);
      break;
    case Baseline::custom:
      if (opts.custom_baseline.rows() != theta.n_states() ||
          opts.custom_baseline.cols() != n_actions) {
        throw std::invalid_argument("reinforce: custom baseline must be S x A");
      }
      baseline = opts.custom_baseline;
      break;
  }

  std::vector<std::vector<double>> adv;
  adv.reserve(batch.trajectories.size());
  double sum = 0.0;
  double sum_sq = 0.0;
  long count = 0;
  for (const Trajectory& tau : batch.trajectories) {
    std::vector<double> row;
    row.reserve(tau.actions.size());
    for (std::size_t t = 0; t < tau.actions.size(); ++t) {
      const double x = sol.v(tau.states[t + 1]) - baseline(tau.states[t], tau.actions[t]);
      row.push_back(x);
      sum += x;
      sum_sq += x * x;
      ++count;
    }
    adv.push_back(std::move(row));
  }

  if (opts.normalize) {
    if (count < 2) {
      throw std::invalid_argument("reinforce: normalization needs at least two transitions");
    }
    const double mean = sum / count;
    const double var = std::max(0.0, sum_sq / count - mean * mean);
    const double denom = std::sqrt(var) + 1e-8;
    for (auto& row : adv) {
      for (double& x : row) {
        x = (x - mean) / denom;
      }
    }
  }
  return adv;
}

void accumulate_reinforce(const MatrixXd& dynamics, int n_actions, const Trajectory& tau,
                          std::span<const double> advantages, double discount, double weight,
                          MatrixXd& out) {
  double w = weight;
  for (std::size_t t = 0; t < tau.actions.size(); ++t) {
    const int r = tau.states[t] * n_actions + tau.actions[t];
    const double scale = w * advantages[t];
    // grad log softmax = onehot(s') - P^(.|s, a)
    out.row(r) -= scale * dynamics.row(r);
    out(r, tau.states[t + 1]) += scale;
    w *= discount;
  }
}

void accumulate_reward_grad(const ThetaParams& theta, const Trajectory& tau, double discount,
                            double weight, MatrixXd& out) {
  double w = weight;
  double total = 0.0;
  for (std::size_t t = 0; t < tau.actions.size(); ++t) {
    if (theta.reward_mode == RewardMode::table) {
      out(tau.states[t], tau.actions[t]) += w;
    } else {
      out(tau.states[t], 0) += w;
    }
    total += w;
    w *= discount;
  }
  if (theta.reward_mode == RewardMode::state_log_softmax) {
    const VectorXd logits = theta.reward_logits.col(0);
    const VectorXd e = (logits.array() - logits.maxCoeff()).exp();
    out.col(0) -= total * (e / e.sum());
  }
}

GradientEstimate reinforce_dynamics_grad(const ThetaParams& theta, const SoftSolution& sol,
                                         const RolloutBatch& batch, const ReinforceOptions& opts) {
  const auto adv = rollout_advantages(theta, sol, batch, opts);
  const MatrixXd dynamics = theta.dynamics();
  GradientAccumulator acc(theta);
  GradientVector sample = GradientVector::zeros_like(theta);
  for (std::size_t i = 0; i < batch.trajectories.size(); ++i) {
    sample.d_dynamics.setZero();
    accumulate_reinforce(dynamics, theta.n_actions(), batch.trajectories[i], adv[i], sol.discount,
                         1.0, sample.d_dynamics);
    acc.add(sample);
  }
  return acc.estimate();
}

GradientEstimate discounted_reward_grad(const ThetaParams& theta, const SoftSolution& sol,
                                        const RolloutBatch& batch) {
  GradientAccumulator acc(theta);
  GradientVector sample = GradientVector::zeros_like(theta);
  for (const Trajectory& tau : batch.trajectories) {
    sample.d_reward.setZero();
    accumulate_reward_grad(theta, tau, sol.discount, 1.0, sample.d_reward);
    acc.add(sample);
  }
  return acc.estimate();
}

}  // namespace bmirl
