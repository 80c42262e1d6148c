#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "bmirl/dataset.hpp"
#include "bmirl/estimation.hpp"
#include "bmirl/params.hpp"
#include "bmirl/sampling.hpp"
#include "bmirl/soft_solver.hpp"

namespace bmirl {

enum class Variant { bm_irl, rm_irl, two_stage };
enum class GradientBackend { exact, sampled };

std::string to_string(Variant v);
std::string to_string(GradientBackend b);
Variant parse_variant(const std::string& s);
GradientBackend parse_backend(const std::string& s);

struct TrainConfig {
  /// Weight of the expected-value contrast in the dynamics objective.
  double lambda1 = 1.0;
  /// Weight of the data log-likelihood in the dynamics objective.
  double lambda2 = 1.0;
  double reward_lr = 0.05;
  double dynamics_lr = 0.2;
  int dynamics_steps_per_outer = 1;
  int rollout_batch = 1000;
  int rollout_steps = 40;
  int outer_iters = 2000;
  std::uint64_t seed = 0;
  Variant variant = Variant::bm_irl;
  GradientBackend gradient_backend = GradientBackend::exact;

  /// 0 re-solves the inner problem to tolerance every outer step; k > 0 runs
  /// k warm-started soft Bellman sweeps instead.
  int partial_inner_sweeps = 0;
  bool normalize_advantages = true;
  double smoothing = 1.0;
  double solver_tol = 1e-10;
  int snapshot_every = 100;
  /// Abort after this many consecutive decreases of the log posterior (0 disables).
  int divergence_window = 50;

  /// Prior precision implied by the two weights: lambda2 / lambda1, or
  /// lambda2 itself when lambda1 = 0.
  double effective_lambda() const { return lambda1 > 0.0 ? lambda2 / lambda1 : lambda2; }
};

/// Throws std::invalid_argument on a config that violates its invariants,
/// including lambda2 <= lambda1 for RM-IRL.
void validate(const TrainConfig& cfg);

struct IterationRecord {
  int iter = 0;
  double log_posterior = 0.0;
  double surrogate = 0.0;
  double reward_grad_norm = 0.0;
  double dyn_grad_norm = 0.0;
  double data_dyn_loglik = 0.0;
  std::optional<double> illegal_rate;
  double expert_gap = 0.0;
};

struct Snapshot {
  int iter = 0;
  ThetaParams theta;
};

/// Closed-form maximum-likelihood dynamics fit (two-stage phase 1).
struct MleSummary {
  double smoothing = 0.0;
  double data_dyn_loglik = 0.0;
  int visited_rows = 0;
  int total_rows = 0;
};

struct TrainRecord {
  Variant variant = Variant::bm_irl;
  std::vector<IterationRecord> iterations;
  std::vector<Snapshot> snapshots;
  ThetaParams final_theta;
  SoftSolution final_solution;
  std::optional<MleSummary> mle;
};

struct TrainHooks {
  /// Optional metric evaluated at snapshot cadence (e.g. illegal transition rate).
  std::function<double(const ThetaParams&, const SoftSolution&)> illegal_rate;
};

/// Smoothed empirical MLE of the dynamics as logits.
MatrixXd mle_dynamics_logits(const Dataset& data, double smoothing);

/// theta_1 = 0 (state log-softmax), theta_2 = smoothed MLE logits,
/// lambda = cfg.effective_lambda().
ThetaParams initial_theta(const Dataset& data, const TrainConfig& cfg);

/// Gradients of one outer iteration before the learning rates are applied.
struct StepGradients {
  GradientVector reward;    ///< only d_reward is populated
  GradientVector dynamics;  ///< only d_dynamics is populated
  /// Standard errors of the two estimates (sampled backend only).
  std::optional<GradientVector> reward_se;
  std::optional<GradientVector> dynamics_se;
};

/**
 * Reward-step gradient and one dynamics-step gradient for `cfg.variant` at
 * theta with the inner solution `sol` held fixed. `stream` selects the
 * random stream for the sampled backend.
 */
StepGradients outer_gradients(const ThetaParams& theta, const SoftSolution& sol,
                              const Dataset& data, const TrainConfig& cfg, std::uint64_t stream);

TrainRecord bm_irl_train(const TabularMdp& mdp_true, const Dataset& data, const TrainConfig& cfg,
                         const TrainHooks& hooks = {});
TrainRecord rm_irl_train(const TabularMdp& mdp_true, const Dataset& data, const TrainConfig& cfg,
                         const TrainHooks& hooks = {});
TrainRecord two_stage_train(const TabularMdp& mdp_true, const Dataset& data,
                            const TrainConfig& cfg, const TrainHooks& hooks = {});

/// Dispatches on cfg.variant.
TrainRecord train(const TabularMdp& mdp_true, const Dataset& data, const TrainConfig& cfg,
                  const TrainHooks& hooks = {});

}  // namespace bmirl
