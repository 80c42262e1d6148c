#include "bmirl/training.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "bmirl/errors.hpp"
#include "bmirl/occupancy.hpp"
#include "bmirl/random.hpp"

namespace bmirl {

std::string to_string(Variant v) {
  switch (v) {
    case Variant::bm_irl:
      return "bm_irl";
    case Variant::rm_irl:
      return "rm_irl";
    case Variant::two_stage:
      return "two_stage";
  }
  return "unknown";
}

std::string to_string(GradientBackend b) {
  return b == GradientBackend::exact ? "exact" : "sampled";
}

Variant parse_variant(const std::string& s) {
  if (s == "bm_irl") return Variant::bm_irl;
  if (s == "rm_irl") return Variant::rm_irl;
  if (s == "two_stage") return Variant::two_stage;
  throw std::invalid_argument("unknown variant '" + s + "'");
}

GradientBackend parse_backend(const std::string& s) {
  if (s == "exact") return GradientBackend::exact;
  if (s == "sampled") return GradientBackend::sampled;
  throw std::invalid_argument("unknown gradient backend '" + s + "'");
}

void validate(const TrainConfig& cfg) {
  auto fail = [](const std::string& msg) { throw std::invalid_argument("train config: " + msg); };
  if (!(cfg.lambda1 >= 0.0) || !std::isfinite(cfg.lambda1)) fail("lambda1 must be finite and >= 0");
  if (!(cfg.lambda2 >= 0.0) || !std::isfinite(cfg.lambda2)) fail("lambda2 must be finite and >= 0");
  if (!(cfg.reward_lr >= 0.0) || !std::isfinite(cfg.reward_lr)) fail("reward_lr must be >= 0");
  if (!(cfg.dynamics_lr >= 0.0) || !std::isfinite(cfg.dynamics_lr)) {
    fail("dynamics_lr must be >= 0");
  }
  if (cfg.dynamics_steps_per_outer < 0) fail("dynamics_steps_per_outer must be >= 0");
  if (cfg.rollout_batch < 2) fail("rollout_batch must be >= 2");
  if (cfg.rollout_steps < 1) fail("rollout_steps must be >= 1");
  if (cfg.outer_iters < 0) fail("outer_iters must be >= 0");
  if (cfg.partial_inner_sweeps < 0) fail("partial_inner_sweeps must be >= 0");
  if (!(cfg.smoothing > 0.0)) fail("smoothing must be > 0");
  if (!(cfg.solver_tol > 0.0)) fail("solver_tol must be > 0");
  if (cfg.snapshot_every < 0) fail("snapshot_every must be >= 0");
  if (cfg.divergence_window < 0) fail("divergence_window must be >= 0");
  if (cfg.variant == Variant::rm_irl && !(cfg.lambda2 > cfg.lambda1)) {
    fail("rm_irl requires lambda2 > lambda1");
  }
}

MatrixXd mle_dynamics_logits(const Dataset& data, double smoothing) {
  return logits_from_probs(smoothed_transition_estimate(data, smoothing));
}

ThetaParams initial_theta(const Dataset& data, const TrainConfig& cfg) {
  ThetaParams theta = ThetaParams::zeros(data.n_states, data.n_actions, RewardMode::state_log_softmax);
  theta.dynamics_logits = mle_dynamics_logits(data, cfg.smoothing);
  theta.lambda = cfg.effective_lambda();
  return theta;
}

namespace {

struct Transition {
  int s;
  int a;
  int next;
};

std::vector<Transition> flat_transitions(const Dataset& data) {
  std::vector<Transition> out;
  for (const Trajectory& tau : data.trajectories) {
    for (int t = 0; t < tau.length(); ++t) {
      out.push_back({tau.states[t], tau.actions[t], tau.states[t + 1]});
    }
  }
  return out;
}

// Fixed-length windows of the recorded trajectories for the RM-IRL reward
// contrast. Window length is min(rollout_steps, shortest trajectory).
struct Segment {
  int traj;
  int start;
};

int segment_length(const Dataset& data, int rollout_steps) {
  int shortest = rollout_steps;
  for (const Trajectory& tau : data.trajectories) {
    if (tau.length() > 0) shortest = std::min(shortest, tau.length());
  }
  return shortest;
}

std::vector<Segment> segments(const Dataset& data, int length) {
  std::vector<Segment> out;
  for (int i = 0; i < static_cast<int>(data.trajectories.size()); ++i) {
    const int n = data.trajectories[i].length();
    for (int t = 0; t + length <= n; ++t) out.push_back({i, t});
  }
  return out;
}

Trajectory slice(const Trajectory& tau, int start, int length) {
  Trajectory out;
  out.states.assign(tau.states.begin() + start, tau.states.begin() + start + length + 1);
  out.actions.assign(tau.actions.begin() + start, tau.actions.begin() + start + length);
  return out;
}

VectorXd uniform_start(int n_states) { return VectorXd::Constant(n_states, 1.0 / n_states); }

// ---- exact backend -------------------------------------------------------

MatrixXd bm_weights(const Linearization& lin, const Dataset& data) {
  return propagate_weights(lin, contrast_start_weights(data, lin.policy));
}

MatrixXd fake_weights(const Linearization& lin, const Dataset& data) {
  const VectorXd state_mass = data.state_marginal();
  return propagate_weights(lin, MatrixXd(lin.policy.array().colwise() * state_mass.array()));
}

MatrixXd rm_reward_weights(const ThetaParams& theta, const SoftSolution& sol, const Dataset& data,
                           int rollout_steps) {
  const int len = segment_length(data, rollout_steps);
  const auto segs = segments(data, len);
  if (segs.empty()) {
    throw std::invalid_argument("rm_irl: dataset has no complete segment");
  }
  MatrixXd real = MatrixXd::Zero(data.n_states, data.n_actions);
  VectorXd start = VectorXd::Zero(data.n_states);
  for (const Segment& seg : segs) {
    const Trajectory& tau = data.trajectories[seg.traj];
    double w = 1.0;
    for (int k = 0; k < len; ++k) {
      real(tau.states[seg.start + k], tau.actions[seg.start + k]) += w;
      w *= sol.discount;
    }
    start(tau.states[seg.start]) += 1.0;
  }
  const double n = static_cast<double>(segs.size());
  real /= n;
  start /= n;
  const TabularMdp model = learner_mdp(theta, sol.discount, start);
  const MatrixXd fake = truncated_occupancy(model, sol.policy, start, len).rho;
  return real - fake;
}

StepGradients exact_gradients(const ThetaParams& theta, const SoftSolution& sol,
                              const Dataset& data, const TrainConfig& cfg) {
  StepGradients out;
  const Linearization lin = linearize(theta, sol);
  const GradientVector loglik = dynamics_loglik_gradient(theta, data);
  switch (cfg.variant) {
    case Variant::bm_irl:
    case Variant::two_stage: {
      const MatrixXd w = bm_weights(lin, data);
      out.reward = pullback(theta, lin, w, 1.0, 0.0);
      out.dynamics = cfg.lambda1 * pullback(theta, lin, w, 0.0, 1.0) + cfg.lambda2 * loglik;
      break;
    }
    case Variant::rm_irl: {
      out.reward = pullback(theta, lin, rm_reward_weights(theta, sol, data, cfg.rollout_steps),
                            1.0, 0.0);
      out.dynamics = cfg.lambda2 * loglik;
      if (cfg.lambda1 != 0.0) {
        out.dynamics -= cfg.lambda1 * pullback(theta, lin, fake_weights(lin, data), 0.0, 1.0);
      }
      break;
    }
  }
  if (cfg.variant == Variant::two_stage) {
    out.dynamics = GradientVector::zeros_like(theta);
  }
  return out;
}

// ---- sampled backend -----------------------------------------------------

enum Purpose : std::uint64_t { pick = 0, real_roll = 1, fake_roll = 2, fake_dyn = 3, real_dyn = 4 };

std::uint64_t sub_seed(std::uint64_t seed, std::uint64_t stream, Purpose p) {
  return mix_seed(seed, stream * 8 + p);
}

std::vector<Transition> pick_transitions(const std::vector<Transition>& all, int n,
                                         std::uint64_t seed) {
  Rng rng(seed, 0);
  std::vector<Transition> out;
  out.reserve(n);
  for (int i = 0; i < n; ++i) out.push_back(all[rng.index(static_cast<int>(all.size()))]);
  return out;
}

StepGradients sampled_gradients(const ThetaParams& theta, const SoftSolution& sol,
                                const Dataset& data, const TrainConfig& cfg,
                                std::uint64_t stream) {
  StepGradients out;
  const auto all = flat_transitions(data);
  if (all.empty()) {
    throw std::invalid_argument("training: dataset has no transitions");
  }
  const int n_actions = theta.n_actions();
  const MatrixXd dynamics = theta.dynamics();
  const GradientVector zero = GradientVector::zeros_like(theta);
  ReinforceOptions ropts;
  ropts.normalize = cfg.normalize_advantages;

  const auto batch = pick_transitions(all, cfg.rollout_batch, sub_seed(cfg.seed, stream, pick));
  std::vector<StateAction> starts;
  starts.reserve(batch.size());
  for (const Transition& tr : batch) starts.push_back({tr.s, tr.a});

  // Reward step.
  GradientAccumulator reward_acc(theta);
  if (cfg.variant == Variant::rm_irl) {
    const int len = segment_length(data, cfg.rollout_steps);
    const auto segs = segments(data, len);
    if (segs.empty()) {
      throw std::invalid_argument("rm_irl: dataset has no complete segment");
    }
    Rng rng(sub_seed(cfg.seed, stream, pick), 1);
    std::vector<Trajectory> real;
    std::vector<StateAction> seg_starts;
    for (int i = 0; i < cfg.rollout_batch; ++i) {
      const Segment& seg = segs[rng.index(static_cast<int>(segs.size()))];
      const Trajectory& tau = data.trajectories[seg.traj];
      real.push_back(slice(tau, seg.start, len));
      seg_starts.push_back({tau.states[seg.start], tau.actions[seg.start]});
    }
    const RolloutBatch fake = branch_rollouts(theta, sol, BranchOrigin::fake_branch, seg_starts,
                                              len, sub_seed(cfg.seed, stream, fake_roll));
    for (std::size_t i = 0; i < real.size(); ++i) {
      GradientVector g = zero;
      accumulate_reward_grad(theta, real[i], sol.discount, 1.0, g.d_reward);
      accumulate_reward_grad(theta, fake.trajectories[i], sol.discount, -1.0, g.d_reward);
      reward_acc.add(g);
    }
  } else {
    const RolloutBatch real = branch_rollouts(theta, sol, BranchOrigin::real_branch, starts,
                                              cfg.rollout_steps,
                                              sub_seed(cfg.seed, stream, real_roll));
    const RolloutBatch fake = branch_rollouts(theta, sol, BranchOrigin::fake_branch, starts,
                                              cfg.rollout_steps,
                                              sub_seed(cfg.seed, stream, fake_roll));
    for (std::size_t i = 0; i < starts.size(); ++i) {
      GradientVector g = zero;
      accumulate_reward_grad(theta, real.trajectories[i], sol.discount, 1.0, g.d_reward);
      accumulate_reward_grad(theta, fake.trajectories[i], sol.discount, -1.0, g.d_reward);
      reward_acc.add(g);
    }
  }
  const GradientEstimate reward_est = reward_acc.estimate();
  out.reward = reward_est.mean;
  out.reward_se = reward_est.std_error;

  // Dynamics step.
  if (cfg.variant == Variant::two_stage) {
    out.dynamics = zero;
    out.dynamics_se = zero;
    return out;
  }
  GradientAccumulator dyn_acc(theta);
  const bool use_ev = cfg.lambda1 != 0.0;
  RolloutBatch real_b;
  RolloutBatch fake_b;
  std::vector<std::vector<double>> real_adv;
  std::vector<std::vector<double>> fake_adv;
  if (use_ev) {
    fake_b = branch_rollouts(theta, sol, BranchOrigin::fake_branch, starts, cfg.rollout_steps,
                             sub_seed(cfg.seed, stream, fake_dyn));
    fake_adv = rollout_advantages(theta, sol, fake_b, ropts);
    if (cfg.variant == Variant::bm_irl) {
      real_b = branch_rollouts(theta, sol, BranchOrigin::real_branch, starts, cfg.rollout_steps,
                               sub_seed(cfg.seed, stream, real_dyn));
      real_adv = rollout_advantages(theta, sol, real_b, ropts);
    }
  }
  for (std::size_t i = 0; i < batch.size(); ++i) {
    GradientVector g = zero;
    if (use_ev) {
      if (cfg.variant == Variant::bm_irl) {
        accumulate_reinforce(dynamics, n_actions, real_b.trajectories[i], real_adv[i],
                             sol.discount, cfg.lambda1, g.d_dynamics);
      }
      accumulate_reinforce(dynamics, n_actions, fake_b.trajectories[i], fake_adv[i], sol.discount,
                           -cfg.lambda1, g.d_dynamics);
    }
    if (cfg.lambda2 != 0.0) {
      const int r = batch[i].s * n_actions + batch[i].a;
      g.d_dynamics.row(r) -= cfg.lambda2 * dynamics.row(r);
      g.d_dynamics(r, batch[i].next) += cfg.lambda2;
    }
    dyn_acc.add(g);
  }
  const GradientEstimate dyn_est = dyn_acc.estimate();
  out.dynamics = dyn_est.mean;
  out.dynamics_se = dyn_est.std_error;
  return out;
}

// ---- loop ------------------------------------------------------------------

SoftSolution inner_solve(const ThetaParams& theta, const TabularMdp& mdp_true,
                         const TrainConfig& cfg, const SoftSolution* prev) {
  const TabularMdp model = learner_mdp(theta, mdp_true.discount, uniform_start(theta.n_states()));
  if (prev != nullptr && cfg.partial_inner_sweeps > 0) {
    return soft_bellman_sweeps(model, prev->v, cfg.partial_inner_sweeps);
  }
  SolverOptions opts;
  opts.tol = cfg.solver_tol;
  try {
    return soft_value_iteration(model, opts, prev != nullptr ? &prev->v : nullptr);
  } catch (const ConvergenceError& e) {
    throw ConvergenceError(std::string("inner solve: ") + e.what(), e.residual(), e.iterations());
  }
}

double expert_gap(const ThetaParams& theta, const SoftSolution& sol, const TabularMdp& mdp_true,
                  const MatrixXd& expert_policy) {
  TabularMdp eval = mdp_true;
  eval.reward = theta.reward();
  return std::abs(discounted_return(eval, sol.policy) - discounted_return(eval, expert_policy));
}

bool finite_theta(const ThetaParams& theta) {
  return theta.reward_logits.allFinite() && theta.dynamics_logits.allFinite();
}

TrainRecord run_loop(const TabularMdp& mdp_true, const Dataset& data, const TrainConfig& cfg,
                     const TrainHooks& hooks, ThetaParams theta) {
  validate(mdp_true);
  if (data.n_states != mdp_true.n_states || data.n_actions != mdp_true.n_actions) {
    throw std::invalid_argument("training: dataset and MDP disagree on S or A");
  }
  if (data.n_transitions() <= 0.0) {
    throw std::invalid_argument("training: dataset has no transitions");
  }

  const MatrixXd expert_policy = soft_value_iteration(mdp_true).policy;
  const int dyn_steps = cfg.variant == Variant::two_stage ? 0 : cfg.dynamics_steps_per_outer;

  TrainRecord record;
  record.variant = cfg.variant;
  record.iterations.reserve(cfg.outer_iters + 1);

  SoftSolution sol;
  bool have_sol = false;
  double prev_lp = 0.0;
  int decreases = 0;

  for (int iter = 0; iter <= cfg.outer_iters; ++iter) {
    sol = inner_solve(theta, mdp_true, cfg, have_sol ? &sol : nullptr);
    have_sol = true;
    // Huge rewards leave V finite but wipe out the precision of q - v.
    if (!sol.v.allFinite() || !is_stochastic_matrix(sol.policy, 1e-8)) {
      throw DivergenceError("non-finite or degenerate inner solution", iter);
    }

    const Linearization lin = linearize(theta, sol);
    IterationRecord rec;
    rec.iter = iter;
    const LogPosterior lp = log_posterior(theta, sol, data);
    rec.log_posterior = lp.value;
    rec.data_dyn_loglik = lp.dynamics_loglik;
    rec.surrogate = (contrast_start_weights(data, sol.policy).array() * energy_table(lin).array())
                        .sum() +
                    theta.lambda * lp.dynamics_loglik;
    rec.expert_gap = expert_gap(theta, sol, mdp_true, expert_policy);

    const bool last = iter == cfg.outer_iters;
    const bool snapshot = last || (cfg.snapshot_every > 0 && iter % cfg.snapshot_every == 0);
    if (snapshot) {
      record.snapshots.push_back({iter, theta});
      if (hooks.illegal_rate) rec.illegal_rate = hooks.illegal_rate(theta, sol);
    }

    if (!std::isfinite(rec.log_posterior) || !std::isfinite(rec.surrogate) ||
        !std::isfinite(rec.expert_gap)) {
      throw DivergenceError("non-finite objective value", iter);
    }
    if (iter > 0 && cfg.divergence_window > 0) {
      decreases = rec.log_posterior < prev_lp ? decreases + 1 : 0;
      if (decreases >= cfg.divergence_window) {
        throw DivergenceError("log posterior decreased for " + std::to_string(decreases) +
                                  " consecutive iterations",
                              iter);
      }
    }
    prev_lp = rec.log_posterior;

    const std::uint64_t stream = static_cast<std::uint64_t>(iter) * 1024;
    StepGradients g = cfg.gradient_backend == GradientBackend::exact
                          ? exact_gradients(theta, sol, data, cfg)
                          : sampled_gradients(theta, sol, data, cfg, stream);
    rec.reward_grad_norm = g.reward.reward_norm();
    if (!g.reward.all_finite()) {
      throw DivergenceError("non-finite reward gradient", iter);
    }

    if (!last) {
      theta.reward_logits += cfg.reward_lr * g.reward.d_reward;
      double dyn_norm = 0.0;
      for (int j = 0; j < dyn_steps; ++j) {
        if (j > 0) {
          // Later dynamics steps see the updated model with pi^ and V frozen.
          g = cfg.gradient_backend == GradientBackend::exact
                  ? exact_gradients(theta, sol, data, cfg)
                  : sampled_gradients(theta, sol, data, cfg, stream + j);
        }
        if (!g.dynamics.all_finite()) {
          throw DivergenceError("non-finite dynamics gradient", iter);
        }
        if (j == 0) dyn_norm = g.dynamics.dynamics_norm();
        theta.dynamics_logits += cfg.dynamics_lr * g.dynamics.d_dynamics;
      }
      rec.dyn_grad_norm = dyn_norm;
      if (!finite_theta(theta)) {
        throw DivergenceError("non-finite parameters", iter);
      }
    } else {
      rec.dyn_grad_norm = dyn_steps > 0 ? g.dynamics.dynamics_norm() : 0.0;
    }
    record.iterations.push_back(rec);
  }

  record.final_theta = theta;
  record.final_solution = sol;
  return record;
}

void require_variant(const TrainConfig& cfg, Variant v) {
  validate(cfg);
  if (cfg.variant != v) {
    throw std::invalid_argument("train config: variant must be " + to_string(v));
  }
}

}  // namespace

StepGradients outer_gradients(const ThetaParams& theta, const SoftSolution& sol,
                              const Dataset& data, const TrainConfig& cfg, std::uint64_t stream) {
  return cfg.gradient_backend == GradientBackend::exact
             ? exact_gradients(theta, sol, data, cfg)
             : sampled_gradients(theta, sol, data, cfg, stream);
}

TrainRecord bm_irl_train(const TabularMdp& mdp_true, const Dataset& data, const TrainConfig& cfg,
                         const TrainHooks& hooks) {
  require_variant(cfg, Variant::bm_irl);
  return run_loop(mdp_true, data, cfg, hooks, initial_theta(data, cfg));
}

TrainRecord rm_irl_train(const TabularMdp& mdp_true, const Dataset& data, const TrainConfig& cfg,
                         const TrainHooks& hooks) {
  require_variant(cfg, Variant::rm_irl);
  return run_loop(mdp_true, data, cfg, hooks, initial_theta(data, cfg));
}

TrainRecord two_stage_train(const TabularMdp& mdp_true, const Dataset& data,
                            const TrainConfig& cfg, const TrainHooks& hooks) {
  require_variant(cfg, Variant::two_stage);
  ThetaParams theta = initial_theta(data, cfg);

  MleSummary mle;
  mle.smoothing = cfg.smoothing;
  mle.total_rows = data.n_states * data.n_actions;
  mle.visited_rows = static_cast<int>((data.sa_counts.array() > 0.0).count());
  mle.data_dyn_loglik = data_dynamics_loglik(theta, data);

  TrainRecord record = run_loop(mdp_true, data, cfg, hooks, std::move(theta));
  record.mle = mle;
  return record;
}

TrainRecord train(const TabularMdp& mdp_true, const Dataset& data, const TrainConfig& cfg,
                  const TrainHooks& hooks) {
  switch (cfg.variant) {
    case Variant::bm_irl:
      return bm_irl_train(mdp_true, data, cfg, hooks);
    case Variant::rm_irl:
      return rm_irl_train(mdp_true, data, cfg, hooks);
    case Variant::two_stage:
      return two_stage_train(mdp_true, data, cfg, hooks);
  }
  throw std::invalid_argument("train: unknown variant");
}

}  // namespace bmirl
