#include "reports.hpp"

#include <cmath>

#include "bmirl/io.hpp"

namespace bmirl::cli {

json number(double x) { return std::isfinite(x) ? json(x) : json(nullptr); }

json to_json(const DecompositionReport& rep) {
  return {{"discounted_loglik", number(rep.discounted_loglik)},
          {"ell_theta", number(rep.ell_theta)},
          {"t1", number(rep.t1)},
          {"residual", number(rep.residual)},
          {"epsilon_kl", number(rep.epsilon_kl)}};
}

json to_json(const BoundReport& rep) {
  return {{"eps_policy", number(rep.eps_policy)},
          {"eps_dynamics", number(rep.eps_dynamics)},
          {"density_ratio_c", number(rep.density_ratio_c)},
          {"r_max", number(rep.r_max)},
          {"gamma", number(rep.gamma)},
          {"bound", number(rep.bound)},
          {"observed_gap", number(rep.observed_gap)},
          {"holds", rep.holds},
          {"vacuous", rep.vacuous}};
}

json to_json(const RewardRecoveryReport& rep) {
  return {{"goal_argmax", rep.goal_argmax},
          {"true_argmax", rep.true_argmax},
          {"estimated_argmax", rep.estimated_argmax},
          {"total_variation", number(rep.total_variation)}};
}

json to_json(const MleSummary& mle) {
  return {{"smoothing", number(mle.smoothing)},
          {"data_dyn_loglik", number(mle.data_dyn_loglik)},
          {"visited_rows", mle.visited_rows},
          {"total_rows", mle.total_rows}};
}

json to_json(const GridworldSpec& spec) {
  return {{"width", spec.width},
          {"height", spec.height},
          {"goal", {spec.goal.x, spec.goal.y}},
          {"start", {spec.start.x, spec.start.y}},
          {"goal_logit", spec.goal_logit},
          {"discount", spec.discount}};
}

json to_json(const TrainConfig& cfg) {
  return {{"variant", to_string(cfg.variant)},
          {"gradient_backend", to_string(cfg.gradient_backend)},
          {"lambda1", cfg.lambda1},
          {"lambda2", cfg.lambda2},
          {"effective_lambda", cfg.effective_lambda()},
          {"reward_lr", cfg.reward_lr},
          {"dynamics_lr", cfg.dynamics_lr},
          {"dynamics_steps_per_outer", cfg.dynamics_steps_per_outer},
          {"rollout_batch", cfg.rollout_batch},
          {"rollout_steps", cfg.rollout_steps},
          {"outer_iters", cfg.outer_iters},
          {"seed", cfg.seed},
          {"partial_inner_sweeps", cfg.partial_inner_sweeps},
          {"normalize_advantages", cfg.normalize_advantages},
          {"smoothing", cfg.smoothing}};
}

json theta_json(const ThetaParams& theta) { return json::parse(theta_to_json(theta)); }

std::string training_csv(const std::vector<IterationRecord>& iterations) {
  std::vector<std::vector<std::string>> rows;
  rows.reserve(iterations.size());
  for (const IterationRecord& r : iterations) {
    rows.push_back({std::to_string(r.iter), format_number(r.log_posterior),
                    format_number(r.surrogate), format_number(r.reward_grad_norm),
                    format_number(r.dyn_grad_norm), format_number(r.data_dyn_loglik),
                    r.illegal_rate ? format_number(*r.illegal_rate) : std::string(),
                    format_number(r.expert_gap)});
  }
  return csv_table({"iter", "log_posterior", "surrogate", "reward_grad_norm", "dyn_grad_norm",
                    "data_dyn_loglik", "illegal_rate", "expert_gap"},
                   rows);
}

std::string dump(const json& doc) { return doc.dump(2) + "\n"; }

}  // namespace bmirl::cli
