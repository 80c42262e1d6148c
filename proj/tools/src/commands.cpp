#include "commands.hpp"

#include <filesystem>
#include <iostream>
#include <optional>

#include "CLI11.hpp"
#include "bmirl/errors.hpp"
#include "bmirl/estimation.hpp"
#include "bmirl/io.hpp"
#include "bmirl/occupancy.hpp"
#include "bmirl/params.hpp"
#include "bmirl/random.hpp"
#include "bmirl/sampling.hpp"
#include "bmirl/soft_solver.hpp"
#include "reports.hpp"

namespace bmirl::cli {

namespace fs = std::filesystem;

namespace {

constexpr std::uint64_t kEvalStream = 0x6576616c;  // "eval"

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) {
    throw std::runtime_error("cannot create output directory " + dir.string());
  }
}

std::string lambda_label(double lambda) { return format_number(lambda); }

std::string checkpoint_name(const std::string& checkpoint) {
  if (checkpoint == "truth") return "truth";
  const fs::path p(checkpoint);
  if (p.filename() == "theta.json" && p.has_parent_path() && !p.parent_path().filename().empty()) {
    return p.parent_path().filename().string();
  }
  return p.stem().string();
}

void log(const std::string& msg) { std::cerr << "bmirl: " << msg << '\n'; }

}  // namespace

int exit_code_for_current_exception() {
  try {
    throw;
  } catch (const ConfigError& e) {
    log("config error: " + std::string(e.what()));
    return kConfigError;
  } catch (const ConvergenceError& e) {
    log("solver failure: " + std::string(e.what()) + " (residual " + format_number(e.residual()) +
        ")");
    return kSolverFailure;
  } catch (const SolveError& e) {
    log("solver failure: " + std::string(e.what()));
    return kSolverFailure;
  } catch (const DivergenceError& e) {
    log("divergence at iteration " + std::to_string(e.iteration()) + ": " + e.what());
    return kDivergence;
  } catch (const SchemaError& e) {
    log("schema error in field '" + e.field() + "': " + e.what());
    return kIoError;
  } catch (const fs::filesystem_error& e) {
    log(std::string("I/O error: ") + e.what());
    return kIoError;
  } catch (const std::invalid_argument& e) {
    log(std::string("invalid input: ") + e.what());
    return kConfigError;
  } catch (const std::runtime_error& e) {
    log(std::string("I/O error: ") + e.what());
    return kIoError;
  } catch (const std::exception& e) {
    log(std::string("error: ") + e.what());
    return 1;
  } catch (...) {
    log("error: unknown exception");
    return 1;
  }
}

Inputs load_inputs(const RunConfig& cfg) {
  const fs::path dir = cfg.input_dir();
  Inputs in;
  in.mdp = mdp_from_json(read_text(dir / "mdp.json"));
  in.expert_policy = policy_from_json(read_text(dir / "expert_policy.json"));
  in.data =
      dataset_from_jsonl(read_text(dir / "dataset.jsonl"), in.mdp.n_states, in.mdp.n_actions);
  if (in.mdp.n_states != cfg.grid.n_states()) {
    throw ConfigError("[gridworld] size does not match " + (dir / "mdp.json").string());
  }
  if (in.expert_policy.rows() != in.mdp.n_states || in.expert_policy.cols() != in.mdp.n_actions) {
    throw SchemaError("policy", "shape does not match mdp.json");
  }
  return in;
}

double imagined_illegal_rate(const RunConfig& cfg, const ThetaParams& theta,
                             const SoftSolution& sol, const VectorXd& init_dist) {
  const auto rollouts = imagined_rollouts(theta, sol, init_dist, cfg.eval.rollouts,
                                          cfg.eval.horizon, mix_seed(cfg.train.seed, kEvalStream));
  return illegal_transition_rate(cfg.grid, rollouts);
}

EvalSummary evaluate(const RunConfig& cfg, const Inputs& in, const TrainRecord& record) {
  EvalSummary out;
  const ThetaParams& theta = record.final_theta;
  out.illegal_rate =
      imagined_illegal_rate(cfg, theta, record.final_solution, in.mdp.init_dist);
  out.recovery = reward_recovery_error(in.mdp.reward, theta.reward_logits.col(0));
  out.bound = performance_bound(theta, in.mdp, in.expert_policy);
  out.data_dyn_loglik = data_dynamics_loglik(theta, in.data);
  out.expert_gap = record.iterations.empty() ? 0.0 : record.iterations.back().expert_gap;
  out.final_log_posterior =
      record.iterations.empty() ? 0.0 : record.iterations.back().log_posterior;
  return out;
}

void cmd_gen_expert(const RunConfig& cfg) {
  ensure_dir(cfg.out_dir);
  const TabularMdp mdp = build_gridworld(cfg.grid);
  const SoftSolution expert = soft_value_iteration(mdp);
  const Dataset data =
      generate_expert_dataset(mdp, cfg.expert.n_traj, cfg.expert.horizon, cfg.expert.seed);

  write_text(cfg.out_dir / "mdp.json", mdp_to_json(mdp));
  write_text(cfg.out_dir / "expert_policy.json", policy_to_json(expert.policy));
  write_text(cfg.out_dir / "dataset.jsonl", dataset_to_jsonl(data));

  json manifest;
  manifest["command"] = "gen-expert";
  manifest["seed"] = cfg.expert.seed;
  manifest["n_traj"] = cfg.expert.n_traj;
  manifest["horizon"] = cfg.expert.horizon;
  manifest["n_transitions"] = static_cast<long long>(data.n_transitions());
  manifest["solver_residual"] = number(expert.bellman_residual);
  manifest["solver_iterations"] = expert.iterations;
  manifest["gridworld"] = to_json(cfg.grid);
  manifest["files"] = {"mdp.json", "expert_policy.json", "dataset.jsonl"};
  write_text(cfg.out_dir / "manifest.json", dump(manifest));
  log("wrote " + std::to_string(cfg.expert.n_traj) + " trajectories to " + cfg.out_dir.string());
}

EvalSummary train_into(const RunConfig& cfg, const Inputs& in, const fs::path& out_dir) {
  ensure_dir(out_dir);
  TrainHooks hooks;
  hooks.illegal_rate = [&](const ThetaParams& theta, const SoftSolution& sol) {
    return imagined_illegal_rate(cfg, theta, sol, in.mdp.init_dist);
  };
  const TrainRecord record = train(in.mdp, in.data, cfg.train, hooks);
  const EvalSummary summary = evaluate(cfg, in, record);

  write_text(out_dir / "training.csv", training_csv(record.iterations));
  write_text(out_dir / "theta.json", theta_to_json(record.final_theta));

  json snaps = json::array();
  for (const Snapshot& s : record.snapshots) {
    snaps.push_back({{"iter", s.iter}, {"theta", theta_json(s.theta)}});
  }
  write_text(out_dir / "snapshots.json", dump(snaps));

  json report;
  report["config"] = to_json(cfg.train);
  report["illegal_transition_rate"] = number(summary.illegal_rate);
  report["eval_rollouts"] = cfg.eval.rollouts;
  report["eval_horizon"] = cfg.eval.horizon;
  report["reward_recovery"] = to_json(summary.recovery);
  report["performance_bound"] = to_json(summary.bound);
  report["data_dyn_loglik"] = number(summary.data_dyn_loglik);
  report["expert_gap"] = number(summary.expert_gap);
  report["final_log_posterior"] = number(summary.final_log_posterior);
  if (record.mle) report["mle"] = to_json(*record.mle);
  write_text(out_dir / "eval.json", dump(report));
  return summary;
}

void cmd_train(const RunConfig& cfg) {
  const Inputs in = load_inputs(cfg);
  const EvalSummary s = train_into(cfg, in, cfg.out_dir);
  log(to_string(cfg.train.variant) + ": illegal rate " + format_number(s.illegal_rate) +
      ", goal argmax " + (s.recovery.goal_argmax ? "yes" : "no"));
}

int cmd_sweep_lambda(const RunConfig& cfg) {
  const Inputs in = load_inputs(cfg);
  ensure_dir(cfg.out_dir);

  std::vector<std::vector<std::string>> rows;
  std::vector<std::vector<std::string>> failures;
  int first_failure = kOk;

  auto run_point = [&](const std::string& label, const RunConfig& point, const fs::path& dir) {
    try {
      check(point);
      const EvalSummary s = train_into(point, in, dir);
      rows.push_back({label, format_number(s.illegal_rate), s.recovery.goal_argmax ? "true" : "false",
                      format_number(s.recovery.total_variation), format_number(s.data_dyn_loglik),
                      format_number(s.expert_gap)});
      log("lambda " + label + ": illegal rate " + format_number(s.illegal_rate));
    } catch (...) {
      const int code = exit_code_for_current_exception();
      std::string what = "unknown error";
      try {
        throw;
      } catch (const std::exception& e) {
        what = e.what();
      } catch (...) {
      }
      for (char& c : what) {
        if (c == ',' || c == '\n') c = ';';
      }
      failures.push_back({label, std::to_string(code), what});
      if (first_failure == kOk) first_failure = code;
    }
  };

  for (double lambda : cfg.sweep.lambdas) {
    RunConfig point = cfg;
    point.train.lambda2 = lambda * (cfg.train.lambda1 > 0.0 ? cfg.train.lambda1 : 1.0);
    run_point(lambda_label(lambda), point, cfg.out_dir / ("lambda_" + lambda_label(lambda)));
  }
  if (cfg.sweep.baseline) {
    RunConfig point = cfg;
    point.train.variant = Variant::two_stage;
    run_point("two_stage", point, cfg.out_dir / "two_stage");
  }

  write_text(cfg.out_dir / "sweep.csv",
             csv_table({"lambda", "illegal_rate", "goal_argmax", "tv_to_true_reward",
                        "data_dyn_loglik", "expert_gap"},
                       rows));
  if (!failures.empty()) {
    write_text(cfg.out_dir / "sweep_failures.csv",
               csv_table({"lambda", "exit_code", "error"}, failures));
  }
  return first_failure;
}

void cmd_certify(const RunConfig& cfg) {
  if (cfg.checkpoints.empty()) {
    throw ConfigError("[certify] checkpoints is empty");
  }
  const Inputs in = load_inputs(cfg);
  ensure_dir(cfg.out_dir);
  const double gamma = in.mdp.discount;

  for (const std::string& cp : cfg.checkpoints) {
    ThetaParams theta;
    if (cp == "truth") {
      theta = theta_from_mdp(in.mdp, target_logits(cfg.grid), 1.0);
    } else {
      if (!fs::exists(cp)) {
        throw std::runtime_error("missing checkpoint " + cp);
      }
      theta = theta_from_json(read_text(cp));
      if (theta.n_states() != in.mdp.n_states || theta.n_actions() != in.mdp.n_actions) {
        throw SchemaError("dynamics_logits", "shape does not match mdp.json");
      }
    }

    const DecompositionReport dec = decompose_likelihood(theta, in.mdp, in.expert_policy);
    const double t1b =
        t1_bound_value(gamma, reward_bound(theta.reward()), dec.epsilon_kl);
    const BoundReport bound = performance_bound(theta, in.mdp, in.expert_policy);

    // Witness: move half of the most frequent observed successor's mass
    // elsewhere, compensating in the reward.
    Eigen::Index row = 0;
    Eigen::Index from = 0;
    in.data.counts.maxCoeff(&row, &from);
    const int n_actions = in.mdp.n_actions;
    const int s = static_cast<int>(row) / n_actions;
    const int a = static_cast<int>(row) % n_actions;
    const int to = (static_cast<int>(from) + 1) % in.mdp.n_states;
    const double amount = 0.5 * theta.dynamics()(row, from);
    ThetaParams base = theta;
    base.lambda = 1.0;
    const WitnessResult w = unidentifiability_witness(
        base, mass_shift(in.mdp.n_states, n_actions, s, a, static_cast<int>(from), to, amount),
        gamma);
    const double lp_before = log_posterior(base, in.data, gamma).value;
    const double lp_after = log_posterior(w.theta, in.data, gamma).value;

    json doc;
    doc["checkpoint"] = cp;
    doc["decomposition"] = to_json(dec);
    doc["t1_check"] = {{"t1", number(dec.t1)},
                       {"bound", number(t1b)},
                       {"holds", std::abs(dec.t1) <= t1b + 1e-12}};
    doc["performance_bound"] = to_json(bound);
    doc["witness"] = {{"state", s},
                      {"action", a},
                      {"from", from},
                      {"to", to},
                      {"amount", number(amount)},
                      {"lambda", 1.0},
                      {"policy_distance", number(w.policy_distance)},
                      {"q_distance", number(w.q_distance)},
                      {"v_distance", number(w.v_distance)},
                      {"log_posterior_before", number(lp_before)},
                      {"log_posterior_after", number(lp_after)}};
    const fs::path out = cfg.out_dir / ("certify_" + checkpoint_name(cp) + ".json");
    write_text(out, dump(doc));
    log("certified " + cp + ": bound " + (bound.holds ? "holds" : "VIOLATED"));
  }
}

int run(int argc, const char* const* argv) {
  CLI::App app{"Bayesian model-based inverse RL on tabular MDPs"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir;
  std::optional<std::uint64_t> seed;
  std::string variant;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "run configuration file")->required();
    sub->add_option("--out", out_dir, "output directory (overrides [output] dir)");
    sub->add_option("--seed", seed, "seed for expert data and training");
    sub->add_option("--variant", variant, "bm_irl, rm_irl or two_stage")
        ->check(CLI::IsMember({"bm_irl", "rm_irl", "two_stage"}));
  };
  CLI::App* gen = app.add_subcommand("gen-expert", "generate expert MDP, policy and dataset");
  CLI::App* tr = app.add_subcommand("train", "train one agent");
  CLI::App* sweep = app.add_subcommand("sweep-lambda", "train over the lambda grid");
  CLI::App* cert = app.add_subcommand("certify", "check the theory on checkpoints");
  for (CLI::App* sub : {gen, tr, sweep, cert}) add_common(sub);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kConfigError;
  }

  try {
    RunConfig cfg = load_config(config_path);
    if (!out_dir.empty()) cfg.out_dir = out_dir;
    if (seed) override_seed(cfg, *seed);
    if (!variant.empty()) cfg.train.variant = parse_variant(variant);
    check(cfg);

    if (gen->parsed()) {
      cmd_gen_expert(cfg);
    } else if (tr->parsed()) {
      cmd_train(cfg);
    } else if (sweep->parsed()) {
      return cmd_sweep_lambda(cfg);
    } else {
      cmd_certify(cfg);
    }
    return kOk;
  } catch (...) {
    return exit_code_for_current_exception();
  }
}

}  // namespace bmirl::cli
