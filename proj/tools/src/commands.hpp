#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "bmirl/analysis.hpp"
#include "bmirl/dataset.hpp"
#include "bmirl/gridworld.hpp"
#include "bmirl/training.hpp"
#include "config.hpp"

namespace bmirl::cli {

enum ExitCode : int {
  kOk = 0,
  kConfigError = 2,
  kSolverFailure = 3,
  kDivergence = 4,
  kIoError = 5,
};

/// Maps the exception currently being handled to an exit code.
int exit_code_for_current_exception();

/// mdp.json, expert_policy.json and dataset.jsonl from the input directory.
struct Inputs {
  TabularMdp mdp;
  MatrixXd expert_policy;
  Dataset data;
};

Inputs load_inputs(const RunConfig& cfg);

struct EvalSummary {
  double illegal_rate = 0.0;
  RewardRecoveryReport recovery;
  BoundReport bound;
  double data_dyn_loglik = 0.0;
  double expert_gap = 0.0;
  double final_log_posterior = 0.0;
};

/// Illegal-transition rate of `eval.rollouts` imagined rollouts, reward
/// recovery against the true MDP and the performance bound.
EvalSummary evaluate(const RunConfig& cfg, const Inputs& in, const TrainRecord& record);

/// Illegal-transition rate of the imagined rollouts used by `evaluate`.
double imagined_illegal_rate(const RunConfig& cfg, const ThetaParams& theta,
                             const SoftSolution& sol, const VectorXd& init_dist);

void cmd_gen_expert(const RunConfig& cfg);

/// Trains cfg.train.variant and writes training.csv, theta.json,
/// snapshots.json and eval.json into `out_dir`.
EvalSummary train_into(const RunConfig& cfg, const Inputs& in,
                       const std::filesystem::path& out_dir);

void cmd_train(const RunConfig& cfg);

/// Returns 0 when every grid point succeeded, else the exit code of the
/// first failure. Completed points are written either way.
int cmd_sweep_lambda(const RunConfig& cfg);

void cmd_certify(const RunConfig& cfg);

/// Entry point shared by the binary and the tests.
int run(int argc, const char* const* argv);

}  // namespace bmirl::cli
