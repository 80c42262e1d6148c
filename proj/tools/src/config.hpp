#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "bmirl/gridworld.hpp"
#include "bmirl/training.hpp"

namespace bmirl::cli {

/// Raised for malformed or inconsistent run configuration.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct ExpertConfig {
  int n_traj = 100;
  int horizon = 50;
  std::uint64_t seed = 0;
};

struct EvalConfig {
  int rollouts = 100;
  int horizon = 50;
};

struct SweepConfig {
  std::vector<double> lambdas{0.001, 0.5, 10.0};
  bool baseline = true;
};

/**
 * One experiment. Sections: [gridworld] [expert] [train] [eval] [sweep]
 * [certify] [input] [output]. Relative paths are resolved against the
 * current directory.
 */
struct RunConfig {
  GridworldSpec grid;
  ExpertConfig expert;
  TrainConfig train;
  EvalConfig eval;
  SweepConfig sweep;
  std::vector<std::string> checkpoints;  ///< paths, or "truth"
  std::filesystem::path data_dir;        ///< empty: same as out_dir
  std::filesystem::path out_dir = "out";

  const std::filesystem::path& input_dir() const { return data_dir.empty() ? out_dir : data_dir; }
};

/// Parses the key = value text. Unknown sections or keys are rejected.
RunConfig parse_config(const std::string& text);
RunConfig load_config(const std::filesystem::path& path);

/// Cross-field checks (grid, expert, eval, train); throws ConfigError.
void check(const RunConfig& cfg);

/// Sets both the expert and the training seed.
void override_seed(RunConfig& cfg, std::uint64_t seed);

}  // namespace bmirl::cli
