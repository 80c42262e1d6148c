#pragma once

#include <string>
#include <vector>

#include "bmirl/analysis.hpp"
#include "bmirl/gridworld.hpp"
#include "bmirl/training.hpp"
#include "json.hpp"

namespace bmirl::cli {

using nlohmann::json;

/// Non-finite numbers become null.
json number(double x);

json to_json(const DecompositionReport& rep);
json to_json(const BoundReport& rep);
json to_json(const RewardRecoveryReport& rep);
json to_json(const MleSummary& mle);
json to_json(const GridworldSpec& spec);
json to_json(const TrainConfig& cfg);
json theta_json(const ThetaParams& theta);

/// Header and rows of the per-iteration training CSV.
std::string training_csv(const std::vector<IterationRecord>& iterations);

/// Two-space indented dump with a trailing newline.
std::string dump(const json& doc);

}  // namespace bmirl::cli
