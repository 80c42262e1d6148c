#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "bmirl/dataset.hpp"
#include "bmirl/mdp.hpp"
#include "bmirl/params.hpp"

namespace bmirl {

/// Shortest decimal that round-trips to the same double ("nan", "inf", "-inf"
/// for non-finite values).
std::string format_number(double x);

// All loaders throw SchemaError naming the offending field when a document
// is malformed, and std::runtime_error when the file cannot be opened.

/// {n_states, n_actions, transition[s][a][s'], reward[s][a], init_dist, discount}.
std::string mdp_to_json(const TabularMdp& mdp);
/// Probabilities are validated to 1e-9; rows are renormalized afterwards.
TabularMdp mdp_from_json(const std::string& text);

/// {n_states, n_actions, policy[s][a]}.
std::string policy_to_json(const MatrixXd& policy);
MatrixXd policy_from_json(const std::string& text);

/// One `{"states":[...],"actions":[...]}` object per line.
std::string dataset_to_jsonl(const Dataset& data);
Dataset dataset_from_jsonl(const std::string& text, int n_states, int n_actions);

/// {reward_mode, n_states, n_actions, reward_logits, dynamics_logits[s][a][s'], lambda}.
std::string theta_to_json(const ThetaParams& theta);
ThetaParams theta_from_json(const std::string& text);

std::string read_text(const std::filesystem::path& path);
/// Writes atomically enough for our purposes: truncate, write, check.
void write_text(const std::filesystem::path& path, const std::string& text);

/// Comma-separated table with a header row; cells are written verbatim.
std::string csv_table(const std::vector<std::string>& header,
                      const std::vector<std::vector<std::string>>& rows);

}  // namespace bmirl
