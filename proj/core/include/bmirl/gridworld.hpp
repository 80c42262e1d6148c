#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include "bmirl/dataset.hpp"
#include "bmirl/mdp.hpp"

namespace bmirl {

struct Cell {
  int x = 0;  ///< column, 0 = left
  int y = 0;  ///< row, 0 = bottom
  friend bool operator==(const Cell&, const Cell&) = default;
};

enum class Move : int { up = 0, down = 1, left = 2, right = 3 };
inline constexpr std::array<Move, 4> kMoves = {Move::up, Move::down, Move::left, Move::right};

/// Wall-directed moves leave the agent in place.
enum class BoundaryRule { stay_in_place };

/**
 * Deterministic grid with a single target cell. The true reward is
 * R(s) = log softmax(logits)[s] with `goal_logit` at the goal and 0 elsewhere.
 * State index of cell (x, y) is y * width + x.
 */
struct GridworldSpec {
  int width = 5;
  int height = 5;
  Cell goal{4, 4};
  Cell start{0, 0};
  double goal_logit = 20.0;
  double discount = 0.7;
  BoundaryRule boundary_rule = BoundaryRule::stay_in_place;

  /// Goal in the upper-right corner, start in the lower-left.
  static GridworldSpec corner_to_corner(int width, int height);

  int n_states() const { return width * height; }
  int index(Cell c) const { return c.y * width + c.x; }
  Cell cell(int s) const { return {s % width, s / width}; }
};

void validate(const GridworldSpec& spec);

int successor(const GridworldSpec& spec, int s, Move move);

/// {4-neighbourhood within the grid} plus the cell itself, sorted.
std::vector<int> legal_successors(const GridworldSpec& spec, int s);
bool is_legal_transition(const GridworldSpec& spec, int s, int next);

/// Target-state logits (goal_logit at the goal, 0 elsewhere).
VectorXd target_logits(const GridworldSpec& spec);

TabularMdp build_gridworld(const GridworldSpec& spec);

/// Trajectories from the soft-optimal policy of `mdp`, s_0 ~ init_dist.
/// Trajectory i uses the random stream (seed, i).
Dataset generate_expert_dataset(const TabularMdp& mdp, int n_traj, int horizon,
                                std::uint64_t seed);

/// Fraction of consecutive state pairs that leave the legal successor set.
/// Throws std::invalid_argument when there is no transition to score.
double illegal_transition_rate(const GridworldSpec& spec, std::span<const Trajectory> rollouts);

/// Probability mass that `dynamics` ((S*A) x S) puts on illegal successors,
/// averaged over all rows. Diagnostic companion of illegal_transition_rate.
double illegal_mass(const GridworldSpec& spec, const MatrixXd& dynamics, int n_actions);

struct RewardRecoveryReport {
  bool goal_argmax = false;
  int true_argmax = 0;
  int estimated_argmax = 0;
  double total_variation = 0.0;
};

/// `true_reward` is S x A (state-only rewards repeated over actions) holding
/// log target probabilities; `est_logits` are the learner's state logits.
RewardRecoveryReport reward_recovery_error(const MatrixXd& true_reward, const VectorXd& est_logits);

}  // namespace bmirl
