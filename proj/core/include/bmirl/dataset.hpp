#pragma once

#include <vector>

#include "bmirl/mdp.hpp"

namespace bmirl {

/// s_0..s_T and a_0..a_{T-1}.
struct Trajectory {
  std::vector<int> states;
  std::vector<int> actions;

  int length() const { return static_cast<int>(actions.size()); }
  friend bool operator==(const Trajectory&, const Trajectory&) = default;
};

/// Expert demonstrations plus their sufficient statistics.
struct Dataset {
  int n_states = 0;
  int n_actions = 0;
  std::vector<Trajectory> trajectories;
  /// N(s, a, s') stored as (S*A) x S, same row convention as TabularMdp.
  MatrixXd counts;
  /// N(s, a), S x A.
  MatrixXd sa_counts;

  double n_transitions() const { return sa_counts.sum(); }
  /// Empirical state marginal N(s) / NT over transition origins.
  VectorXd state_marginal() const;
  /// N(s, a) / NT.
  MatrixXd pair_marginal() const;
};

/// Validates indices and tallies counts. Throws std::invalid_argument on
/// out-of-range indices or inconsistent lengths.
Dataset make_dataset(std::vector<Trajectory> trajectories, int n_states, int n_actions);

/// Row-wise transition frequencies with additive (Laplace) smoothing;
/// unvisited rows become uniform when smoothing > 0.
MatrixXd smoothed_transition_estimate(const Dataset& data, double smoothing);

/// (1/N) sum_i sum_{t<T_i} gamma^t 1[(s_t, a_t)] over the recorded trajectories.
MatrixXd empirical_discounted_occupancy(const Dataset& data, double gamma);

}  // namespace bmirl
