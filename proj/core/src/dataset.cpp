#include "bmirl/dataset.hpp"

#include <stdexcept>
#include <string>

namespace bmirl {

Dataset make_dataset(std::vector<Trajectory> trajectories, int n_states, int n_actions) {
  if (n_states <= 0 || n_actions <= 0) {
    throw std::invalid_argument("dataset: n_states and n_actions must be positive");
  }
  Dataset data;
  data.n_states = n_states;
  data.n_actions = n_actions;
  data.counts = MatrixXd::Zero(n_states * n_actions, n_states);
  data.sa_counts = MatrixXd::Zero(n_states, n_actions);
  for (std::size_t i = 0; i < trajectories.size(); ++i) {
    const Trajectory& tau = trajectories[i];
    if (tau.states.size() != tau.actions.size() + 1) {
      throw std::invalid_argument("dataset: trajectory " + std::to_string(i) +
                                  " must have one more state than actions");
    }
    for (int s : tau.states) {
      if (s < 0 || s >= n_states) {
        throw std::invalid_argument("dataset: state index out of range in trajectory " +
                                    std::to_string(i));
      }
    }
    for (std::size_t t = 0; t < tau.actions.size(); ++t) {
      const int a = tau.actions[t];
      if (a < 0 || a >= n_actions) {
        throw std::invalid_argument("dataset: action index out of range in trajectory " +
                                    std::to_string(i));
      }
      const int s = tau.states[t];
      data.counts(s * n_actions + a, tau.states[t + 1]) += 1.0;
      data.sa_counts(s, a) += 1.0;
    }
  }
  data.trajectories = std::move(trajectories);
  return data;
}

VectorXd Dataset::state_marginal() const {
  const double total = n_transitions();
  if (total <= 0.0) {
    throw std::invalid_argument("dataset: empty dataset has no marginal");
  }
  return sa_counts.rowwise().sum() / total;
}

MatrixXd Dataset::pair_marginal() const {
  const double total = n_transitions();
  if (total <= 0.0) {
    throw std::invalid_argument("dataset: empty dataset has no marginal");
  }
  return sa_counts / total;
}

MatrixXd smoothed_transition_estimate(const Dataset& data, double smoothing) {
  if (smoothing < 0.0) {
    throw std::invalid_argument("smoothed_transition_estimate: smoothing must be >= 0");
  }
  MatrixXd est(data.counts.rows(), data.counts.cols());
  for (Eigen::Index r = 0; r < data.counts.rows(); ++r) {
    const double total = data.counts.row(r).sum() + smoothing * static_cast<double>(data.n_states);
    if (total <= 0.0) {
      est.row(r).setConstant(1.0 / data.n_states);
    } else {
      est.row(r) = (data.counts.row(r).array() + smoothing) / total;
    }
  }
  return est;
}

MatrixXd empirical_discounted_occupancy(const Dataset& data, double gamma) {
  MatrixXd rho = MatrixXd::Zero(data.n_states, data.n_actions);
  if (data.trajectories.empty()) {
    throw std::invalid_argument("empirical_discounted_occupancy: empty dataset");
  }
  for (const Trajectory& tau : data.trajectories) {
    double w = 1.0;
    for (std::size_t t = 0; t < tau.actions.size(); ++t) {
      rho(tau.states[t], tau.actions[t]) += w;
      w *= gamma;
    }
  }
  return rho / static_cast<double>(data.trajectories.size());
}

}  // namespace bmirl
