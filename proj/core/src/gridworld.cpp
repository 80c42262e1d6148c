#include "bmirl/gridworld.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "bmirl/random.hpp"
#include "bmirl/soft_solver.hpp"

namespace bmirl {

GridworldSpec GridworldSpec::corner_to_corner(int width, int height) {
  GridworldSpec spec;
  spec.width = width;
  spec.height = height;
  spec.goal = {width - 1, height - 1};
  spec.start = {0, 0};
  return spec;
}

void validate(const GridworldSpec& spec) {
  if (spec.width < 2 || spec.height < 2) {
    throw std::invalid_argument("gridworld: width and height must be at least 2");
  }
  auto inside = [&](Cell c) {
    return c.x >= 0 && c.x < spec.width && c.y >= 0 && c.y < spec.height;
  };
  if (!inside(spec.goal) || !inside(spec.start)) {
    throw std::invalid_argument("gridworld: goal and start must lie inside the grid");
  }
  if (!std::isfinite(spec.goal_logit)) {
    throw std::invalid_argument("gridworld: goal_logit must be finite");
  }
  if (!(spec.discount > 0.0 && spec.discount < 1.0)) {
    throw std::invalid_argument("gridworld: discount must lie in (0, 1)");
  }
}

int successor(const GridworldSpec& spec, int s, Move move) {
  Cell c = spec.cell(s);
  switch (move) {
    case Move::up:
      c.y = std::min(c.y + 1, spec.height - 1);
      break;
    case Move::down:
      c.y = std::max(c.y - 1, 0);
      break;
    case Move::left:
      c.x = std::max(c.x - 1, 0);
      break;
    case Move::right:
      c.x = std::min(c.x + 1, spec.width - 1);
      break;
  }
  return spec.index(c);
}

std::vector<int> legal_successors(const GridworldSpec& spec, int s) {
  std::vector<int> out{s};
  for (Move m : kMoves) {
    out.push_back(successor(spec, s, m));
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

bool is_legal_transition(const GridworldSpec& spec, int s, int next) {
  const Cell a = spec.cell(s);
  const Cell b = spec.cell(next);
  return std::abs(a.x - b.x) + std::abs(a.y - b.y) <= 1;
}

VectorXd target_logits(const GridworldSpec& spec) {
  VectorXd logits = VectorXd::Zero(spec.n_states());
  logits(spec.index(spec.goal)) = spec.goal_logit;
  return logits;
}

TabularMdp build_gridworld(const GridworldSpec& spec) {
  validate(spec);
  TabularMdp mdp;
  mdp.n_states = spec.n_states();
  mdp.n_actions = static_cast<int>(kMoves.size());
  mdp.discount = spec.discount;
  mdp.transition = MatrixXd::Zero(mdp.n_pairs(), mdp.n_states);
  for (int s = 0; s < mdp.n_states; ++s) {
    for (int a = 0; a < mdp.n_actions; ++a) {
      mdp.transition(mdp.row(s, a), successor(spec, s, kMoves[a])) = 1.0;
    }
  }

  const VectorXd logits = target_logits(spec);
  const double max_logit = logits.maxCoeff();
  const double lse = max_logit + std::log((logits.array() - max_logit).exp().sum());
  mdp.reward = (logits.array() - lse).matrix().replicate(1, mdp.n_actions);

  mdp.init_dist = VectorXd::Zero(mdp.n_states);
  mdp.init_dist(spec.index(spec.start)) = 1.0;
  return mdp;
}

Dataset generate_expert_dataset(const TabularMdp& mdp, int n_traj, int horizon,
                                std::uint64_t seed) {
  if (n_traj < 0 || horizon < 0) {
    throw std::invalid_argument("generate_expert_dataset: counts must be non-negative");
  }
  std::vector<Trajectory> trajectories;
  trajectories.reserve(n_traj);
  if (n_traj > 0) {
    const SoftSolution expert = soft_value_iteration(mdp);
    for (int i = 0; i < n_traj; ++i) {
      Rng rng(seed, static_cast<std::uint64_t>(i));
      Trajectory tau;
      tau.states.reserve(horizon + 1);
      tau.actions.reserve(horizon);
      int s = rng.categorical(mdp.init_dist);
      tau.states.push_back(s);
      for (int t = 0; t < horizon; ++t) {
        const int a = rng.categorical(expert.policy.row(s));
        s = rng.categorical(mdp.transition.row(mdp.row(s, a)));
        tau.actions.push_back(a);
        tau.states.push_back(s);
      }
      trajectories.push_back(std::move(tau));
    }
  }
  return make_dataset(std::move(trajectories), mdp.n_states, mdp.n_actions);
}

double illegal_transition_rate(const GridworldSpec& spec, std::span<const Trajectory> rollouts) {
  long total = 0;
  long illegal = 0;
  for (const Trajectory& tau : rollouts) {
    for (std::size_t t = 0; t + 1 < tau.states.size(); ++t) {
      ++total;
      if (!is_legal_transition(spec, tau.states[t], tau.states[t + 1])) {
        ++illegal;
      }
    }
  }
  if (total == 0) {
    throw std::invalid_argument("illegal_transition_rate: no transitions to score");
  }
  return static_cast<double>(illegal) / static_cast<double>(total);
}

double illegal_mass(const GridworldSpec& spec, const MatrixXd& dynamics, int n_actions) {
  double mass = 0.0;
  for (int s = 0; s < spec.n_states(); ++s) {
    for (int a = 0; a < n_actions; ++a) {
      for (int next = 0; next < spec.n_states(); ++next) {
        if (!is_legal_transition(spec, s, next)) {
          mass += dynamics(s * n_actions + a, next);
        }
      }
    }
  }
  return mass / (spec.n_states() * n_actions);
}

RewardRecoveryReport reward_recovery_error(const MatrixXd& true_reward, const VectorXd& est_logits) {
  if (true_reward.rows() != est_logits.size() || true_reward.cols() < 1) {
    throw std::invalid_argument("reward_recovery_error: shape mismatch");
  }
  auto softmax = [](const VectorXd& x) {
    const VectorXd e = (x.array() - x.maxCoeff()).exp();
    return VectorXd(e / e.sum());
  };
  const VectorXd truth = softmax(true_reward.col(0));
  const VectorXd est = softmax(est_logits);

  RewardRecoveryReport report;
  truth.maxCoeff(&report.true_argmax);
  est_logits.maxCoeff(&report.estimated_argmax);
  report.goal_argmax = report.true_argmax == report.estimated_argmax;
  report.total_variation = 0.5 * (truth - est).cwiseAbs().sum();
  return report;
}

}  // namespace bmirl
