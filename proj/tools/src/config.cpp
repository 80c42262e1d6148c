#include "config.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

namespace bmirl::cli {
namespace {

namespace pt = boost::property_tree;

const std::map<std::string, std::set<std::string>> kKeys = {
    {"gridworld",
     {"width", "height", "goal_x", "goal_y", "start_x", "start_y", "goal_logit", "discount"}},
    {"expert", {"n_traj", "horizon", "seed"}},
    {"train",
     {"variant", "gradient_backend", "lambda1", "lambda2", "reward_lr", "dynamics_lr",
      "dynamics_steps_per_outer", "rollout_batch", "rollout_steps", "outer_iters", "seed",
      "partial_inner_sweeps", "normalize_advantages", "smoothing", "solver_tol", "snapshot_every",
      "divergence_window"}},
    {"eval", {"rollouts", "horizon"}},
    {"sweep", {"lambdas", "baseline"}},
    {"certify", {"checkpoints"}},
    {"input", {"data_dir"}},
    {"output", {"dir"}},
};

std::string trim(std::string s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  s = s.substr(b, e - b + 1);
  if (s.size() >= 2 && (s.front() == '"' || s.front() == '\'') && s.back() == s.front()) {
    s = s.substr(1, s.size() - 2);
  }
  return s;
}

class Section {
 public:
  Section(const pt::ptree* tree, std::string name) : tree_(tree), name_(std::move(name)) {}

  bool has(const std::string& key) const {
    return tree_ != nullptr && tree_->find(key) != tree_->not_found();
  }

  std::string text(const std::string& key) const { return trim(tree_->get<std::string>(key)); }

  template <class T>
  void read(const std::string& key, T& out) const {
    if (!has(key)) return;
    const std::string s = text(key);
    if constexpr (std::is_same_v<T, std::string>) {
      out = s;
    } else if constexpr (std::is_same_v<T, bool>) {
      if (s == "true") {
        out = true;
      } else if (s == "false") {
        out = false;
      } else {
        fail(key, "expected true or false");
      }
    } else {
      T value{};
      const auto res = std::from_chars(s.data(), s.data() + s.size(), value);
      if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
        fail(key, "cannot parse '" + s + "'");
      }
      out = value;
    }
  }

  [[noreturn]] void fail(const std::string& key, const std::string& msg) const {
    throw ConfigError("[" + name_ + "] " + key + ": " + msg);
  }

 private:
  const pt::ptree* tree_;
  std::string name_;
};

std::vector<std::string> split_list(std::string s) {
  s = trim(s);
  if (!s.empty() && s.front() == '[' && s.back() == ']') s = s.substr(1, s.size() - 2);
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

}  // namespace

RunConfig parse_config(const std::string& text) {
  pt::ptree root;
  try {
    std::istringstream in(text);
    pt::ini_parser::read_ini(in, root);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError(std::string("config syntax: ") + e.what());
  }

  for (const auto& [name, sub] : root) {
    auto it = kKeys.find(name);
    if (it == kKeys.end() || !sub.data().empty()) {
      throw ConfigError("unknown section or top-level key '" + name + "'");
    }
    for (const auto& kv : sub) {
      if (!it->second.count(kv.first)) {
        throw ConfigError("[" + name + "] unknown key '" + kv.first + "'");
      }
    }
  }
  auto section = [&root](const std::string& name) {
    auto it = root.find(name);
    return Section(it == root.not_found() ? nullptr : &it->second, name);
  };

  RunConfig cfg;

  const Section grid = section("gridworld");
  int width = cfg.grid.width;
  int height = cfg.grid.height;
  grid.read("width", width);
  grid.read("height", height);
  const GridworldSpec defaults = cfg.grid;
  cfg.grid = GridworldSpec::corner_to_corner(width, height);
  cfg.grid.goal_logit = defaults.goal_logit;
  cfg.grid.discount = defaults.discount;
  grid.read("goal_x", cfg.grid.goal.x);
  grid.read("goal_y", cfg.grid.goal.y);
  grid.read("start_x", cfg.grid.start.x);
  grid.read("start_y", cfg.grid.start.y);
  grid.read("goal_logit", cfg.grid.goal_logit);
  grid.read("discount", cfg.grid.discount);

  const Section expert = section("expert");
  expert.read("n_traj", cfg.expert.n_traj);
  expert.read("horizon", cfg.expert.horizon);
  expert.read("seed", cfg.expert.seed);

  const Section train = section("train");
  TrainConfig& t = cfg.train;
  std::string variant = to_string(t.variant);
  std::string backend = to_string(t.gradient_backend);
  train.read("variant", variant);
  train.read("gradient_backend", backend);
  try {
    t.variant = parse_variant(variant);
    t.gradient_backend = parse_backend(backend);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("[train] ") + e.what());
  }
  train.read("lambda1", t.lambda1);
  train.read("lambda2", t.lambda2);
  train.read("reward_lr", t.reward_lr);
  train.read("dynamics_lr", t.dynamics_lr);
  train.read("dynamics_steps_per_outer", t.dynamics_steps_per_outer);
  train.read("rollout_batch", t.rollout_batch);
  train.read("rollout_steps", t.rollout_steps);
  train.read("outer_iters", t.outer_iters);
  train.read("seed", t.seed);
  train.read("partial_inner_sweeps", t.partial_inner_sweeps);
  train.read("normalize_advantages", t.normalize_advantages);
  train.read("smoothing", t.smoothing);
  train.read("solver_tol", t.solver_tol);
  train.read("snapshot_every", t.snapshot_every);
  train.read("divergence_window", t.divergence_window);

  const Section eval = section("eval");
  eval.read("rollouts", cfg.eval.rollouts);
  eval.read("horizon", cfg.eval.horizon);

  const Section sweep = section("sweep");
  if (sweep.has("lambdas")) {
    cfg.sweep.lambdas.clear();
    for (const std::string& item : split_list(sweep.text("lambdas"))) {
      double value = 0.0;
      const auto res = std::from_chars(item.data(), item.data() + item.size(), value);
      if (res.ec != std::errc() || res.ptr != item.data() + item.size()) {
        sweep.fail("lambdas", "cannot parse '" + item + "'");
      }
      cfg.sweep.lambdas.push_back(value);
    }
  }
  sweep.read("baseline", cfg.sweep.baseline);

  const Section certify = section("certify");
  if (certify.has("checkpoints")) cfg.checkpoints = split_list(certify.text("checkpoints"));

  std::string data_dir;
  section("input").read("data_dir", data_dir);
  cfg.data_dir = data_dir;
  std::string out_dir = cfg.out_dir.string();
  section("output").read("dir", out_dir);
  cfg.out_dir = out_dir;

  check(cfg);
  return cfg;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw ConfigError("cannot read config " + path.string());
  }
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

void check(const RunConfig& cfg) {
  try {
    validate(cfg.grid);
    validate(cfg.train);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  auto inside = [&](Cell c) {
    return c.x >= 0 && c.x < cfg.grid.width && c.y >= 0 && c.y < cfg.grid.height;
  };
  if (!inside(cfg.grid.goal) || !inside(cfg.grid.start)) {
    throw ConfigError("[gridworld] goal and start must lie inside the grid");
  }
  if (!(cfg.grid.discount > 0.0 && cfg.grid.discount < 1.0)) {
    throw ConfigError("[gridworld] discount must lie in (0, 1)");
  }
  if (cfg.expert.n_traj < 1 || cfg.expert.horizon < 1) {
    throw ConfigError("[expert] n_traj and horizon must be >= 1");
  }
  if (cfg.eval.rollouts < 1 || cfg.eval.horizon < 1) {
    throw ConfigError("[eval] rollouts and horizon must be >= 1");
  }
  for (double l : cfg.sweep.lambdas) {
    if (!(l >= 0.0) || !std::isfinite(l)) throw ConfigError("[sweep] lambdas must be finite, >= 0");
  }
  if (cfg.out_dir.empty()) {
    throw ConfigError("[output] dir must not be empty");
  }
}

void override_seed(RunConfig& cfg, std::uint64_t seed) {
  cfg.expert.seed = seed;
  cfg.train.seed = seed;
}

}  // namespace bmirl::cli
