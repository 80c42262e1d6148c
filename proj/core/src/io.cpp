#include "bmirl/io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "bmirl/errors.hpp"
#include "json.hpp"

namespace bmirl {

using nlohmann::json;

namespace {

json parse(const std::string& text, const std::string& what) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw SchemaError(what, std::string("invalid JSON: ") + e.what());
  }
}

const json& field(const json& doc, const std::string& key) {
  if (!doc.is_object()) {
    throw SchemaError("<root>", "expected an object");
  }
  auto it = doc.find(key);
  if (it == doc.end()) {
    throw SchemaError(key, "missing");
  }
  return *it;
}

double number(const json& j, const std::string& path) {
  if (!j.is_number()) {
    throw SchemaError(path, "expected a number");
  }
  const double x = j.get<double>();
  if (!std::isfinite(x)) {
    throw SchemaError(path, "not finite");
  }
  return x;
}

int positive_int(const json& j, const std::string& path) {
  if (!j.is_number_integer() || j.get<long long>() <= 0 || j.get<long long>() > (1 << 24)) {
    throw SchemaError(path, "expected a positive integer");
  }
  return j.get<int>();
}

const json& array_of(const json& j, std::size_t n, const std::string& path) {
  if (!j.is_array()) {
    throw SchemaError(path, "expected an array");
  }
  if (j.size() != n) {
    throw SchemaError(path, "expected " + std::to_string(n) + " entries, got " +
                                std::to_string(j.size()));
  }
  return j;
}

std::string at(const std::string& path, std::size_t i) {
  return path + "[" + std::to_string(i) + "]";
}

VectorXd read_vector(const json& j, int n, const std::string& path) {
  array_of(j, n, path);
  VectorXd v(n);
  for (int i = 0; i < n; ++i) v(i) = number(j[i], at(path, i));
  return v;
}

MatrixXd read_matrix(const json& j, int rows, int cols, const std::string& path) {
  array_of(j, rows, path);
  MatrixXd m(rows, cols);
  for (int r = 0; r < rows; ++r) m.row(r) = read_vector(j[r], cols, at(path, r)).transpose();
  return m;
}

// [s][a][s'] nested arrays <-> (S*A) x S.
MatrixXd read_tensor(const json& j, int n_states, int n_actions, const std::string& path) {
  array_of(j, n_states, path);
  MatrixXd m(n_states * n_actions, n_states);
  for (int s = 0; s < n_states; ++s) {
    const std::string ps = at(path, s);
    array_of(j[s], n_actions, ps);
    for (int a = 0; a < n_actions; ++a) {
      m.row(s * n_actions + a) = read_vector(j[s][a], n_states, at(ps, a)).transpose();
    }
  }
  return m;
}

json write_vector(const VectorXd& v) {
  json out = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v(i));
  return out;
}

json write_matrix(const MatrixXd& m) {
  json out = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) out.push_back(write_vector(m.row(r).transpose()));
  return out;
}

json write_tensor(const MatrixXd& m, int n_states, int n_actions) {
  json out = json::array();
  for (int s = 0; s < n_states; ++s) {
    json per_state = json::array();
    for (int a = 0; a < n_actions; ++a) {
      per_state.push_back(write_vector(m.row(s * n_actions + a).transpose()));
    }
    out.push_back(std::move(per_state));
  }
  return out;
}

void check_distribution(const VectorXd& p, const std::string& path) {
  if (p.minCoeff() < -1e-9) {
    throw SchemaError(path, "negative probability");
  }
  if (std::abs(p.sum() - 1.0) > 1e-9) {
    throw SchemaError(path, "probabilities sum to " + format_number(p.sum()));
  }
}

}  // namespace

std::string format_number(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), x);
  return std::string(buf, res.ptr);
}

std::string mdp_to_json(const TabularMdp& mdp) {
  json doc;
  doc["n_states"] = mdp.n_states;
  doc["n_actions"] = mdp.n_actions;
  doc["transition"] = write_tensor(mdp.transition, mdp.n_states, mdp.n_actions);
  doc["reward"] = write_matrix(mdp.reward);
  doc["init_dist"] = write_vector(mdp.init_dist);
  doc["discount"] = mdp.discount;
  return doc.dump(1) + "\n";
}

TabularMdp mdp_from_json(const std::string& text) {
  const json doc = parse(text, "mdp");
  TabularMdp mdp;
  mdp.n_states = positive_int(field(doc, "n_states"), "n_states");
  mdp.n_actions = positive_int(field(doc, "n_actions"), "n_actions");
  mdp.transition = read_tensor(field(doc, "transition"), mdp.n_states, mdp.n_actions, "transition");
  mdp.reward = read_matrix(field(doc, "reward"), mdp.n_states, mdp.n_actions, "reward");
  mdp.init_dist = read_vector(field(doc, "init_dist"), mdp.n_states, "init_dist");
  mdp.discount = number(field(doc, "discount"), "discount");
  if (!(mdp.discount > 0.0 && mdp.discount < 1.0)) {
    throw SchemaError("discount", "must lie in (0, 1)");
  }
  for (int s = 0; s < mdp.n_states; ++s) {
    for (int a = 0; a < mdp.n_actions; ++a) {
      const int r = mdp.row(s, a);
      check_distribution(mdp.transition.row(r).transpose(),
                         "transition[" + std::to_string(s) + "][" + std::to_string(a) + "]");
      mdp.transition.row(r) = mdp.transition.row(r).cwiseMax(0.0);
      mdp.transition.row(r) /= mdp.transition.row(r).sum();
    }
  }
  check_distribution(mdp.init_dist, "init_dist");
  mdp.init_dist = mdp.init_dist.cwiseMax(0.0);
  mdp.init_dist /= mdp.init_dist.sum();
  return mdp;
}

std::string policy_to_json(const MatrixXd& policy) {
  json doc;
  doc["n_states"] = policy.rows();
  doc["n_actions"] = policy.cols();
  doc["policy"] = write_matrix(policy);
  return doc.dump(1) + "\n";
}

MatrixXd policy_from_json(const std::string& text) {
  const json doc = parse(text, "policy");
  const int n_states = positive_int(field(doc, "n_states"), "n_states");
  const int n_actions = positive_int(field(doc, "n_actions"), "n_actions");
  MatrixXd policy = read_matrix(field(doc, "policy"), n_states, n_actions, "policy");
  for (int s = 0; s < n_states; ++s) {
    check_distribution(policy.row(s).transpose(), at("policy", s));
  }
  return policy;
}

std::string dataset_to_jsonl(const Dataset& data) {
  std::string out;
  for (const Trajectory& tau : data.trajectories) {
    json line;
    line["states"] = tau.states;
    line["actions"] = tau.actions;
    out += line.dump();
    out += '\n';
  }
  return out;
}

Dataset dataset_from_jsonl(const std::string& text, int n_states, int n_actions) {
  std::vector<Trajectory> trajs;
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const std::string where = "line " + std::to_string(line_no);
    const json doc = parse(line, where);
    Trajectory tau;
    for (const char* key : {"states", "actions"}) {
      const json& arr = field(doc, key);
      if (!arr.is_array()) throw SchemaError(where + "." + key, "expected an array");
      std::vector<int>& dst = std::string(key) == "states" ? tau.states : tau.actions;
      for (std::size_t i = 0; i < arr.size(); ++i) {
        if (!arr[i].is_number_integer()) {
          throw SchemaError(at(where + "." + key, i), "expected an integer");
        }
        dst.push_back(arr[i].get<int>());
      }
    }
    trajs.push_back(std::move(tau));
  }
  try {
    return make_dataset(std::move(trajs), n_states, n_actions);
  } catch (const std::invalid_argument& e) {
    throw SchemaError("dataset", e.what());
  }
}

std::string theta_to_json(const ThetaParams& theta) {
  json doc;
  doc["reward_mode"] = theta.reward_mode == RewardMode::table ? "table" : "state_log_softmax";
  doc["n_states"] = theta.n_states();
  doc["n_actions"] = theta.n_actions();
  if (theta.reward_mode == RewardMode::table) {
    doc["reward_logits"] = write_matrix(theta.reward_logits);
  } else {
    doc["reward_logits"] = write_vector(theta.reward_logits.col(0));
  }
  doc["dynamics_logits"] = write_tensor(theta.dynamics_logits, theta.n_states(), theta.n_actions());
  doc["lambda"] = theta.lambda;
  return doc.dump(1) + "\n";
}

ThetaParams theta_from_json(const std::string& text) {
  const json doc = parse(text, "theta");
  ThetaParams theta;
  const json& mode = field(doc, "reward_mode");
  if (mode == "table") {
    theta.reward_mode = RewardMode::table;
  } else if (mode == "state_log_softmax") {
    theta.reward_mode = RewardMode::state_log_softmax;
  } else {
    throw SchemaError("reward_mode", "expected \"state_log_softmax\" or \"table\"");
  }
  const int n_states = positive_int(field(doc, "n_states"), "n_states");
  const int n_actions = positive_int(field(doc, "n_actions"), "n_actions");
  if (theta.reward_mode == RewardMode::table) {
    theta.reward_logits = read_matrix(field(doc, "reward_logits"), n_states, n_actions,
                                      "reward_logits");
  } else {
    theta.reward_logits = read_vector(field(doc, "reward_logits"), n_states, "reward_logits");
  }
  theta.dynamics_logits =
      read_tensor(field(doc, "dynamics_logits"), n_states, n_actions, "dynamics_logits");
  theta.lambda = number(field(doc, "lambda"), "lambda");
  if (theta.lambda < 0.0) {
    throw SchemaError("lambda", "must be >= 0");
  }
  return theta;
}

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw std::runtime_error("cannot open " + path.string());
  }
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) {
    throw std::runtime_error("cannot write " + path.string());
  }
  out << text;
  out.flush();
  if (!out) {
    throw std::runtime_error("write failed for " + path.string());
  }
}

std::string csv_table(const std::vector<std::string>& header,
                      const std::vector<std::vector<std::string>>& rows) {
  std::string out;
  auto emit = [&out](const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) {
      if (i > 0) out += ',';
      out += cells[i];
    }
    out += '\n';
  };
  emit(header);
  for (const auto& row : rows) emit(row);
  return out;
}

}  // namespace bmirl
