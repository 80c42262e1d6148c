#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <limits>

#include "bmirl/errors.hpp"
#include "bmirl/gridworld.hpp"
#include "bmirl/io.hpp"
#include "json.hpp"
#include "test_support.hpp"

namespace bmirl {
namespace {

std::string schema_field(const std::function<void()>& f) {
  try {
    f();
  } catch (const SchemaError& e) {
    return e.field();
  }
  return "<no error>";
}

TEST(Io, NumberFormatting) {
  EXPECT_EQ(format_number(0.1), "0.1");
  EXPECT_EQ(format_number(10.0), "10");
  EXPECT_EQ(format_number(std::numeric_limits<double>::infinity()), "inf");
  EXPECT_EQ(format_number(-std::numeric_limits<double>::infinity()), "-inf");
  EXPECT_EQ(format_number(std::nan("")), "nan");
  const double x = 1.0 / 3.0;
  EXPECT_EQ(std::stod(format_number(x)), x);
}

TEST(Io, MdpRoundTripIsExact) {
  const TabularMdp mdp = testing::random_mdp(4, 3, 0.85, 1);
  const TabularMdp back = mdp_from_json(mdp_to_json(mdp));
  EXPECT_EQ(back.n_states, 4);
  EXPECT_EQ(back.n_actions, 3);
  EXPECT_DOUBLE_EQ(back.discount, 0.85);
  EXPECT_LE((back.transition - mdp.transition).cwiseAbs().maxCoeff(), 1e-15);
  EXPECT_TRUE(back.reward == mdp.reward);
  EXPECT_LE((back.init_dist - mdp.init_dist).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(Io, MdpLayoutIsStateActionSuccessor) {
  const TabularMdp mdp = build_gridworld(GridworldSpec::corner_to_corner(2, 2));
  const auto doc = nlohmann::json::parse(mdp_to_json(mdp));
  // From the lower-left cell, `right` lands on cell 1.
  EXPECT_EQ(doc["transition"][0][3][1].get<double>(), 1.0);
  EXPECT_EQ(doc["transition"].size(), 4u);
  EXPECT_EQ(doc["transition"][0].size(), 4u);
}

TEST(Io, MdpSchemaErrorsNameTheField) {
  const TabularMdp mdp = testing::random_mdp(3, 2, 0.9, 2);
  auto doc = nlohmann::json::parse(mdp_to_json(mdp));

  auto bad = doc;
  bad["transition"][2][1][0] = bad["transition"][2][1][0].get<double>() + 0.01;
  EXPECT_EQ(schema_field([&] { mdp_from_json(bad.dump()); }), "transition[2][1]");

  bad = doc;
  bad.erase("discount");
  EXPECT_EQ(schema_field([&] { mdp_from_json(bad.dump()); }), "discount");

  bad = doc;
  bad["discount"] = 1.0;
  EXPECT_EQ(schema_field([&] { mdp_from_json(bad.dump()); }), "discount");

  bad = doc;
  bad["reward"][1][0] = "x";
  EXPECT_EQ(schema_field([&] { mdp_from_json(bad.dump()); }), "reward[1][0]");

  bad = doc;
  bad["init_dist"].erase(0);
  EXPECT_EQ(schema_field([&] { mdp_from_json(bad.dump()); }), "init_dist");

  EXPECT_THROW(mdp_from_json("{"), SchemaError);
}

TEST(Io, MdpSmallDriftIsRenormalized) {
  const TabularMdp mdp = testing::random_mdp(3, 2, 0.9, 3);
  auto doc = nlohmann::json::parse(mdp_to_json(mdp));
  doc["transition"][0][0][0] = doc["transition"][0][0][0].get<double>() + 5e-10;
  const TabularMdp back = mdp_from_json(doc.dump());
  EXPECT_NEAR(back.transition.row(0).sum(), 1.0, 1e-15);
}

TEST(Io, PolicyRoundTrip) {
  const MatrixXd policy = soft_value_iteration(testing::random_mdp(4, 2, 0.9, 4)).policy;
  EXPECT_TRUE(policy_from_json(policy_to_json(policy)) == policy);
}

TEST(Io, DatasetRoundTrip) {
  const TabularMdp mdp = build_gridworld(GridworldSpec::corner_to_corner(5, 5));
  const Dataset data = generate_expert_dataset(mdp, 5, 7, 1);
  const std::string text = dataset_to_jsonl(data);
  EXPECT_EQ(std::count(text.begin(), text.end(), '\n'), 5);
  const Dataset back = dataset_from_jsonl(text, 25, 4);
  EXPECT_EQ(back.trajectories, data.trajectories);
  EXPECT_TRUE(back.counts == data.counts);
}

TEST(Io, DatasetErrors) {
  EXPECT_EQ(schema_field([] { dataset_from_jsonl("{\"states\":[0,1]}\n", 2, 2); }), "actions");
  EXPECT_EQ(schema_field([] { dataset_from_jsonl("{\"states\":[0,1.5],\"actions\":[0]}", 2, 2); }),
            "line 1.states[1]");
  EXPECT_EQ(schema_field([] { dataset_from_jsonl("{\"states\":[0,9],\"actions\":[0]}", 2, 2); }),
            "dataset");
  EXPECT_EQ(schema_field([] { dataset_from_jsonl("{\"states\":[0,1,0],\"actions\":[0]}", 2, 2); }),
            "dataset");
}

TEST(Io, ThetaRoundTripBothModes) {
  for (RewardMode mode : {RewardMode::state_log_softmax, RewardMode::table}) {
    const ThetaParams theta = testing::random_theta(3, 2, 5, 1.0, mode, 0.25);
    const ThetaParams back = theta_from_json(theta_to_json(theta));
    EXPECT_EQ(back.reward_mode, mode);
    EXPECT_TRUE(back.reward_logits == theta.reward_logits);
    EXPECT_TRUE(back.dynamics_logits == theta.dynamics_logits);
    EXPECT_EQ(back.lambda, 0.25);
  }
}

TEST(Io, ThetaSchemaErrorsNameTheField) {
  const ThetaParams theta = testing::random_theta(4, 2, 6);
  const auto doc = nlohmann::json::parse(theta_to_json(theta));

  auto bad = doc;
  bad["reward_logits"][3] = nullptr;
  EXPECT_EQ(schema_field([&] { theta_from_json(bad.dump()); }), "reward_logits[3]");

  bad = doc;
  bad["dynamics_logits"][1][0].erase(2);
  EXPECT_EQ(schema_field([&] { theta_from_json(bad.dump()); }), "dynamics_logits[1][0]");

  bad = doc;
  bad["lambda"] = -1.0;
  EXPECT_EQ(schema_field([&] { theta_from_json(bad.dump()); }), "lambda");

  bad = doc;
  bad["reward_mode"] = "neural";
  EXPECT_EQ(schema_field([&] { theta_from_json(bad.dump()); }), "reward_mode");

  bad = doc;
  bad.erase("dynamics_logits");
  EXPECT_EQ(schema_field([&] { theta_from_json(bad.dump()); }), "dynamics_logits");
}

TEST(Io, FilesAndTables) {
  const auto dir = std::filesystem::temp_directory_path() / "bmirl_io_test";
  std::filesystem::create_directories(dir);
  write_text(dir / "a.txt", "hello\n");
  EXPECT_EQ(read_text(dir / "a.txt"), "hello\n");
  EXPECT_THROW(read_text(dir / "missing.txt"), std::runtime_error);
  EXPECT_THROW(write_text(dir / "no" / "such" / "dir.txt", "x"), std::runtime_error);
  std::filesystem::remove_all(dir);

  EXPECT_EQ(csv_table({"a", "b"}, {{"1", "2"}, {"3", ""}}), "a,b\n1,2\n3,\n");
}

}  // namespace
}  // namespace bmirl
