#include <doctest.h>

#include <filesystem>

#include "tomcat/rewards/profiles.hpp"

using namespace tomcat;

TEST_SUITE_BEGIN("profiles");

TEST_CASE("built-in profiles reproduce the reference weight table") {
  const auto& ps = builtin_profiles();
  REQUIRE(ps.size() == 7);
  int pairs = 0;
  for (size_t i = 0; i < ps.size(); ++i)
    for (size_t j = i + 1; j < ps.size(); ++j) ++pairs;
  CHECK(pairs == 21);

  const AgentProfile& cook = profile_by_name("Cook");
  CHECK(cook.weights[kFeatOnionDrop] == -5.0);
  CHECK(cook.weights[kFeatPottingOnion] == 5.0);
  CHECK(cook.weights[kFeatTaskRewFrac] == 1.0);
  const AgentProfile& server = profile_by_name("Server");
  CHECK(server.weights[kFeatSoupPickup] == 10.0);
  CHECK(server.weights[kFeatSoupDelivery] == 5.0);
  const AgentProfile& helper = profile_by_name("Helper");
  CHECK(helper.weights[kFeatSoupDrop] == -20.0);
  CHECK(helper.weights[kFeatOnionPickup] == 0.10);
  CHECK(profile_by_name("FarHelper").weights[kFeatPathDistToOther] == 0.01);
  CHECK(profile_by_name("Follower").weights[kFeatPathDistToOther] == -1.0);
  const AgentProfile& sparse = profile_by_name("Sparse");
  for (int k = 0; k < kNumFeatures; ++k)
    CHECK(sparse.weights[k] == (k == kFeatTaskRewFrac ? 1.0 : 0.0));
  CHECK(profile_by_name("Random").weights.cwiseAbs().sum() == 0.0);
}

TEST_CASE("profile table round-trips through the text format bit-exactly") {
  namespace fs = std::filesystem;
  fs::path path = fs::temp_directory_path() / "tomcat_profiles_test.tsv";
  save_profiles(path.string(), builtin_profiles());
  auto loaded = load_profiles(path.string());
  REQUIRE(loaded.size() == builtin_profiles().size());
  for (size_t i = 0; i < loaded.size(); ++i) {
    CHECK(loaded[i].name == builtin_profiles()[i].name);
    for (int k = 0; k < kNumFeatures; ++k)
      CHECK(loaded[i].weights[k] == builtin_profiles()[i].weights[k]);
  }
  fs::remove(path);
}

TEST_CASE("linear_reward worked examples") {
  FeatureVector phi = FeatureVector::Zero();
  CHECK(linear_reward(phi, profile_by_name("Random")) == 0.0);

  phi.setZero();
  phi[kFeatPottingOnion] = 1.0;
  CHECK(linear_reward(phi, profile_by_name("Cook")) == doctest::Approx(5.0));

  phi.setZero();
  phi[kFeatSoupDelivery] = 1.0;
  phi[kFeatTaskRewFrac] = 20.0;
  CHECK(linear_reward(phi, profile_by_name("Server")) == doctest::Approx(25.0));
}

TEST_CASE("linear_reward is linear in the weights") {
  Rng rng(17);
  for (int trial = 0; trial < 200; ++trial) {
    FeatureVector phi, t1, t2;
    for (int k = 0; k < kNumFeatures; ++k) {
      phi[k] = rng.normal();
      t1[k] = rng.normal();
      t2[k] = rng.normal();
    }
    double a = rng.normal(), b = rng.normal();
    AgentProfile pa{"a", t1}, pb{"b", t2}, pc{"c", a * t1 + b * t2};
    double lhs = linear_reward(phi, pc);
    double rhs = a * linear_reward(phi, pa) + b * linear_reward(phi, pb);
    CHECK(lhs == doctest::Approx(rhs).epsilon(1e-9));
  }
}

TEST_CASE("profile_sign examples and scale invariance") {
  FeatureVector s = profile_sign(profile_by_name("Random"));
  CHECK(s.cwiseAbs().sum() == 0.0);
  CHECK(profile_sign(profile_by_name("Helper"))[kFeatSoupDrop] == -1.0);
  Rng rng(5);
  for (int trial = 0; trial < 100; ++trial) {
    AgentProfile p;
    for (int k = 0; k < kNumFeatures; ++k) p.weights[k] = rng.normal();
    double c = 0.1 + 10 * rng.uniform01();
    AgentProfile scaled{"s", c * p.weights};
    CHECK(profile_sign(p) == profile_sign(scaled));
  }
}

TEST_CASE("event features and path distance from the environment") {
  GridLayout g = parse_layout(
      "XXXXXXX\n"
      "XO   PX\n"
      "XD   SX\n"
      "XXXXXXX\n");
  KitchenState prev;
  prev.agents[0] = {{2, 1}, Action::South, Held::Nothing};
  prev.agents[1] = {{4, 2}, Action::South, Held::Nothing};
  prev.pots.assign(1, PotState{});

  StepResult r = step(g, prev, {Action::NoOp, Action::NoOp});
  FeatureVector phi = extract_features(g, prev, r.events, r.state, 0, r.task_reward);
  for (int k = 0; k < 8; ++k) CHECK(phi[k] == 0.0);
  CHECK(phi[kFeatTaskRewFrac] == 0.0);
  CHECK(phi[kFeatSelfPosX] == 2.0);
  CHECK(phi[kFeatSelfPosY] == 1.0);
  CHECK(phi[kFeatDistToOtherX] == 2.0);
  CHECK(phi[kFeatDistToOtherY] == 1.0);
  CHECK(phi[kFeatPathDistToOther] == 3.0);

  // a delivery by the teammate still pays the shared task reward
  EventSet ev;
  ev.flags[1] = kSoupDelivery;
  FeatureVector phi0 = extract_features(g, prev, ev, r.state, 0, 20.0);
  CHECK(phi0[kFeatSoupDelivery] == 0.0);
  CHECK(phi0[kFeatTaskRewFrac] == 20.0);
  FeatureVector phi1 = extract_features(g, prev, ev, r.state, 1, 20.0);
  CHECK(phi1[kFeatSoupDelivery] == 1.0);
}

TEST_CASE("path distance on a straight 5-cell corridor is 4") {
  GridLayout g = parse_layout(
      "XXXXXXXXX\n"
      "XO     PX\n"
      "XD     SX\n"
      "XXXXXXXXX\n");
  CHECK(g.path_distance({2, 1}, {6, 1}) == 4);
  CHECK(g.path_distance({2, 1}, {2, 1}) == 0);
  // unreachable pairs get the finite sentinel
  GridLayout split = parse_layout(
      "XXXXXXX\n"
      "XO XP X\n"
      "XD XS X\n"
      "XXXXXXX\n");
  CHECK(split.path_distance({2, 1}, {5, 1}) == split.distance_sentinel());
}

TEST_CASE("episode reward re-walk matches stored sums to 1e-9") {
  GridLayout g = default_layout();
  const AgentProfile& cook = profile_by_name("Cook");
  const AgentProfile& server = profile_by_name("Server");
  Rng rng(11);
  KitchenState s = reset(g, 123);
  double sum0 = 0, sum1 = 0;
  std::vector<std::array<Action, 2>> acts;
  for (int t = 0; t < 200; ++t) {
    std::array<Action, 2> a = {static_cast<Action>(rng.uniform_int(6)),
                               static_cast<Action>(rng.uniform_int(6))};
    acts.push_back(a);
    StepResult r = step(g, s, a);
    sum0 += linear_reward(extract_features(g, s, r.events, r.state, 0, r.task_reward), cook);
    sum1 += linear_reward(extract_features(g, s, r.events, r.state, 1, r.task_reward), server);
    s = r.state;
  }
  // brute-force re-walk
  KitchenState s2 = reset(g, 123);
  double re0 = 0, re1 = 0;
  for (auto& a : acts) {
    StepResult r = step(g, s2, a);
    re0 += linear_reward(extract_features(g, s2, r.events, r.state, 0, r.task_reward), cook);
    re1 += linear_reward(extract_features(g, s2, r.events, r.state, 1, r.task_reward), server);
    s2 = r.state;
  }
  CHECK(std::abs(sum0 - re0) <= 1e-9);
  CHECK(std::abs(sum1 - re1) <= 1e-9);
}

TEST_SUITE_END();
