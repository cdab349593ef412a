#include <doctest.h>

#include <cmath>
#include <filesystem>

#include "tomcat/tom/tomnet.hpp"

using namespace tomcat;

namespace {

// Hand-built one-team dataset with enough structure for SR targets.
Dataset synthetic_dataset(int n_trajs, int T, uint64_t seed, bool mate_always_holds_onion = false) {
  GridLayout g = default_layout();
  Dataset ds;
  ds.layout_text = g.to_text();
  ds.manifest.layout_hash = g.text_hash();
  Rng rng(seed);
  for (int i = 0; i < n_trajs; ++i) {
    JointTrajectory t;
    t.profiles = {"Cook", "Server"};
    t.env_seed = rng.next_u64();
    t.T = T;
    KitchenState s = reset(g, t.env_seed);
    for (int a = 0; a < 2; ++a) {
      t.obs[a].resize(T, kObsDim);
      t.actions[a].resize(T);
      t.rewards[a] = VectorXd::Zero(T);
      t.events[a].assign(T, 0);
    }
    t.task_reward = VectorXd::Zero(T);
    for (int step_i = 0; step_i < T; ++step_i) {
      for (int a = 0; a < 2; ++a) {
        t.obs[a].row(step_i) = observe(g, s, a).transpose();
        t.actions[a][step_i] = static_cast<uint8_t>(rng.uniform_int(kNumActions));
      }
      if (mate_always_holds_onion) {
        // overwrite the teammate's own held block with "onion" for SR checks
        t.obs[1].block(step_i, 6, 1, 4) << 1, 0, 0, 0;
      }
      StepResult r = step(g, s, {static_cast<Action>(t.actions[0][step_i]),
                                 static_cast<Action>(t.actions[1][step_i])});
      s = r.state;
    }
    ds.add(std::move(t));
  }
  ds.manifest.team_counts["Cook__Server"] = n_trajs;
  return ds;
}

ToMnetConfig tiny_config() {
  ToMnetConfig c;
  c.obs_dim = 5;
  c.action_dim = 3;
  c.lstm_hidden = 6;
  c.embed_dim = 4;
  c.head_hidden = 5;
  c.n_past = 2;
  c.t_past = 4;
  c.t_cur = 3;
  return c;
}

ToMExample random_tiny_example(const ToMnetConfig& c, Rng& rng, int n_past, int cur_len) {
  ToMExample ex;
  ex.profile = VectorXd::Zero(c.profile_dim);
  for (int k = 0; k < c.profile_dim; ++k) ex.profile[k] = rng.normal();
  for (int p = 0; p < n_past; ++p) {
    StepSeq s;
    int len = 1 + rng.uniform_int(c.t_past);
    s.obs = MatrixXf(len, c.obs_dim);
    for (int t = 0; t < len; ++t)
      for (int d = 0; d < c.obs_dim; ++d) s.obs(t, d) = static_cast<float>(rng.normal());
    for (int t = 0; t < len; ++t) s.actions.push_back(static_cast<uint8_t>(rng.uniform_int(c.action_dim)));
    ex.past.push_back(std::move(s));
  }
  ex.current.obs = MatrixXf(cur_len, c.obs_dim);
  for (int t = 0; t < cur_len; ++t) {
    for (int d = 0; d < c.obs_dim; ++d) ex.current.obs(t, d) = static_cast<float>(rng.normal());
    ex.current.actions.push_back(static_cast<uint8_t>(rng.uniform_int(c.action_dim)));
  }
  ex.query = Observation(c.obs_dim);
  for (int d = 0; d < c.obs_dim; ++d) ex.query[d] = static_cast<float>(rng.normal());
  ex.targets.next_action = rng.uniform_int(c.action_dim);
  for (int k = 0; k < kNumFeatures; ++k) ex.targets.signs(k) = rng.uniform_int(3);
  ex.targets.sr_binary = VectorXd(ToMnetConfig::kSrBin);
  for (int j = 0; j < ToMnetConfig::kSrBin; ++j) ex.targets.sr_binary[j] = rng.uniform01();
  VectorXd cat(ToMnetConfig::kSrCat);
  for (int j = 0; j < ToMnetConfig::kSrCat; ++j) cat[j] = rng.uniform01() + 0.1;
  ex.targets.sr_categorical = cat / cat.sum();
  ex.targets.sr_numeric = VectorXd(ToMnetConfig::kSrNum);
  for (int j = 0; j < ToMnetConfig::kSrNum; ++j) ex.targets.sr_numeric[j] = rng.normal();
  return ex;
}

}  // namespace

TEST_SUITE_BEGIN("tomnet");

TEST_CASE("discounted averaging of a constant equals the constant") {
  MatrixXd rows = MatrixXd::Constant(37, 2, 3.25);
  for (double gamma : {0.5, 0.9, 0.99}) {
    VectorXd m = discounted_average(rows, gamma);
    CHECK(m[0] == doctest::Approx(3.25).epsilon(1e-12));
    CHECK(m[1] == doctest::Approx(3.25).epsilon(1e-12));
  }
}

TEST_CASE("build_training_example: shapes, split point and SR targets") {
  Dataset ds = synthetic_dataset(6, 40, 42);
  ToMnetConfig cfg;
  cfg.n_past = 4;
  Rng rng(1);
  for (int trial = 0; trial < 20; ++trial) {
    ToMExample ex = build_training_example(ds, "Cook", cfg, rng);
    CHECK(ex.past.size() == 4);
    CHECK(ex.teammate_name == "Server");
    // T=40 forces t in [1, 9], so the current window is always partial
    CHECK(ex.current.length() >= 1);
    CHECK(ex.current.length() < cfg.t_cur);

    // locate t by matching the query against the trajectory
    const auto& trajs = ds.team("Cook", "Server");
    int found_t = -1;
    const JointTrajectory* src = nullptr;
    for (const auto& traj : trajs) {
      for (int t = 0; t < traj.T; ++t) {
        if (traj.obs[0].row(t) == ex.query.transpose()) {
          found_t = t;
          src = &traj;
          break;
        }
      }
      if (src) break;
    }
    REQUIRE(src != nullptr);
    CHECK(found_t >= 1);
    CHECK(found_t <= src->T - 1 - cfg.sr_window);
    CHECK(ex.current.length() == std::min(found_t, cfg.t_cur));
    // reversed window: first row is the newest step t-1
    CHECK(ex.current.obs.row(0) == src->obs[0].row(found_t - 1));
    CHECK(ex.targets.next_action == src->actions[1][found_t]);

    // brute-force discounted-average oracle on the numeric targets
    const int future = src->T - 1 - found_t;
    MatrixXd rows(future, 3);
    for (int u = 0; u < future; ++u) {
      rows(u, 0) = src->obs[1](found_t + 1 + u, 22);
      rows(u, 1) = src->obs[1](found_t + 1 + u, 0);
      rows(u, 2) = src->obs[1](found_t + 1 + u, 1);
    }
    VectorXd want = discounted_average(rows, cfg.sr_gamma);
    for (int j = 0; j < 3; ++j)
      CHECK(std::abs(ex.targets.sr_numeric[j] - want[j]) <= 1e-6);
  }
}

TEST_CASE("teammate holding onion on every future step gives a point-mass SR category") {
  Dataset ds = synthetic_dataset(6, 40, 7, true);
  ToMnetConfig cfg;
  Rng rng(2);
  ToMExample ex = build_training_example(ds, "Cook", cfg, rng);
  CHECK(ex.targets.sr_categorical[0] == doctest::Approx(1.0));
  for (int j = 1; j < ToMnetConfig::kSrCat; ++j)
    CHECK(ex.targets.sr_categorical[j] == doctest::Approx(0.0));
}

TEST_CASE("build_training_example error paths") {
  Dataset ds = synthetic_dataset(3, 40, 9);
  ToMnetConfig cfg;  // n_past = 4 > 3 - 1
  Rng rng(3);
  CHECK_THROWS_WITH_AS(build_training_example(ds, "Cook", cfg, rng), doctest::Contains("need"),
                       std::runtime_error);
  CHECK_THROWS_AS(build_training_example(ds, "Helper", cfg, rng), std::runtime_error);
  Dataset shorty = synthetic_dataset(6, 20, 9);
  CHECK_THROWS_WITH_AS(build_training_example(shorty, "Cook", cfg, rng),
                       doctest::Contains("shorter"), std::runtime_error);
}

TEST_CASE("char embedding: empty past, dimension, permutation invariance") {
  ToMnetConfig c = tiny_config();
  ToMnetT<double> net(c, 11);
  Rng rng(12);
  VectorXd theta = VectorXd::Random(c.profile_dim);

  VectorXd empty = net.char_embed(theta, {});
  CHECK(empty.size() == c.embed_dim);
  CHECK(empty.cwiseAbs().maxCoeff() == 0.0);

  ToMExample ex = random_tiny_example(c, rng, 3, 2);
  VectorXd a = net.char_embed(theta, ex.past);
  std::vector<StepSeq> shuffled = {ex.past[2], ex.past[0], ex.past[1]};
  VectorXd b = net.char_embed(theta, shuffled);
  CHECK(a == b);  // exact
}

TEST_CASE("mental embedding: masked window convention and eval determinism") {
  ToMnetConfig c = tiny_config();
  ToMnetT<double> net(c, 13);
  Rng rng(14);
  VectorXd theta = VectorXd::Random(c.profile_dim);
  VectorXd e_char = VectorXd::Random(c.embed_dim);

  StepSeq empty{MatrixXf::Zero(0, c.obs_dim), {}};
  VectorXd zero = net.mental_embed(theta, empty, e_char);
  CHECK(zero.cwiseAbs().maxCoeff() == 0.0);

  ToMExample ex = random_tiny_example(c, rng, 0, 3);
  VectorXd m1 = net.mental_embed(theta, ex.current, e_char);
  VectorXd m2 = net.mental_embed(theta, ex.current, e_char);
  CHECK(m1.size() == c.embed_dim);
  CHECK(m1 == m2);
}

TEST_CASE("predictions are normalized distributions with the right arities") {
  ToMnetConfig c = tiny_config();
  ToMnetT<double> net(c, 15);
  Rng rng(16);
  VectorXd theta = VectorXd::Random(c.profile_dim);
  Observation q = Observation::Random(c.obs_dim);
  ToMPrediction p = net.predict(theta, q, VectorXd::Random(c.embed_dim),
                                VectorXd::Random(c.embed_dim));
  REQUIRE(p.next_action.size() == c.action_dim);
  CHECK(p.next_action.sum() == doctest::Approx(1.0).epsilon(1e-6));
  for (int k = 0; k < kNumFeatures; ++k)
    CHECK(p.signs.col(k).sum() == doctest::Approx(1.0).epsilon(1e-6));
  CHECK(p.sr_categorical.sum() == doctest::Approx(1.0).epsilon(1e-6));
  for (int j = 0; j < ToMnetConfig::kSrBin; ++j) {
    CHECK(p.sr_binary[j] > 0.0);
    CHECK(p.sr_binary[j] < 1.0);
  }
  CHECK(p.sr_numeric_var.minCoeff() > 0.0);
}

TEST_CASE("tomnet_loss analytic values") {
  ToMTargets t;
  t.next_action = 2;
  t.signs.setConstant(1);
  t.sr_binary = VectorXd::Ones(ToMnetConfig::kSrBin);
  t.sr_categorical = VectorXd::Zero(ToMnetConfig::kSrCat);
  t.sr_categorical[0] = 1.0;
  t.sr_numeric = VectorXd::Constant(ToMnetConfig::kSrNum, 0.5);

  ToMPrediction p;
  p.next_action = VectorXd::Constant(kNumActions, 1.0 / kNumActions);
  p.signs.setZero();
  for (int k = 0; k < kNumFeatures; ++k) p.signs(1, k) = 1.0;
  p.sr_binary = VectorXd::Ones(ToMnetConfig::kSrBin);
  p.sr_categorical = t.sr_categorical;
  p.sr_numeric_mean = t.sr_numeric;
  p.sr_numeric_var = VectorXd::Constant(ToMnetConfig::kSrNum, 1.0 / (2.0 * M_PI));

  // every term vanishes except the uniform next-action NLL
  CHECK(tomnet_loss(p, t) == doctest::Approx(std::log(6.0)).epsilon(1e-9));

  // perfect one-hot action prediction sends that term to zero too
  p.next_action = VectorXd::Zero(kNumActions);
  p.next_action[2] = 1.0;
  CHECK(tomnet_loss(p, t) == doctest::Approx(0.0));
}

TEST_CASE("tomnet loss gradient matches central finite differences") {
  ToMnetConfig c = tiny_config();
  ToMnetT<double> net(c, 17);
  Rng rng(18);
  std::vector<ToMExample> exs;
  exs.push_back(random_tiny_example(c, rng, 2, 3));
  exs.push_back(random_tiny_example(c, rng, 1, 1));
  exs.push_back(random_tiny_example(c, rng, 0, 0));  // empty past and window
  auto batch = detail::make_batch<double>(exs, {0, 1, 2}, c);

  double err = nn::max_grad_rel_error<double>(net.params(), [&] {
    net.params().zero_grads();
    auto fwd = net.forward(batch, false, nullptr);
    double loss = net.loss(fwd, batch);
    net.backward(fwd, batch);
    return loss;
  });
  CHECK(err <= 1e-4);
}

TEST_CASE("training reduces the loss on a learnable toy set and restores best params") {
  Dataset ds = synthetic_dataset(8, 40, 21);
  ToMnetConfig c;
  c.lstm_hidden = 16;
  c.head_hidden = 16;
  c.n_past = 2;
  c.t_past = 20;
  Rng rng(22);
  std::vector<ToMExample> exs;
  for (int i = 0; i < 60; ++i) exs.push_back(build_training_example(ds, "Cook", c, rng));

  ToMnetT<float> net(c, 23);
  ToMTrainConfig tc;
  tc.batch = 16;
  tc.max_epochs = 8;
  tc.patience = 8;
  tc.tolerance = 0.0;
  tc.seed = 24;
  ToMTrainLog log = train_tomnet(net, exs, tc);
  REQUIRE(log.train_loss.size() >= 2);
  CHECK(log.train_loss.back() < log.train_loss.front());
  CHECK(log.best_epoch >= 0);
}

TEST_CASE("early stopping triggers after exactly `patience` stagnant epochs") {
  Dataset ds = synthetic_dataset(6, 40, 25);
  ToMnetConfig c = tiny_config();
  c.obs_dim = kObsDim;
  c.action_dim = kNumActions;
  c.n_past = 1;
  Rng rng(26);
  std::vector<ToMExample> exs;
  for (int i = 0; i < 12; ++i) exs.push_back(build_training_example(ds, "Cook", c, rng));
  ToMnetT<float> net(c, 27);
  ToMTrainConfig tc;
  tc.lr = 0.0;  // constant-loss stream
  tc.batch = 4;
  tc.max_epochs = 100;
  tc.patience = 10;
  tc.tolerance = 0.01;
  tc.seed = 28;
  ToMTrainLog log = train_tomnet(net, exs, tc);
  CHECK(log.epochs_run == 11);  // epoch 0 improves from +inf, then 10 stagnant
  CHECK(log.best_epoch == 0);
}

TEST_CASE("checkpoint round-trip preserves predictions; corrupt files are rejected") {
  namespace fs = std::filesystem;
  ToMnetConfig c;
  c.lstm_hidden = 8;
  c.head_hidden = 8;
  ToMnetT<float> net(c, 29);
  fs::path path = fs::temp_directory_path() / "tomnet_ckpt_test.bin";
  save_tomnet(path.string(), net);
  ToMnetT<float> loaded = load_tomnet(path.string());
  VectorXd theta = VectorXd::Random(c.profile_dim);
  Observation q = Observation::Random(c.obs_dim);
  VectorXd e1 = VectorXd::Random(c.embed_dim), e2 = VectorXd::Random(c.embed_dim);
  ToMPrediction pa = net.predict(theta, q, e1, e2);
  ToMPrediction pb = loaded.predict(theta, q, e1, e2);
  CHECK(pa.next_action == pb.next_action);
  CHECK(pa.sr_numeric_mean == pb.sr_numeric_mean);

  // truncation -> corruption error
  auto size = fs::file_size(path);
  fs::resize_file(path, size / 2);
  CHECK_THROWS_WITH_AS(load_tomnet(path.string()), doctest::Contains("corrupt"),
                       std::runtime_error);
  fs::remove(path);
}

TEST_SUITE_END();
