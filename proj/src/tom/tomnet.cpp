#include "tomcat/tom/tomnet.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>

namespace tomcat {

double tomnet_loss(const ToMPrediction& pred, const ToMTargets& t) {
  const double floor_ = kProbFloor;
  double total = -std::log(std::max(pred.next_action[t.next_action], floor_));
  for (int k = 0; k < kNumFeatures; ++k)
    total -= std::log(std::max(pred.signs(t.signs(k), k), floor_));
  for (int j = 0; j < ToMnetConfig::kSrBin; ++j) {
    double p = pred.sr_binary[j], y = t.sr_binary[j];
    total -= y * std::log(std::max(p, floor_)) + (1 - y) * std::log(std::max(1 - p, floor_));
  }
  for (int c = 0; c < ToMnetConfig::kSrCat; ++c)
    total -= t.sr_categorical[c] * std::log(std::max(pred.sr_categorical[c], floor_));
  for (int q = 0; q < ToMnetConfig::kSrNum; ++q) {
    double var = pred.sr_numeric_var[q];
    double d = t.sr_numeric[q] - pred.sr_numeric_mean[q];
    total += 0.5 * (std::log(2 * M_PI) + std::log(var) + d * d / var);
  }
  return total;
}

VectorXd discounted_average(const MatrixXd& rows, double gamma) {
  if (rows.rows() == 0) throw std::invalid_argument("discounted_average: empty window");
  VectorXd acc = VectorXd::Zero(rows.cols());
  double w = 1.0, norm = 0.0;
  for (Eigen::Index t = 0; t < rows.rows(); ++t, w *= gamma) {
    acc += w * rows.row(t).transpose();
    norm += w;
  }
  return acc / norm;
}

namespace {

int sign_class(double w) { return std::abs(w) < 1e-9 ? 1 : (w > 0 ? 2 : 0); }

// SR source rows pulled from the teammate's own observation encoding.
MatrixXd sr_rows_binary(const MatrixXf& obs, int from, int to) {
  MatrixXd rows(to - from, ToMnetConfig::kSrBin);
  for (int t = from; t < to; ++t) {
    for (int slot = 0; slot < 2; ++slot) {
      double count = obs(t, 10 + 4 * slot);
      double cooking = obs(t, 11 + 4 * slot);
      double ready = obs(t, 12 + 4 * slot);
      rows(t - from, 3 * slot + 0) = count < 1e-6 ? 1.0 : 0.0;
      rows(t - from, 3 * slot + 1) = cooking;
      rows(t - from, 3 * slot + 2) = ready;
    }
  }
  return rows;
}

MatrixXd sr_rows_categorical(const MatrixXf& obs, int from, int to) {
  return obs.block(from, 6, to - from, ToMnetConfig::kSrCat).cast<double>();
}

MatrixXd sr_rows_numeric(const MatrixXf& obs, int from, int to) {
  MatrixXd rows(to - from, ToMnetConfig::kSrNum);
  for (int t = from; t < to; ++t) {
    rows(t - from, 0) = obs(t, 22);  // normalized path distance
    rows(t - from, 1) = obs(t, 0);   // normalized x
    rows(t - from, 2) = obs(t, 1);   // normalized y
  }
  return rows;
}

StepSeq observer_slice(const JointTrajectory& traj, int agent, int from, int to) {
  StepSeq s;
  s.obs = traj.obs[agent].middleRows(from, to - from);
  s.actions.assign(traj.actions[agent].begin() + from, traj.actions[agent].begin() + to);
  return s;
}

}  // namespace

ToMExample build_training_example(const Dataset& data, const std::string& observer_profile,
                                  const ToMnetConfig& cfg, Rng& rng) {
  std::vector<std::string> teams = data.teams_of(observer_profile);
  if (teams.empty())
    throw std::runtime_error("tomnet: no trajectories with observer profile " + observer_profile);
  const std::string& key = teams[rng.uniform_int(static_cast<int>(teams.size()))];
  const auto& trajs = data.groups().at(key);
  if (static_cast<int>(trajs.size()) < cfg.n_past + 1)
    throw std::runtime_error("tomnet: team " + key + " has " + std::to_string(trajs.size()) +
                             " trajectories, need at least " + std::to_string(cfg.n_past + 1));

  const int cur_idx = rng.uniform_int(static_cast<int>(trajs.size()));
  const JointTrajectory& cur = trajs[cur_idx];
  if (cur.T < cfg.sr_window + 2)
    throw std::runtime_error("tomnet: trajectory shorter than " +
                             std::to_string(cfg.sr_window + 1) + " steps");

  // Observer slot within the team; ties (self-teams) resolved uniformly.
  int obs_slot;
  if (cur.profiles[0] == observer_profile && cur.profiles[1] == observer_profile)
    obs_slot = rng.uniform_int(2);
  else
    obs_slot = cur.profiles[0] == observer_profile ? 0 : 1;
  const int mate_slot = 1 - obs_slot;

  ToMExample ex;
  ex.observer_name = observer_profile;
  ex.teammate_name = cur.profiles[mate_slot];
  ex.profile = profile_by_name(observer_profile).weights;

  for (int p = 0; p < cfg.n_past; ++p) {
    int j = rng.uniform_int(static_cast<int>(trajs.size()) - 1);
    if (j >= cur_idx) ++j;
    const JointTrajectory& past = trajs[j];
    int slot;
    if (past.profiles[0] == observer_profile && past.profiles[1] == observer_profile)
      slot = rng.uniform_int(2);
    else
      slot = past.profiles[0] == observer_profile ? 0 : 1;
    ex.past.push_back(observer_slice(past, slot, 0, std::min(past.T, cfg.t_past)));
  }

  // Split point: at least one step of history, sr_window of teammate future.
  const int t_lo = 1, t_hi = cur.T - 1 - cfg.sr_window;
  const int t = t_lo + rng.uniform_int(t_hi - t_lo + 1);

  StepSeq window = observer_slice(cur, obs_slot, std::max(0, t - cfg.t_cur), t);
  ex.current = ToMnetT<float>::reverse_window(window, cfg.t_cur);
  ex.query = cur.obs[obs_slot].row(t).transpose();

  ex.targets.next_action = cur.actions[mate_slot][t];
  FeatureVector mate_sign = profile_sign(profile_by_name(ex.teammate_name));
  for (int k = 0; k < kNumFeatures; ++k) ex.targets.signs(k) = sign_class(mate_sign[k]);
  ex.targets.sr_binary =
      discounted_average(sr_rows_binary(cur.obs[mate_slot], t + 1, cur.T), cfg.sr_gamma);
  VectorXd cat =
      discounted_average(sr_rows_categorical(cur.obs[mate_slot], t + 1, cur.T), cfg.sr_gamma);
  ex.targets.sr_categorical = cat / cat.sum();
  ex.targets.sr_numeric =
      discounted_average(sr_rows_numeric(cur.obs[mate_slot], t + 1, cur.T), cfg.sr_gamma);
  return ex;
}

template <class S>
ToMTrainLog train_tomnet(ToMnetT<S>& model, const std::vector<ToMExample>& examples,
                         const ToMTrainConfig& tc) {
  if (examples.empty()) throw std::invalid_argument("train_tomnet: empty example set");
  Rng rng(hash_combine(tc.seed, 0x7070));

  std::vector<int> order(examples.size());
  std::iota(order.begin(), order.end(), 0);
  for (int i = static_cast<int>(order.size()) - 1; i > 0; --i)
    std::swap(order[i], order[rng.uniform_int(i + 1)]);
  const int n_val = std::max(1, static_cast<int>(tc.val_frac * examples.size()));
  std::vector<int> val_idx(order.begin(), order.begin() + n_val);
  std::vector<int> train_idx(order.begin() + n_val, order.end());
  if (train_idx.empty()) train_idx = val_idx;

  nn::Adam<S> opt({tc.lr, 0.9, 0.999, 1e-8, tc.weight_decay});
  opt.init(model.params());

  ToMTrainLog log;
  VecX<S> best_params = model.params().values();
  double best_val = std::numeric_limits<double>::infinity();
  int stagnant = 0;

  for (int epoch = 0; epoch < tc.max_epochs; ++epoch) {
    for (int i = static_cast<int>(train_idx.size()) - 1; i > 0; --i)
      std::swap(train_idx[i], train_idx[rng.uniform_int(i + 1)]);

    double train_loss = 0;
    int batches = 0;
    for (size_t at = 0; at < train_idx.size(); at += tc.batch) {
      std::vector<int> idx(train_idx.begin() + at,
                           train_idx.begin() +
                               std::min(at + tc.batch, train_idx.size()));
      auto batch = detail::make_batch<S>(examples, idx, model.cfg);
      auto fwd = model.forward(batch, true, &rng);
      train_loss += model.loss(fwd, batch);
      model.params().zero_grads();
      model.backward(fwd, batch);
      opt.step(model.params());
      ++batches;
    }
    train_loss /= std::max(1, batches);

    double val_loss = 0;
    int vbatches = 0;
    for (size_t at = 0; at < val_idx.size(); at += tc.batch) {
      std::vector<int> idx(val_idx.begin() + at,
                           val_idx.begin() + std::min(at + tc.batch, val_idx.size()));
      auto batch = detail::make_batch<S>(examples, idx, model.cfg);
      auto fwd = model.forward(batch, false, nullptr);
      val_loss += model.loss(fwd, batch);
      ++vbatches;
    }
    val_loss /= std::max(1, vbatches);

    log.train_loss.push_back(train_loss);
    log.val_loss.push_back(val_loss);
    log.epochs_run = epoch + 1;

    if (val_loss < best_val - tc.tolerance) {
      best_val = val_loss;
      best_params = model.params().values();
      log.best_epoch = epoch;
      stagnant = 0;
    } else {
      if (++stagnant >= tc.patience) break;
    }
  }
  model.params().set_values(best_params);
  log.best_val = best_val;
  return log;
}

template <class S>
ToMEvalResult eval_tomnet(const ToMnetT<S>& model, const std::vector<ToMExample>& examples) {
  ToMEvalResult res;
  if (examples.empty()) return res;
  res.examples = static_cast<int>(examples.size());
  double action_hits = 0, sign_hits = 0, prob = 0;
  const int chunk = 256;
  for (size_t at = 0; at < examples.size(); at += chunk) {
    std::vector<int> idx;
    for (size_t i = at; i < std::min(at + chunk, examples.size()); ++i)
      idx.push_back(static_cast<int>(i));
    auto batch = detail::make_batch<S>(examples, idx, model.cfg);
    auto fwd = model.forward(batch, false, nullptr);
    for (int col = 0; col < batch.B; ++col) {
      int argmax = 0;
      for (int a = 1; a < kNumActions; ++a)
        if (fwd.p_action(a, col) > fwd.p_action(argmax, col)) argmax = a;
      action_hits += argmax == batch.action[col] ? 1 : 0;
      for (int k = 0; k < kNumFeatures; ++k) {
        int best = 0;
        for (int c = 1; c < 3; ++c)
          if (fwd.p_sign(3 * k + c, col) > fwd.p_sign(3 * k + best, col)) best = c;
        sign_hits += best == batch.signs(k, col) ? 1.0 / kNumFeatures : 0;
        prob += fwd.p_sign(3 * k + batch.signs(k, col), col) / kNumFeatures;
      }
    }
  }
  res.action_accuracy = action_hits / res.examples;
  res.sign_accuracy = sign_hits / res.examples;
  res.true_profile_prob = prob / res.examples;
  return res;
}

namespace {
constexpr uint32_t kToMnetSchema = 1;
}

void save_tomnet(const std::string& path, const ToMnetT<float>& model) {
  ArchiveWriter w;
  const ToMnetConfig& c = model.cfg;
  w.put_string("kind", "tomnet");
  w.put_i32("dims", {c.obs_dim, c.action_dim, c.profile_dim, c.lstm_hidden, c.embed_dim,
                     c.head_hidden, c.n_past, c.t_past, c.t_cur, c.sr_window});
  w.put_f64("dropout", MatrixXd::Constant(1, 1, c.dropout));
  w.put_f64("sr_gamma", MatrixXd::Constant(1, 1, c.sr_gamma));
  const_cast<ToMnetT<float>&>(model).params().save(w, "p/");
  w.save(path, kToMnetSchema);
}

ToMnetT<float> load_tomnet(const std::string& path) {
  Archive ar = Archive::load(path);
  if (ar.schema_version() != kToMnetSchema)
    throw std::runtime_error("tomnet checkpoint: schema version mismatch: " + path);
  if (ar.get_string("kind") != "tomnet")
    throw std::runtime_error("tomnet checkpoint: wrong artifact kind in " + path);
  auto dims = ar.get_i32("dims");
  ToMnetConfig c;
  c.obs_dim = dims[0];
  c.action_dim = dims[1];
  c.profile_dim = dims[2];
  c.lstm_hidden = dims[3];
  c.embed_dim = dims[4];
  c.head_hidden = dims[5];
  c.n_past = dims[6];
  c.t_past = dims[7];
  c.t_cur = dims[8];
  c.sr_window = dims[9];
  c.dropout = ar.get_f64("dropout")(0, 0);
  c.sr_gamma = ar.get_f64("sr_gamma")(0, 0);
  ToMnetT<float> model(c, 0);
  model.params().load(ar, "p/");
  return model;
}

template ToMTrainLog train_tomnet<float>(ToMnetT<float>&, const std::vector<ToMExample>&,
                                         const ToMTrainConfig&);
template ToMTrainLog train_tomnet<double>(ToMnetT<double>&, const std::vector<ToMExample>&,
                                          const ToMTrainConfig&);
template ToMEvalResult eval_tomnet<float>(const ToMnetT<float>&, const std::vector<ToMExample>&);
template ToMEvalResult eval_tomnet<double>(const ToMnetT<double>&,
                                           const std::vector<ToMExample>&);

}  // namespace tomcat
