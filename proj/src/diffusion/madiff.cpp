#include "tomcat/diffusion/madiff.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace tomcat {

namespace {
constexpr int kRetOff = 0;
constexpr int kProfOff = 1;
constexpr int kCharOff = kProfOff + kNumFeatures;
constexpr int kMentalOff = kCharOff + kEmbedDim;
}  // namespace

std::string ConditionSet::descriptor() const {
  std::string out;
  auto append = [&](bool on, const char* name) {
    if (!on) return;
    if (!out.empty()) out += "+";
    out += name;
  };
  append(returns, "returns");
  append(profile, "profile");
  append(e_char, "char");
  append(e_mental, "mental");
  return out.empty() ? "none" : out;
}

ConditionSet ConditionSet::parse(const std::string& text) {
  ConditionSet cs;
  if (text.empty() || text == "none") return cs;
  size_t at = 0;
  while (at <= text.size()) {
    size_t plus = text.find('+', at);
    std::string tok = text.substr(at, plus == std::string::npos ? plus : plus - at);
    if (tok == "returns") cs.returns = true;
    else if (tok == "profile") cs.profile = true;
    else if (tok == "char") cs.e_char = true;
    else if (tok == "mental") cs.e_mental = true;
    else throw std::invalid_argument("condition set: unknown segment '" + tok + "'");
    if (plus == std::string::npos) break;
    at = plus + 1;
  }
  return cs;
}

void ConditioningVector::set_returns(double v) {
  values[kRetOff] = v;
  mask[kRetOff] = 1;
}

void ConditioningVector::set_profile(const VectorXd& theta) {
  values.segment(kProfOff, kNumFeatures) = theta;
  mask.segment(kProfOff, kNumFeatures).setOnes();
}

void ConditioningVector::set_char(const VectorXd& e) {
  values.segment(kCharOff, kEmbedDim) = e;
  mask.segment(kCharOff, kEmbedDim).setOnes();
}

void ConditioningVector::set_mental(const VectorXd& e) {
  values.segment(kMentalOff, kEmbedDim) = e;
  mask.segment(kMentalOff, kEmbedDim).setOnes();
}

MatrixXf augment_observations(const MatrixXf& own_obs, const std::vector<uint8_t>& other_actions) {
  const int T = static_cast<int>(own_obs.rows());
  MatrixXf aug = MatrixXf::Zero(T, kAugObsDim);
  aug.leftCols(kObsDim) = own_obs;
  // row t carries the teammate's previous action (t-1); row 0 has none
  for (int t = 1; t < T; ++t) aug(t, kObsDim + other_actions[t - 1]) = 1.0f;
  return aug;
}

int reconstruct_teammate_action(const Observation& prev, const Observation& cur, int width,
                                int height) {
  auto cell = [&](const Observation& o) {
    return Cell{static_cast<int>(std::lround(o[18] * (width - 1))),
                static_cast<int>(std::lround(o[19] * (height - 1)))};
  };
  auto orient = [&](const Observation& o) {
    int best = 0;
    for (int i = 1; i < 4; ++i)
      if (o[23 + i] > o[23 + best]) best = i;
    return best;
  };
  Cell a = cell(prev), b = cell(cur);
  if (b.y == a.y - 1 && b.x == a.x) return static_cast<int>(Action::North);
  if (b.y == a.y + 1 && b.x == a.x) return static_cast<int>(Action::South);
  if (b.x == a.x + 1 && b.y == a.y) return static_cast<int>(Action::East);
  if (b.x == a.x - 1 && b.y == a.y) return static_cast<int>(Action::West);
  if (orient(prev) != orient(cur)) return orient(cur);  // blocked turn
  // held item change without movement implies an interaction
  for (int i = 0; i < 4; ++i)
    if (std::abs(prev[27 + i] - cur[27 + i]) > 0.5f) return static_cast<int>(Action::Interact);
  return static_cast<int>(Action::NoOp);
}

AugDataset augment_dataset(const Dataset& data, const ToMnetT<float>& tomnet, int n_past,
                           double returns_gamma, uint64_t seed) {
  if (data.size() == 0) throw std::invalid_argument("augment: empty dataset");
  AugDataset aug;
  aug.layout_hash = data.manifest.layout_hash;

  for (const auto& [key, trajs] : data.groups()) {
    const uint64_t key_seed = hash_combine(seed, hash_string(key.c_str()));
    for (size_t idx = 0; idx < trajs.size(); ++idx) {
      const JointTrajectory& traj = trajs[idx];
      AugTrajectory at;
      at.T = traj.T;
      at.returns.resize(traj.T);
      double g = 0;
      for (int t = traj.T - 1; t >= 0; --t) {
        g = traj.task_reward[t] + returns_gamma * g;
        at.returns[t] = static_cast<float>(std::clamp(g / 20.0, 0.0, 1.0));
      }
      for (int a = 0; a < 2; ++a) {
        at.aug_obs[a] = augment_observations(traj.obs[a], traj.actions[1 - a]);
        at.actions[a] = traj.actions[a];
        at.profile_names[a] = traj.profiles[a];
        at.profile[a] = profile_by_name(traj.profiles[a]).weights;

        Rng rng(hash_combine(key_seed, idx * 2 + a));
        std::vector<StepSeq> past;
        for (int p = 0; p < n_past && trajs.size() > 1; ++p) {
          int j = rng.uniform_int(static_cast<int>(trajs.size()) - 1);
          if (j >= static_cast<int>(idx)) ++j;
          const JointTrajectory& pt = trajs[j];
          int slot;
          if (pt.profiles[0] == traj.profiles[a] && pt.profiles[1] == traj.profiles[a])
            slot = rng.uniform_int(2);
          else
            slot = pt.profiles[0] == traj.profiles[a] ? 0 : 1;
          StepSeq s;
          const int len = std::min(pt.T, tomnet.cfg.t_past);
          s.obs = pt.obs[slot].topRows(len);
          s.actions.assign(pt.actions[slot].begin(), pt.actions[slot].begin() + len);
          past.push_back(std::move(s));
        }
        VectorXd ec = tomnet.char_embed(at.profile[a], past);
        at.e_char[a] = ec.cast<float>();

        StepSeq own{traj.obs[a], traj.actions[a]};
        MatrixXd em = tomnet.mental_embed_series(at.profile[a], own, ec);
        at.e_mental[a] = em.cast<float>();
      }
      aug.trajs.push_back(std::move(at));
    }
  }

  // Fit normalizers over every agent's augmented rows and condition rows.
  Eigen::Index total = 0;
  for (const auto& at : aug.trajs) total += 2 * at.T;
  MatrixXf obs_rows(total, kAugObsDim);
  MatrixXf cond_rows(total, kNumFeatures + 2 * kEmbedDim);
  Eigen::Index row = 0;
  for (const auto& at : aug.trajs) {
    for (int a = 0; a < 2; ++a) {
      obs_rows.middleRows(row, at.T) = at.aug_obs[a];
      for (int t = 0; t < at.T; ++t) {
        cond_rows.row(row + t) << at.profile[a].transpose().cast<float>(),
            at.e_char[a].transpose(), at.e_mental[a].row(t);
      }
      row += at.T;
    }
  }
  aug.obs_norm = Normalizer::fit(obs_rows);
  aug.cond_norm = Normalizer::fit(cond_rows);
  return aug;
}

template <class S>
double masked_epsilon_mse(const std::vector<MatX<S>>& eps_hat,
                          const std::vector<std::array<MatX<S>, 2>>& eps_true,
                          const std::vector<const JointWindowT<S>*>& windows,
                          std::vector<MatX<S>>* douts) {
  const int B = static_cast<int>(eps_hat.size());
  if (douts) douts->assign(B, MatX<S>());
  double total = 0;
  for (int e = 0; e < B; ++e) {
    const JointWindowT<S>& w = *windows[e];
    const int L = w.length(), d = w.dim();
    int entries = 0;
    for (int slot = 0; slot < 2; ++slot)
      for (int r = 0; r < L; ++r)
        if (w.pin[slot](r) == S(0)) entries += d;
    if (douts) (*douts)[e] = MatX<S>::Zero(2 * d, L);
    double ex_loss = 0;
    for (int slot = 0; slot < 2; ++slot) {
      for (int r = 0; r < L; ++r) {
        if (w.pin[slot](r) != S(0)) continue;
        for (int c = 0; c < d; ++c) {
          const double diff = static_cast<double>(eps_hat[e](slot * d + c, r)) -
                              static_cast<double>(eps_true[e][slot](r, c));
          ex_loss += diff * diff;
          if (douts)
            (*douts)[e](slot * d + c, r) =
                static_cast<S>(2.0 * diff / (static_cast<double>(entries) * B));
        }
      }
    }
    total += entries > 0 ? ex_loss / entries : 0.0;
  }
  return total / B;
}

template double masked_epsilon_mse<float>(const std::vector<MatX<float>>&,
                                          const std::vector<std::array<MatX<float>, 2>>&,
                                          const std::vector<const JointWindowT<float>*>&,
                                          std::vector<MatX<float>>*);
template double masked_epsilon_mse<double>(const std::vector<MatX<double>>&,
                                           const std::vector<std::array<MatX<double>, 2>>&,
                                           const std::vector<const JointWindowT<double>*>&,
                                           std::vector<MatX<double>>*);

template <class S>
VecX<S> MadiffModelT<S>::stack_condition(const ConditioningVector& c) const {
  VecX<S> out = VecX<S>::Zero(2 * ConditioningVector::kDim);
  VectorXd vals = c.values;
  if (cond_norm.dims() > 0) {
    VectorXd inner = cond_norm.apply(vals.segment(kProfOff, kNumFeatures + 2 * kEmbedDim));
    vals.segment(kProfOff, kNumFeatures + 2 * kEmbedDim) = inner;
  }
  for (int i = 0; i < ConditioningVector::kDim; ++i) {
    out[i] = c.mask[i] != 0 ? static_cast<S>(vals[i]) : S(0);
    out[ConditioningVector::kDim + i] = static_cast<S>(c.mask[i]);
  }
  return out;
}

template <class S>
MatX<S> MadiffModelT<S>::window_to_input(const JointWindowT<S>& w) const {
  const int L = w.length(), d = w.dim();
  MatX<S> X(2 * d + 2, L);
  for (int t = 0; t < L; ++t) {
    X.col(t).topRows(d) = w.x[0].row(t).transpose();
    X.col(t).middleRows(d, d) = w.x[1].row(t).transpose();
    X(2 * d, t) = w.observed[0](t);
    X(2 * d + 1, t) = w.observed[1](t);
  }
  return X;
}

template <class S>
typename MadiffModelT<S>::Sample MadiffModelT<S>::make_sample(const AugDataset& aug, int traj_idx,
                                                              int observer, int t0) const {
  const AugTrajectory& at = aug.trajs[traj_idx];
  const int C = cfg.history, L = cfg.window_len(), d = kAugObsDim;
  Sample s;
  for (int slot = 0; slot < 2; ++slot) {
    s.window.x[slot] = MatX<S>::Zero(L, d);
    s.window.pin[slot] = VecX<S>::Zero(L);
    s.window.observed[slot] = VecX<S>::Zero(L);
  }
  for (int slot = 0; slot < 2; ++slot) {
    const int agent = slot == 0 ? observer : 1 - observer;
    for (int r = 0; r < L; ++r) {
      const int step = t0 - C + r;
      if (step < 0 || step >= at.T) {
        s.window.pin[slot](r) = S(1);  // zero padding
        continue;
      }
      const bool history_row = r <= C;
      if (history_row && slot == 1) {
        // decentralized execution: teammate history is zeroed but pinned
        s.window.pin[slot](r) = S(1);
        continue;
      }
      VectorXd raw = at.aug_obs[agent].row(step).transpose().cast<double>();
      VectorXd norm = aug.obs_norm.apply(raw);
      s.window.x[slot].row(r) = norm.transpose().cast<S>();
      if (history_row) {
        s.window.pin[slot](r) = S(1);
        s.window.observed[slot](r) = S(1);
      }
    }
  }

  if (cfg.conditions.returns) s.cond.set_returns(at.returns[t0]);
  if (cfg.conditions.profile) s.cond.set_profile(at.profile[observer]);
  if (cfg.conditions.e_char) s.cond.set_char(at.e_char[observer].cast<double>());
  if (cfg.conditions.e_mental)
    s.cond.set_mental(at.e_mental[observer].row(t0).transpose().cast<double>());

  const int t_inv = t0 + 1 < at.T ? t0 : std::max(0, t0 - 1);
  s.inv_in = VecX<S>(2 * kObsDim);
  s.inv_in.topRows(kObsDim) =
      at.aug_obs[observer].row(t_inv).leftCols(kObsDim).transpose().template cast<S>();
  s.inv_in.bottomRows(kObsDim) =
      at.aug_obs[observer].row(t_inv + 1).leftCols(kObsDim).transpose().template cast<S>();
  s.inv_action = at.actions[observer][t_inv];
  return s;
}

template <class S>
typename MadiffModelT<S>::LossStats MadiffModelT<S>::loss(std::vector<Sample>& batch,
                                                          double p_drop, Rng& rng,
                                                          bool do_backward) {
  if (batch.empty()) throw std::invalid_argument("madiff_loss: empty batch");
  const int B = static_cast<int>(batch.size());
  const int d = kAugObsDim;
  LossStats stats;
  stats.batch = B;

  std::vector<MatX<S>> xs(B), eps(B);
  std::vector<int> ks(B);
  MatX<S> conds(2 * ConditioningVector::kDim, B);
  std::vector<std::array<MatX<S>, 2>> noise(B);

  for (int e = 0; e < B; ++e) {
    Sample& s = batch[e];
    const int L = s.window.length();
    ks[e] = 1 + rng.uniform_int(schedule.K);
    JointWindowT<S> noisy = s.window;
    for (int slot = 0; slot < 2; ++slot) {
      MatX<S> n(L, d);
      rng.fill_normal(n);
      noise[e][slot] = n;
      noisy.x[slot] = q_sample<S>(s.window.x[slot], ks[e], n, schedule);
      for (int r = 0; r < L; ++r)
        if (s.window.pin[slot](r) != S(0)) noisy.x[slot].row(r) = s.window.x[slot].row(r);
    }
    const bool drop = rng.bernoulli(p_drop);
    if (drop) ++stats.dropped;
    conds.col(e) = stack_condition(drop ? ConditioningVector::null() : s.cond);
    xs[e] = window_to_input(noisy);
  }

  typename DenoiserT<S>::Ctx ctx;
  std::vector<MatX<S>> outs = denoiser.forward(xs, ks, conds, do_backward ? &ctx : nullptr);

  std::vector<const JointWindowT<S>*> windows(B);
  for (int e = 0; e < B; ++e) windows[e] = &batch[e].window;
  std::vector<MatX<S>> douts;
  double diff_loss = masked_epsilon_mse<S>(outs, noise, windows, do_backward ? &douts : nullptr);

  // Inverse-dynamics term: squared error against the one-hot action.
  MatX<S> inv_in(2 * kObsDim, B);
  for (int e = 0; e < B; ++e) inv_in.col(e) = batch[e].inv_in;
  MatX<S> h_cache;
  MatX<S> scores = invdyn.forward(inv_in, &h_cache);
  MatX<S> dscores = MatX<S>::Zero(kNumActions, B);
  double inv_loss = 0;
  for (int e = 0; e < B; ++e) {
    for (int a = 0; a < kNumActions; ++a) {
      const double target = a == batch[e].inv_action ? 1.0 : 0.0;
      const double diff = scores(a, e) - target;
      inv_loss += diff * diff;
      dscores(a, e) = static_cast<S>(2.0 * diff / B);
    }
  }
  inv_loss /= B;

  if (do_backward) {
    denoiser.backward(ctx, douts);
    invdyn.backward(inv_in, h_cache, dscores);
  }

  stats.diffusion = diff_loss;
  stats.invdyn = inv_loss;
  stats.total = diff_loss + inv_loss;
  return stats;
}

template <class S>
MatX<S> MadiffModelT<S>::guided_epsilon_raw(const MatX<S>& X, int k, const ConditioningVector& c,
                                            double w) const {
  MatX<S> eps_null = denoiser.forward_one(X, k, stack_condition(ConditioningVector::null()));
  if (c.is_null()) return eps_null;
  MatX<S> eps_cond = denoiser.forward_one(X, k, stack_condition(c));
  return eps_null + static_cast<S>(w) * (eps_cond - eps_null);
}

template <class S>
JointWindowT<S> MadiffModelT<S>::ddim_plan(const MatrixXf& history_aug,
                                           const ConditioningVector& c, int steps, double w,
                                           uint64_t seed) const {
  const int C = cfg.history, L = cfg.window_len(), d = kAugObsDim;
  if (history_aug.rows() > C + 1)
    throw std::invalid_argument("ddim_plan: history longer than C+1 rows");
  if (history_aug.rows() > 0 && history_aug.cols() != d)
    throw std::invalid_argument("ddim_plan: history rows must have aug width");
  steps = std::clamp(steps, 1, schedule.K);

  JointWindowT<S> win;
  for (int slot = 0; slot < 2; ++slot) {
    win.x[slot] = MatX<S>::Zero(L, d);
    win.pin[slot] = VecX<S>::Zero(L);
    win.observed[slot] = VecX<S>::Zero(L);
  }
  // Pin values: observer history right-aligned at row C, teammate history and
  // padding zero.
  std::array<MatX<S>, 2> pin_values = {MatX<S>::Zero(L, d), MatX<S>::Zero(L, d)};
  const int hn = static_cast<int>(history_aug.rows());
  MatrixXf norm_hist = hn > 0 ? obs_norm.apply_rows(history_aug) : MatrixXf();
  for (int r = 0; r <= C; ++r) {
    win.pin[0](r) = S(1);
    win.pin[1](r) = S(1);
    const int src = r - (C + 1 - hn);
    if (src >= 0) {
      pin_values[0].row(r) = norm_hist.row(src).template cast<S>();
      win.observed[0](r) = S(1);
    }
  }

  Rng rng(hash_combine(seed, 0xdd1));
  for (int slot = 0; slot < 2; ++slot) rng.fill_normal(win.x[slot]);

  auto overwrite_pins = [&] {
    for (int slot = 0; slot < 2; ++slot)
      for (int r = 0; r < L; ++r)
        if (win.pin[slot](r) != S(0)) win.x[slot].row(r) = pin_values[slot].row(r);
  };

  std::vector<int> taus;
  for (int i = 0; i < steps; ++i) {
    int tau = steps == 1 ? schedule.K
                         : 1 + static_cast<int>(std::llround(static_cast<double>(i) *
                                                             (schedule.K - 1) / (steps - 1)));
    if (taus.empty() || tau != taus.back()) taus.push_back(tau);
  }

  for (int i = static_cast<int>(taus.size()) - 1; i >= 0; --i) {
    const int k = taus[i];
    const int k_next = i > 0 ? taus[i - 1] : 0;
    overwrite_pins();
    MatX<S> X = window_to_input(win);
    MatX<S> eps = guided_epsilon_raw(X, k, c, w);
    const double ab = schedule.abar(k), ab_next = schedule.abar(k_next);
    for (int slot = 0; slot < 2; ++slot) {
      for (int r = 0; r < L; ++r) {
        for (int col = 0; col < d; ++col) {
          const double e = eps(slot * d + col, r);
          const double xk = win.x[slot](r, col);
          double x0 = (xk - std::sqrt(1.0 - ab) * e) / std::sqrt(ab);
          x0 = std::clamp(x0, -1.0, 1.0);
          win.x[slot](r, col) =
              static_cast<S>(std::sqrt(ab_next) * x0 + std::sqrt(1.0 - ab_next) * e);
        }
      }
    }
  }
  overwrite_pins();
  for (int slot = 0; slot < 2; ++slot)
    win.x[slot] = win.x[slot].cwiseMax(S(-1)).cwiseMin(S(1));
  return win;
}

template <class S>
std::vector<Observation> MadiffModelT<S>::extract_plan(const JointWindowT<S>& window) const {
  std::vector<Observation> plan;
  for (int r = cfg.history + 1; r < window.length(); ++r) {
    VectorXd norm = window.x[0].row(r).transpose().template cast<double>();
    VectorXd raw = obs_norm.invert(norm);
    plan.push_back(raw.head(kObsDim).cast<float>());
  }
  return plan;
}

template <class S>
MadiffTrainLog train_madiff(MadiffModelT<S>& model, const AugDataset& aug,
                            const MadiffTrainConfig& tc, nn::Adam<S>* resume_opt, Rng* resume_rng) {
  if (aug.trajs.empty()) throw std::invalid_argument("train_madiff: empty dataset");
  if (model.cfg.conditions.any() && aug.trajs[0].e_mental[0].size() == 0)
    throw std::invalid_argument("train_madiff: condition set needs augmented embeddings");
  model.obs_norm = aug.obs_norm;
  model.cond_norm = aug.cond_norm;

  nn::Adam<S> local_opt({tc.lr, 0.9, 0.999, 1e-8, 0.0});
  nn::Adam<S>* opt = resume_opt ? resume_opt : &local_opt;
  if (!resume_opt || opt->m.empty()) opt->init(model.params());
  Rng local_rng(hash_combine(tc.seed, 0x3ad));
  Rng* rng = resume_rng ? resume_rng : &local_rng;

  MadiffTrainLog log;
  double window_sum = 0;
  int window_count = 0;
  for (int step = 0; step < tc.steps; ++step) {
    std::vector<typename MadiffModelT<S>::Sample> batch;
    for (int b = 0; b < tc.batch; ++b) {
      int traj = rng->uniform_int(static_cast<int>(aug.trajs.size()));
      int observer = rng->uniform_int(2);
      int t0 = rng->uniform_int(aug.trajs[traj].T);
      batch.push_back(model.make_sample(aug, traj, observer, t0));
    }
    model.params().zero_grads();
    auto stats = model.loss(batch, model.cfg.p_drop, *rng, true);
    opt->step(model.params());
    log.step_loss.push_back(stats.total);
    window_sum += stats.total;
    if (++window_count == tc.log_every) {
      log.loss.push_back(window_sum / window_count);
      window_sum = 0;
      window_count = 0;
    }
  }
  if (window_count > 0) log.loss.push_back(window_sum / window_count);
  return log;
}

namespace {
constexpr uint32_t kMadiffSchema = 1;
constexpr uint32_t kAugSchema = 1;
}

void save_augmented(const std::string& path, const AugDataset& aug) {
  ArchiveWriter w;
  w.put_string("kind", "augmented");
  w.put_u64("layout_hash", {aug.layout_hash});
  w.put_i32("count", {static_cast<int32_t>(aug.trajs.size())});
  for (size_t i = 0; i < aug.trajs.size(); ++i) {
    const AugTrajectory& at = aug.trajs[i];
    std::string p = "t" + std::to_string(i) + "/";
    w.put_f32(p + "returns", at.returns);
    for (int a = 0; a < 2; ++a) {
      std::string ap = p + std::to_string(a) + "/";
      w.put_f32(ap + "e_char", at.e_char[a]);
      w.put_f32(ap + "e_mental", at.e_mental[a]);
    }
  }
  aug.obs_norm.save(w, "obsnorm/");
  aug.cond_norm.save(w, "condnorm/");
  w.save(path, kAugSchema);
}

AugDataset load_augmented(const std::string& path, const Dataset& data) {
  Archive ar = Archive::load(path);
  if (ar.schema_version() != kAugSchema)
    throw std::runtime_error("augmented: schema version mismatch: " + path);
  if (ar.get_string("kind") != "augmented")
    throw std::runtime_error("augmented: wrong artifact kind in " + path);
  AugDataset aug;
  aug.layout_hash = ar.get_u64("layout_hash")[0];
  if (aug.layout_hash != data.manifest.layout_hash)
    throw std::runtime_error("augmented: layout hash does not match the dataset");
  const int count = ar.get_i32("count")[0];
  if (count != static_cast<int>(data.size()))
    throw std::runtime_error("augmented: trajectory count does not match the dataset");
  aug.obs_norm = Normalizer::load(ar, "obsnorm/");
  aug.cond_norm = Normalizer::load(ar, "condnorm/");

  int i = 0;
  for (const auto& [key, trajs] : data.groups()) {
    (void)key;
    for (const JointTrajectory& traj : trajs) {
      std::string p = "t" + std::to_string(i) + "/";
      AugTrajectory at;
      at.T = traj.T;
      at.returns = ar.get_f32(p + "returns");
      for (int a = 0; a < 2; ++a) {
        std::string ap = p + std::to_string(a) + "/";
        at.e_char[a] = ar.get_f32(ap + "e_char");
        at.e_mental[a] = ar.get_f32(ap + "e_mental");
        at.aug_obs[a] = augment_observations(traj.obs[a], traj.actions[1 - a]);
        at.actions[a] = traj.actions[a];
        at.profile_names[a] = traj.profiles[a];
        at.profile[a] = profile_by_name(traj.profiles[a]).weights;
      }
      aug.trajs.push_back(std::move(at));
      ++i;
    }
  }
  return aug;
}

void save_madiff(const std::string& path, const MadiffModelT<float>& model,
                 const nn::Adam<float>* opt, const Rng* rng) {
  ArchiveWriter w;
  const MadiffConfig& c = model.cfg;
  w.put_string("kind", "madiff");
  w.put_string("conditions", c.conditions.descriptor());
  w.put_string("schedule_kind", c.schedule_kind);
  w.put_i32("dims", {c.history, c.horizon, c.diffusion_steps, c.emb, c.hidden, c.kernel,
                     c.conv_layers, c.invdyn_hidden, c.ddim_steps});
  w.put_f64("scalars", MatrixXd{{c.p_drop, c.guidance_w, c.returns_gamma, c.returns_target}});
  model.schedule.save(w, "sched/");
  model.obs_norm.save(w, "obsnorm/");
  model.cond_norm.save(w, "condnorm/");
  const_cast<MadiffModelT<float>&>(model).params().save(w, "p/");
  if (opt) opt->save(w, "opt/");
  if (rng) w.put_u64("rng_state", {rng->state()});
  w.save(path, kMadiffSchema);
}

MadiffModelT<float> load_madiff(const std::string& path, nn::Adam<float>* opt, Rng* rng) {
  Archive ar = Archive::load(path);
  if (ar.schema_version() != kMadiffSchema)
    throw std::runtime_error("madiff checkpoint: schema version mismatch: " + path);
  if (ar.get_string("kind") != "madiff")
    throw std::runtime_error("madiff checkpoint: wrong artifact kind in " + path);
  auto dims = ar.get_i32("dims");
  MadiffConfig c;
  c.history = dims[0];
  c.horizon = dims[1];
  c.diffusion_steps = dims[2];
  c.emb = dims[3];
  c.hidden = dims[4];
  c.kernel = dims[5];
  c.conv_layers = dims[6];
  c.invdyn_hidden = dims[7];
  c.ddim_steps = dims[8];
  MatrixXd scalars = ar.get_f64("scalars");
  c.p_drop = scalars(0, 0);
  c.guidance_w = scalars(0, 1);
  c.returns_gamma = scalars(0, 2);
  c.returns_target = scalars(0, 3);
  c.schedule_kind = ar.get_string("schedule_kind");
  c.conditions = ConditionSet::parse(ar.get_string("conditions"));
  MadiffModelT<float> model(c, 0);
  model.schedule = DiffusionSchedule::load(ar, "sched/");
  model.obs_norm = Normalizer::load(ar, "obsnorm/");
  model.cond_norm = Normalizer::load(ar, "condnorm/");
  model.params().load(ar, "p/");
  if (opt) {
    opt->init(model.params());
    opt->load(ar, "opt/");
  }
  if (rng && ar.has("rng_state")) rng->set_state(ar.get_u64("rng_state")[0]);
  return model;
}

template class MadiffModelT<float>;
template class MadiffModelT<double>;
template MadiffTrainLog train_madiff<float>(MadiffModelT<float>&, const AugDataset&,
                                            const MadiffTrainConfig&, nn::Adam<float>*, Rng*);
template MadiffTrainLog train_madiff<double>(MadiffModelT<double>&, const AugDataset&,
                                             const MadiffTrainConfig&, nn::Adam<double>*, Rng*);

}  // namespace tomcat
