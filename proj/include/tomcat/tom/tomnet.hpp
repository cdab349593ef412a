#pragma once

#include <algorithm>
#include <optional>
#include <string>
#include <vector>

#include "tomcat/nn/nn.hpp"
#include "tomcat/policy/dataset.hpp"

namespace tomcat {

struct ToMnetConfig {
  int obs_dim = kObsDim;
  int action_dim = kNumActions;
  int profile_dim = kNumFeatures;
  int lstm_hidden = 64;
  int embed_dim = kEmbedDim;
  int head_hidden = 64;
  double dropout = 0.2;
  int n_past = 4;
  int t_past = 100;
  int t_cur = 10;
  int sr_window = 30;     // minimum teammate future steps for SR targets
  double sr_gamma = 0.99;

  int step_dim() const { return obs_dim + action_dim; }
  int sign_classes() const { return 3 * profile_dim; }
  static constexpr int kSrBin = 6;
  static constexpr int kSrCat = 4;  // held item: onion, dish, soup, nothing
  static constexpr int kSrNum = 3;  // path distance, x, y (obs-normalized units)
};

// One (obs, action) sequence, rows = steps, natural time order.
struct StepSeq {
  MatrixXf obs;                  // T x obs_dim
  std::vector<uint8_t> actions;  // T
  int length() const { return static_cast<int>(obs.rows()); }
};

struct ToMTargets {
  int next_action = 0;
  Eigen::Matrix<int, kNumFeatures, 1> signs;  // class index: 0 -> -1, 1 -> 0, 2 -> +1
  VectorXd sr_binary{ToMnetConfig::kSrBin};
  VectorXd sr_categorical{ToMnetConfig::kSrCat};
  VectorXd sr_numeric{ToMnetConfig::kSrNum};
};

struct ToMExample {
  VectorXd profile;            // observer weights
  std::vector<StepSeq> past;   // observer's past trajectories (<= t_past steps each)
  StepSeq current;             // trailing window, already reversed, newest first
  Observation query;           // o_t
  ToMTargets targets;
  std::string observer_name, teammate_name;
};

struct ToMPrediction {
  VectorXd next_action;                          // 6, sums to 1
  Eigen::Matrix<double, 3, kNumFeatures> signs;  // column k: P(-1), P(0), P(+1)
  VectorXd sr_binary;                            // 6 Bernoulli means
  VectorXd sr_categorical;                       // 4, sums to 1
  VectorXd sr_numeric_mean;                      // 3
  VectorXd sr_numeric_var;                       // 3, positive
};

// Probability floor inside logs; keeps the loss finite on saturated heads.
inline constexpr double kProbFloor = 1e-8;

namespace detail {

template <class S>
struct ToMBatch {
  int B = 0, P = 0, Tp = 0, Tc = 0;
  MatX<S> profile;                 // profile_dim x B
  std::vector<MatX<S>> past_x;     // Tp of (step_dim x B*P)
  std::vector<VecX<S>> past_mask;  // Tp of (B*P)
  VecX<S> lane_valid;              // B*P
  VecX<S> past_count;              // B
  std::vector<MatX<S>> cur_x;      // Tc of (step_dim x B)
  std::vector<VecX<S>> cur_mask;   // Tc of (B)
  VecX<S> cur_any;                 // B
  MatX<S> query;                   // obs_dim x B
  std::vector<int> action;
  Eigen::MatrixXi signs;  // kNumFeatures x B
  MatX<S> sr_bin, sr_cat, sr_num;
};

template <class S>
MatX<S> encode_step(const StepSeq& seq, int t, int step_dim, int action_dim) {
  MatX<S> x = MatX<S>::Zero(step_dim, 1);
  x.topRows(step_dim - action_dim) = seq.obs.row(t).transpose().template cast<S>();
  x(step_dim - action_dim + seq.actions[t], 0) = S(1);
  return x;
}

template <class S>
ToMBatch<S> make_batch(const std::vector<ToMExample>& examples, const std::vector<int>& idx,
                       const ToMnetConfig& cfg) {
  ToMBatch<S> b;
  b.B = static_cast<int>(idx.size());
  b.P = 0;
  for (int i : idx) b.P = std::max(b.P, static_cast<int>(examples[i].past.size()));
  b.Tp = 0;
  for (int i : idx)
    for (const StepSeq& s : examples[i].past)
      b.Tp = std::max(b.Tp, std::min(s.length(), cfg.t_past));
  b.Tc = cfg.t_cur;
  const int sd = cfg.step_dim(), ad = cfg.action_dim;

  b.profile.resize(cfg.profile_dim, b.B);
  b.query.resize(cfg.obs_dim, b.B);
  b.lane_valid = VecX<S>::Zero(b.B * std::max(b.P, 1));
  b.past_count = VecX<S>::Zero(b.B);
  b.cur_any = VecX<S>::Zero(b.B);
  b.past_x.assign(b.Tp, MatX<S>::Zero(sd, b.B * std::max(b.P, 1)));
  b.past_mask.assign(b.Tp, VecX<S>::Zero(b.B * std::max(b.P, 1)));
  b.cur_x.assign(b.Tc, MatX<S>::Zero(sd, b.B));
  b.cur_mask.assign(b.Tc, VecX<S>::Zero(b.B));
  b.action.resize(b.B);
  b.signs.resize(kNumFeatures, b.B);
  b.sr_bin.resize(ToMnetConfig::kSrBin, b.B);
  b.sr_cat.resize(ToMnetConfig::kSrCat, b.B);
  b.sr_num.resize(ToMnetConfig::kSrNum, b.B);

  for (int col = 0; col < b.B; ++col) {
    const ToMExample& ex = examples[idx[col]];
    b.profile.col(col) = ex.profile.cast<S>();
    b.query.col(col) = ex.query.cast<S>();
    b.past_count(col) = static_cast<S>(ex.past.size());
    for (int p = 0; p < static_cast<int>(ex.past.size()); ++p) {
      const int lane = col * std::max(b.P, 1) + p;
      b.lane_valid(lane) = S(1);
      const int len = std::min(ex.past[p].length(), cfg.t_past);
      for (int t = 0; t < len; ++t) {
        b.past_x[t].col(lane) = encode_step<S>(ex.past[p], t, sd, ad);
        b.past_mask[t](lane) = S(1);
      }
    }
    const int clen = std::min(ex.current.length(), b.Tc);
    for (int t = 0; t < clen; ++t) {
      b.cur_x[t].col(col) = encode_step<S>(ex.current, t, sd, ad);
      b.cur_mask[t](col) = S(1);
    }
    if (clen > 0) b.cur_any(col) = S(1);
    b.action[col] = ex.targets.next_action;
    b.signs.col(col) = ex.targets.signs;
    b.sr_bin.col(col) = ex.targets.sr_binary.cast<S>();
    b.sr_cat.col(col) = ex.targets.sr_categorical.cast<S>();
    b.sr_num.col(col) = ex.targets.sr_numeric.cast<S>();
  }
  return b;
}

}  // namespace detail

// Character / Mental / Prediction networks trained end-to-end. The character
// embedding is the mean of per-past-trajectory embeddings; an empty past (and
// a fully masked current window) maps to the zero vector.
template <class S>
class ToMnetT {
 public:
  ToMnetConfig cfg;

  explicit ToMnetT(const ToMnetConfig& config = {}, uint64_t seed = 0) : cfg(config) {
    Rng rng(hash_combine(seed, 0x70a11e7));
    char_lstm_ = nn::Lstm<S>(cfg.step_dim(), cfg.lstm_hidden, rng);
    char_proj_ = nn::Linear<S>(cfg.lstm_hidden + cfg.profile_dim, cfg.embed_dim, rng);
    mental_lstm_ = nn::Lstm<S>(cfg.step_dim(), cfg.lstm_hidden, rng);
    mental_proj_ =
        nn::Linear<S>(cfg.lstm_hidden + cfg.profile_dim + cfg.embed_dim, cfg.embed_dim, rng);
    const int zdim = cfg.profile_dim + cfg.obs_dim + 2 * cfg.embed_dim;
    auto head = [&](int arity) {
      return Head{nn::Linear<S>(zdim, cfg.head_hidden, rng),
                  nn::Linear<S>(cfg.head_hidden, arity, rng)};
    };
    h_action_ = head(cfg.action_dim);
    h_sign_ = head(cfg.sign_classes());
    h_bin_ = head(ToMnetConfig::kSrBin);
    h_cat_ = head(ToMnetConfig::kSrCat);
    h_num_ = head(2 * ToMnetConfig::kSrNum);
    register_params();
  }

  ToMnetT(const ToMnetT& other) : ToMnetT(other.cfg, 0) { params_.set_values(other.params_.values()); }
  ToMnetT& operator=(const ToMnetT& other) {
    params_.set_values(other.params_.values());
    return *this;
  }

  nn::ParamRegistry<S>& params() { return params_; }

  struct Forward {
    MatX<S> e_char, e_mental;                       // embed_dim x B
    MatX<S> p_action, p_cat;                        // softmax outputs
    MatX<S> p_sign;                                 // 3*profile_dim x B, softmax per triple
    MatX<S> p_bin;                                  // sigmoid outputs
    MatX<S> mu, logvar;                             // kSrNum x B
    // caches
    typename nn::Lstm<S>::Cache char_cache, mental_cache;
    MatX<S> char_proj_in, mental_proj_in, e_char_lanes, z;
    MatX<S> ha, hs, hb, hc, hn;                     // head hidden activations (post-dropout)
    MatX<S> da, ds, dbm, dcm, dnm;                  // dropout masks
    MatX<S> char_drop, mental_drop;                 // lstm output dropout masks
  };

  Forward forward(const detail::ToMBatch<S>& b, bool train, Rng* rng) const {
    Forward f;
    const int B = b.B, P = std::max(b.P, 1);
    const int lanes = B * P;

    // Character branch.
    MatX<S> hchar = b.Tp > 0 ? char_lstm_.forward(b.past_x, b.past_mask, &f.char_cache)
                             : MatX<S>::Zero(cfg.lstm_hidden, lanes);
    f.char_drop = train ? nn::dropout_mask<S>(hchar.rows(), hchar.cols(), cfg.dropout, *rng)
                        : MatX<S>::Ones(hchar.rows(), hchar.cols());
    hchar = hchar.cwiseProduct(f.char_drop);
    f.char_proj_in.resize(cfg.lstm_hidden + cfg.profile_dim, lanes);
    for (int col = 0; col < B; ++col)
      for (int p = 0; p < P; ++p) {
        f.char_proj_in.col(col * P + p) << hchar.col(col * P + p), b.profile.col(col);
      }
    f.e_char_lanes = char_proj_.forward(f.char_proj_in);
    for (int lane = 0; lane < lanes; ++lane)
      if (b.lane_valid(lane) == S(0)) f.e_char_lanes.col(lane).setZero();
    f.e_char = MatX<S>::Zero(cfg.embed_dim, B);
    // Summation order is canonicalized (lexicographic on the embeddings) so
    // the mean is exactly invariant to past-trajectory permutations.
    std::vector<int> order;
    for (int col = 0; col < B; ++col) {
      if (b.past_count(col) == S(0)) continue;
      order.clear();
      for (int p = 0; p < P; ++p)
        if (b.lane_valid(col * P + p) != S(0)) order.push_back(col * P + p);
      std::sort(order.begin(), order.end(), [&](int u, int v) {
        for (int d = 0; d < cfg.embed_dim; ++d) {
          if (f.e_char_lanes(d, u) != f.e_char_lanes(d, v))
            return f.e_char_lanes(d, u) < f.e_char_lanes(d, v);
        }
        return false;
      });
      for (int lane : order) f.e_char.col(col) += f.e_char_lanes.col(lane);
      f.e_char.col(col) /= b.past_count(col);
    }

    // Mental branch.
    MatX<S> hmental = mental_lstm_.forward(b.cur_x, b.cur_mask, &f.mental_cache);
    f.mental_drop = train ? nn::dropout_mask<S>(hmental.rows(), hmental.cols(), cfg.dropout, *rng)
                          : MatX<S>::Ones(hmental.rows(), hmental.cols());
    hmental = hmental.cwiseProduct(f.mental_drop);
    f.mental_proj_in.resize(cfg.lstm_hidden + cfg.profile_dim + cfg.embed_dim, B);
    f.mental_proj_in << hmental, b.profile, f.e_char;
    f.e_mental = mental_proj_.forward(f.mental_proj_in);
    for (int col = 0; col < B; ++col)
      if (b.cur_any(col) == S(0)) f.e_mental.col(col).setZero();

    // Prediction heads.
    f.z.resize(cfg.profile_dim + cfg.obs_dim + 2 * cfg.embed_dim, B);
    f.z << b.profile, b.query, f.e_char, f.e_mental;
    // `act` caches the pre-dropout tanh output; fc2 consumes act (x) mask.
    auto run_head = [&](const Head& h, MatX<S>& act, MatX<S>& drop) {
      act = nn::tanh_forward<S>(h.fc1.forward(f.z));
      drop = train ? nn::dropout_mask<S>(act.rows(), act.cols(), cfg.dropout, *rng)
                   : MatX<S>::Ones(act.rows(), act.cols());
      return h.fc2.forward(act.cwiseProduct(drop));
    };
    f.p_action = nn::softmax_cols<S>(run_head(h_action_, f.ha, f.da));
    MatX<S> sign_logits = run_head(h_sign_, f.hs, f.ds);
    f.p_sign.resize(sign_logits.rows(), B);
    for (int k = 0; k < cfg.profile_dim; ++k)
      f.p_sign.middleRows(3 * k, 3) = nn::softmax_cols<S>(sign_logits.middleRows(3 * k, 3));
    f.p_bin = nn::sigmoid<S>(run_head(h_bin_, f.hb, f.dbm));
    f.p_cat = nn::softmax_cols<S>(run_head(h_cat_, f.hc, f.dcm));
    MatX<S> num_out = run_head(h_num_, f.hn, f.dnm);
    f.mu = num_out.topRows(ToMnetConfig::kSrNum);
    f.logvar = num_out.bottomRows(ToMnetConfig::kSrNum);
    return f;
  }

  // Mean over the batch of the per-example loss sum (all heads unweighted).
  double loss(const Forward& f, const detail::ToMBatch<S>& b) const {
    const double floor_ = kProbFloor;
    double total = 0;
    for (int col = 0; col < b.B; ++col) {
      total -= std::log(std::max(static_cast<double>(f.p_action(b.action[col], col)), floor_));
      for (int k = 0; k < cfg.profile_dim; ++k)
        total -= std::log(
            std::max(static_cast<double>(f.p_sign(3 * k + b.signs(k, col), col)), floor_));
      for (int j = 0; j < ToMnetConfig::kSrBin; ++j) {
        double p = f.p_bin(j, col), t = b.sr_bin(j, col);
        total -= t * std::log(std::max(p, floor_)) + (1 - t) * std::log(std::max(1 - p, floor_));
      }
      for (int c = 0; c < ToMnetConfig::kSrCat; ++c)
        total -= static_cast<double>(b.sr_cat(c, col)) *
                 std::log(std::max(static_cast<double>(f.p_cat(c, col)), floor_));
      for (int q = 0; q < ToMnetConfig::kSrNum; ++q) {
        double mu = f.mu(q, col), lv = f.logvar(q, col), t = b.sr_num(q, col);
        total += 0.5 * (std::log(2 * M_PI) + lv + (t - mu) * (t - mu) * std::exp(-lv));
      }
    }
    return total / b.B;
  }

  // Accumulates parameter gradients of loss(). Call params().zero_grads()
  // first when starting a fresh step.
  void backward(const Forward& f, const detail::ToMBatch<S>& b) {
    const int B = b.B, P = std::max(b.P, 1);
    const S inv_b = S(1) / static_cast<S>(B);

    // Head output gradients.
    MatX<S> g_action = f.p_action;
    for (int col = 0; col < B; ++col) g_action(b.action[col], col) -= S(1);
    MatX<S> g_sign = f.p_sign;
    for (int col = 0; col < B; ++col)
      for (int k = 0; k < cfg.profile_dim; ++k) g_sign(3 * k + b.signs(k, col), col) -= S(1);
    MatX<S> g_bin = f.p_bin - b.sr_bin;  // sigmoid + BCE
    MatX<S> g_cat = f.p_cat;
    for (int col = 0; col < B; ++col) {
      const S tot = b.sr_cat.col(col).sum();
      g_cat.col(col) = f.p_cat.col(col) * tot - b.sr_cat.col(col);
    }
    MatX<S> g_num(2 * ToMnetConfig::kSrNum, B);
    g_num.topRows(ToMnetConfig::kSrNum) =
        ((f.mu - b.sr_num).array() * (-f.logvar).array().exp()).matrix();
    g_num.bottomRows(ToMnetConfig::kSrNum) =
        (S(0.5) * (S(1) - (b.sr_num - f.mu).array().square() * (-f.logvar).array().exp()))
            .matrix();

    MatX<S> dz = MatX<S>::Zero(f.z.rows(), B);
    auto back_head = [&](Head& h, const MatX<S>& act, const MatX<S>& drop, MatX<S> g) {
      g *= inv_b;
      MatX<S> dh = h.fc2.backward(act.cwiseProduct(drop), g).cwiseProduct(drop);
      dh = nn::tanh_backward<S>(act, dh);
      dz += h.fc1.backward(f.z, dh);
    };
    back_head(h_action_, f.ha, f.da, std::move(g_action));
    back_head(h_sign_, f.hs, f.ds, std::move(g_sign));
    back_head(h_bin_, f.hb, f.dbm, std::move(g_bin));
    back_head(h_cat_, f.hc, f.dcm, std::move(g_cat));
    back_head(h_num_, f.hn, f.dnm, std::move(g_num));

    // Split dz into the branch gradients; profile and query are data.
    MatX<S> de_char = dz.middleRows(cfg.profile_dim + cfg.obs_dim, cfg.embed_dim);
    MatX<S> de_mental = dz.bottomRows(cfg.embed_dim);

    for (int col = 0; col < B; ++col)
      if (b.cur_any(col) == S(0)) de_mental.col(col).setZero();
    MatX<S> d_mental_in = mental_proj_.backward(f.mental_proj_in, de_mental);
    MatX<S> dh_mental =
        d_mental_in.topRows(cfg.lstm_hidden).cwiseProduct(f.mental_drop);
    de_char += d_mental_in.bottomRows(cfg.embed_dim);
    mental_lstm_.backward(b.cur_x, f.mental_cache, dh_mental);

    MatX<S> de_lanes = MatX<S>::Zero(cfg.embed_dim, B * P);
    for (int col = 0; col < B; ++col) {
      if (b.past_count(col) == S(0)) continue;
      for (int p = 0; p < P; ++p)
        if (b.lane_valid(col * P + p) != S(0))
          de_lanes.col(col * P + p) = de_char.col(col) / b.past_count(col);
    }
    if (b.Tp > 0) {
      MatX<S> d_char_in = char_proj_.backward(f.char_proj_in, de_lanes);
      MatX<S> dh_char = d_char_in.topRows(cfg.lstm_hidden).cwiseProduct(f.char_drop);
      char_lstm_.backward(b.past_x, f.char_cache, dh_char);
    }
  }

  // --- single-example interfaces -----------------------------------------

  VectorXd char_embed(const VectorXd& profile, const std::vector<StepSeq>& past) const {
    if (past.empty()) return VectorXd::Zero(cfg.embed_dim);
    ToMExample ex;
    ex.profile = profile;
    ex.past = past;
    ex.current = StepSeq{MatrixXf::Zero(0, cfg.obs_dim), {}};
    ex.query = Observation::Zero(cfg.obs_dim);
    fill_dummy_targets(ex);
    auto batch = detail::make_batch<S>({ex}, {0}, cfg);
    Forward f = forward(batch, false, nullptr);
    return f.e_char.col(0).template cast<double>();
  }

  // `window` is the trailing history in natural time order; it is reversed
  // and zero-padded to t_cur here.
  VectorXd mental_embed(const VectorXd& profile, const StepSeq& window,
                        const VectorXd& e_char) const {
    ToMExample ex;
    ex.profile = profile;
    ex.current = reverse_window(window, cfg.t_cur);
    ex.query = Observation::Zero(cfg.obs_dim);
    fill_dummy_targets(ex);
    auto batch = detail::make_batch<S>({ex}, {0}, cfg);
    if (batch.cur_any(0) == S(0)) return VectorXd::Zero(cfg.embed_dim);
    Forward f = forward(batch, false, nullptr);
    // Recompute the mental projection with the supplied e_char.
    MatX<S> in(cfg.lstm_hidden + cfg.profile_dim + cfg.embed_dim, 1);
    in << f.mental_proj_in.topRows(cfg.lstm_hidden), profile.cast<S>(), e_char.cast<S>();
    return mental_proj_.forward(in).col(0).template cast<double>();
  }

  // Mental embeddings for every step of one trajectory (window ending just
  // before t), batched over t. Row t of the result is e_mental at time t.
  MatrixXd mental_embed_series(const VectorXd& profile, const StepSeq& traj,
                               const VectorXd& e_char) const {
    const int T = traj.length();
    const int sd = cfg.step_dim();
    std::vector<MatX<S>> xs(cfg.t_cur, MatX<S>::Zero(sd, T));
    std::vector<VecX<S>> masks(cfg.t_cur, VecX<S>::Zero(T));
    for (int t = 0; t < T; ++t) {
      // reversed window: slot i holds step t-1-i
      for (int i = 0; i < cfg.t_cur; ++i) {
        const int src = t - 1 - i;
        if (src < 0) break;
        xs[i].col(t) = detail::encode_step<S>(traj, src, sd, cfg.action_dim);
        masks[i](t) = S(1);
      }
    }
    typename nn::Lstm<S>::Cache cache;
    MatX<S> h = mental_lstm_.forward(xs, masks, &cache);
    MatX<S> in(cfg.lstm_hidden + cfg.profile_dim + cfg.embed_dim, T);
    for (int t = 0; t < T; ++t) {
      in.col(t) << h.col(t), profile.cast<S>(), e_char.cast<S>();
    }
    MatX<S> e = mental_proj_.forward(in);
    MatrixXd out = MatrixXd::Zero(T, cfg.embed_dim);
    for (int t = 0; t < T; ++t)
      if (t > 0) out.row(t) = e.col(t).template cast<double>().transpose();
    return out;
  }

  ToMPrediction predict(const VectorXd& profile, const Observation& query,
                        const VectorXd& e_char, const VectorXd& e_mental) const {
    MatX<S> z(cfg.profile_dim + cfg.obs_dim + 2 * cfg.embed_dim, 1);
    z << profile.cast<S>(), query.cast<S>(), e_char.cast<S>(), e_mental.cast<S>();
    auto run = [&](const Head& h) {
      return h.fc2.forward(nn::tanh_forward<S>(h.fc1.forward(z)));
    };
    ToMPrediction out;
    out.next_action = nn::softmax_cols<S>(run(h_action_)).col(0).template cast<double>();
    MatX<S> sl = run(h_sign_);
    out.signs.resize(3, kNumFeatures);
    for (int k = 0; k < cfg.profile_dim; ++k)
      out.signs.col(k) =
          nn::softmax_cols<S>(MatX<S>(sl.middleRows(3 * k, 3))).col(0).template cast<double>();
    out.sr_binary = nn::sigmoid<S>(run(h_bin_)).col(0).template cast<double>();
    out.sr_categorical = nn::softmax_cols<S>(run(h_cat_)).col(0).template cast<double>();
    MatX<S> num = run(h_num_);
    out.sr_numeric_mean = num.topRows(ToMnetConfig::kSrNum).col(0).template cast<double>();
    out.sr_numeric_var =
        num.bottomRows(ToMnetConfig::kSrNum).col(0).array().exp().template cast<double>();
    return out;
  }

  static StepSeq reverse_window(const StepSeq& window, int t_cur) {
    StepSeq out;
    const int len = std::min(window.length(), t_cur);
    out.obs = MatrixXf::Zero(len, window.obs.cols());
    out.actions.resize(len);
    for (int i = 0; i < len; ++i) {
      out.obs.row(i) = window.obs.row(window.length() - 1 - i);
      out.actions[i] = window.actions[window.length() - 1 - i];
    }
    return out;
  }

 private:
  struct Head {
    nn::Linear<S> fc1, fc2;
  };

  void fill_dummy_targets(ToMExample& ex) const {
    ex.targets.next_action = 0;
    ex.targets.signs.setZero();
    ex.targets.sr_binary = VectorXd::Zero(ToMnetConfig::kSrBin);
    ex.targets.sr_categorical = VectorXd::Zero(ToMnetConfig::kSrCat);
    ex.targets.sr_numeric = VectorXd::Zero(ToMnetConfig::kSrNum);
  }

  void register_params() {
    params_.entries.clear();
    char_lstm_.reg(params_, "char_lstm");
    char_proj_.reg(params_, "char_proj");
    mental_lstm_.reg(params_, "mental_lstm");
    mental_proj_.reg(params_, "mental_proj");
    h_action_.fc1.reg(params_, "head_action.fc1");
    h_action_.fc2.reg(params_, "head_action.fc2");
    h_sign_.fc1.reg(params_, "head_sign.fc1");
    h_sign_.fc2.reg(params_, "head_sign.fc2");
    h_bin_.fc1.reg(params_, "head_bin.fc1");
    h_bin_.fc2.reg(params_, "head_bin.fc2");
    h_cat_.fc1.reg(params_, "head_cat.fc1");
    h_cat_.fc2.reg(params_, "head_cat.fc2");
    h_num_.fc1.reg(params_, "head_num.fc1");
    h_num_.fc2.reg(params_, "head_num.fc2");
  }

  nn::Lstm<S> char_lstm_, mental_lstm_;
  nn::Linear<S> char_proj_, mental_proj_;
  Head h_action_, h_sign_, h_bin_, h_cat_, h_num_;
  nn::ParamRegistry<S> params_;
};

using ToMnet = ToMnetT<float>;

// Standalone loss of a single prediction against targets (same formula the
// trainer optimizes).
double tomnet_loss(const ToMPrediction& pred, const ToMTargets& targets);

// --- dataset -> training examples ----------------------------------------

// Samples one meta-learning example: a teammate-bearing team of the observer,
// n_past past trajectories, a split point t with at least sr_window future
// steps, and SR targets by discounted averaging of the teammate's future.
ToMExample build_training_example(const Dataset& data, const std::string& observer_profile,
                                  const ToMnetConfig& cfg, Rng& rng);

// Independent brute-force discounted average used by tests.
VectorXd discounted_average(const MatrixXd& rows, double gamma);

struct ToMTrainConfig {
  double lr = 5e-4;
  double weight_decay = 5e-4;
  int batch = 128;
  int max_epochs = 2000;
  int patience = 10;
  double tolerance = 0.01;
  double val_frac = 0.2;
  uint64_t seed = 0;
};

struct ToMTrainLog {
  std::vector<double> train_loss, val_loss;
  int best_epoch = -1;
  double best_val = 0;
  int epochs_run = 0;
};

template <class S>
ToMTrainLog train_tomnet(ToMnetT<S>& model, const std::vector<ToMExample>& examples,
                         const ToMTrainConfig& tc);

struct ToMEvalResult {
  int n_past = 0, t_past = 0, t_cur = 0;
  double action_accuracy = 0;
  double sign_accuracy = 0;
  double true_profile_prob = 0;  // mean over weights of P(true sign)
  int examples = 0;
};

template <class S>
ToMEvalResult eval_tomnet(const ToMnetT<S>& model, const std::vector<ToMExample>& examples);

void save_tomnet(const std::string& path, const ToMnetT<float>& model);
ToMnetT<float> load_tomnet(const std::string& path);

}  // namespace tomcat
