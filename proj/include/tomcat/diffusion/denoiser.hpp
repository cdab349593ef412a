#pragma once

#include <vector>

#include "tomcat/nn/nn.hpp"

namespace tomcat {

// Noise-prediction network contract: temporal encoder-decoder over the step
// axis with cross-agent mixing (agents are concatenated per step), a
// sinusoidal step-index embedding and a condition embedding added to every
// step feature. Input rows carry a per-agent observed-mask channel so zeroed
// teammate history is distinguishable from real zeros.
struct DenoiserConfig {
  int d_in = kAugObsDim;
  int n_agents = 2;
  int emb = 128;
  int hidden = 256;
  int kernel = 5;
  int n_layers = 2;
  int cond_dim = 1 + kNumFeatures + 2 * kEmbedDim;  // returns, profile, char, mental

  int row_in() const { return n_agents * d_in + n_agents; }
  int row_out() const { return n_agents * d_in; }
};

template <class S>
class DenoiserT {
 public:
  DenoiserConfig cfg;

  DenoiserT() = default;
  DenoiserT(const DenoiserConfig& config, uint64_t seed) : cfg(config) {
    Rng rng(hash_combine(seed, 0xd1ffu));
    in_proj_ = nn::Linear<S>(cfg.row_in(), cfg.hidden, rng);
    t1_ = nn::Linear<S>(cfg.emb, cfg.emb, rng);
    t2_ = nn::Linear<S>(cfg.emb, cfg.hidden, rng);
    c1_ = nn::Linear<S>(2 * cfg.cond_dim, cfg.emb, rng);
    c2_ = nn::Linear<S>(cfg.emb, cfg.hidden, rng);
    convs_.clear();
    for (int l = 0; l < cfg.n_layers; ++l)
      convs_.emplace_back(cfg.hidden, cfg.hidden, cfg.kernel, rng);
    out_proj_ = nn::Linear<S>(cfg.hidden, cfg.row_out(), rng);
  }

  void reg(nn::ParamRegistry<S>& r, const std::string& p) {
    in_proj_.reg(r, p + "in");
    t1_.reg(r, p + "t1");
    t2_.reg(r, p + "t2");
    c1_.reg(r, p + "c1");
    c2_.reg(r, p + "c2");
    for (size_t l = 0; l < convs_.size(); ++l) convs_[l].reg(r, p + "conv" + std::to_string(l));
    out_proj_.reg(r, p + "out");
  }

  struct Ctx {
    std::vector<MatX<S>> X;                   // inputs, row_in x L
    std::vector<MatX<S>> H0;                  // post-tanh stem, hidden x L
    std::vector<std::vector<MatX<S>>> cols;   // [example][layer] im2col cache
    std::vector<std::vector<MatX<S>>> Hs;     // [example][layer] post-tanh
    MatX<S> t_in, t_h, c_in, c_h;             // embedding MLP caches (per example cols)
  };

  // xs[e]: (row_in x L_e); conds: (2*cond_dim x B) values stacked over mask.
  std::vector<MatX<S>> forward(const std::vector<MatX<S>>& xs, const std::vector<int>& ks,
                               const MatX<S>& conds, Ctx* ctx) const {
    const int B = static_cast<int>(xs.size());
    MatX<S> t_in(cfg.emb, B);
    for (int e = 0; e < B; ++e) t_in.col(e) = nn::sinusoidal_embedding<S>(ks[e], cfg.emb);
    MatX<S> t_h = nn::tanh_forward<S>(t1_.forward(t_in));
    MatX<S> temb = t2_.forward(t_h);
    MatX<S> c_h = nn::tanh_forward<S>(c1_.forward(conds));
    MatX<S> cemb = c2_.forward(c_h);

    std::vector<MatX<S>> out(B);
    if (ctx) {
      ctx->X = xs;
      ctx->H0.resize(B);
      ctx->cols.assign(B, {});
      ctx->Hs.assign(B, {});
      ctx->t_in = t_in;
      ctx->t_h = t_h;
      ctx->c_in = conds;
      ctx->c_h = c_h;
    }
    for (int e = 0; e < B; ++e) {
      MatX<S> H = in_proj_.forward(xs[e]);
      H.colwise() += (temb.col(e) + cemb.col(e)).eval();
      H = nn::tanh_forward<S>(H);
      if (ctx) ctx->H0[e] = H;
      for (size_t l = 0; l < convs_.size(); ++l) {
        MatX<S> col;
        H = nn::tanh_forward<S>(convs_[l].forward(H, ctx ? &col : nullptr));
        if (ctx) {
          ctx->cols[e].push_back(std::move(col));
          ctx->Hs[e].push_back(H);
        }
      }
      out[e] = out_proj_.forward(H);
    }
    return out;
  }

  MatX<S> forward_one(const MatX<S>& x, int k, const VecX<S>& cond_stacked) const {
    MatX<S> conds(2 * cfg.cond_dim, 1);
    conds.col(0) = cond_stacked;
    return forward({x}, {k}, conds, nullptr)[0];
  }

  void backward(const Ctx& ctx, const std::vector<MatX<S>>& douts) {
    const int B = static_cast<int>(ctx.X.size());
    MatX<S> demb = MatX<S>::Zero(cfg.hidden, B);
    for (int e = 0; e < B; ++e) {
      const int L = static_cast<int>(ctx.X[e].cols());
      const MatX<S>& h_last = convs_.empty() ? ctx.H0[e] : ctx.Hs[e].back();
      MatX<S> dH = out_proj_.backward(h_last, douts[e]);
      for (int l = static_cast<int>(convs_.size()) - 1; l >= 0; --l) {
        dH = nn::tanh_backward<S>(ctx.Hs[e][l], dH);
        dH = convs_[l].backward(ctx.cols[e][l], dH);
      }
      dH = nn::tanh_backward<S>(ctx.H0[e], dH);
      in_proj_.backward(ctx.X[e], dH);
      demb.col(e) = dH.rowwise().sum();
      (void)L;
    }
    MatX<S> dt_h = t2_.backward(ctx.t_h, demb);
    t1_.backward(ctx.t_in, nn::tanh_backward<S>(ctx.t_h, dt_h));
    MatX<S> dc_h = c2_.backward(ctx.c_h, demb);
    c1_.backward(ctx.c_in, nn::tanh_backward<S>(ctx.c_h, dc_h));
  }

 private:
  nn::Linear<S> in_proj_, t1_, t2_, c1_, c2_, out_proj_;
  std::vector<nn::Conv1d<S>> convs_;
};

// Two-layer perceptron over concat(o, o') trained with squared error against
// one-hot actions; argmax at execution, ties broken by lowest action index.
template <class S>
class InvDynT {
 public:
  int obs_dim = kObsDim, hidden = 128;

  InvDynT() = default;
  InvDynT(int obs_dim_, int hidden_, uint64_t seed) : obs_dim(obs_dim_), hidden(hidden_) {
    Rng rng(hash_combine(seed, 0x1d));
    fc1_ = nn::Linear<S>(2 * obs_dim_, hidden_, rng);
    fc2_ = nn::Linear<S>(hidden_, kNumActions, rng);
  }

  void reg(nn::ParamRegistry<S>& r, const std::string& p) {
    fc1_.reg(r, p + "fc1");
    fc2_.reg(r, p + "fc2");
  }

  // X: (2*obs_dim x B) -> scores (kNumActions x B).
  MatX<S> forward(const MatX<S>& X, MatX<S>* h_cache = nullptr) const {
    MatX<S> h = nn::tanh_forward<S>(fc1_.forward(X));
    if (h_cache) *h_cache = h;
    return fc2_.forward(h);
  }

  void backward(const MatX<S>& X, const MatX<S>& h, const MatX<S>& dscores) {
    MatX<S> dh = fc2_.backward(h, dscores);
    fc1_.backward(X, nn::tanh_backward<S>(h, dh));
  }

  VectorXd scores(const Observation& o, const Observation& o_next) const {
    if (o.size() != obs_dim || o_next.size() != obs_dim)
      throw std::invalid_argument("inverse_dynamics: observation length mismatch");
    MatX<S> x(2 * obs_dim, 1);
    x.col(0).topRows(obs_dim) = o.cast<S>();
    x.col(0).bottomRows(obs_dim) = o_next.cast<S>();
    return forward(x).col(0).template cast<double>();
  }

  // Scores renormalized to a valid distribution (negative part clipped).
  VectorXd action_distribution(const Observation& o, const Observation& o_next) const {
    VectorXd s = scores(o, o_next);
    VectorXd p = s.cwiseMax(0.0).array() + 1e-8;
    return p / p.sum();
  }

  int argmax_action(const Observation& o, const Observation& o_next) const {
    VectorXd s = scores(o, o_next);
    int best = 0;
    for (int a = 1; a < kNumActions; ++a)
      if (s[a] > s[best]) best = a;  // strict: ties keep the lowest index
    return best;
  }

 private:
  nn::Linear<S> fc1_, fc2_;
};

}  // namespace tomcat
