#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "tomcat/core/binio.hpp"
#include "tomcat/core/rng.hpp"
#include "tomcat/core/types.hpp"

// Minimal dense NN toolkit on Eigen. Layers own their parameters and
// gradients; batches are column-major (one example per column). Everything is
// templated on the scalar so training runs in float while gradient checks run
// in double.

namespace tomcat::nn {

using tomcat::MatX;
using tomcat::Rng;
using tomcat::VecX;

template <class S>
struct ParamRegistry {
  struct Entry {
    std::string name;
    MatX<S>* value;
    MatX<S>* grad;
  };
  std::vector<Entry> entries;

  void add(const std::string& name, MatX<S>& value, MatX<S>& grad) {
    entries.push_back({name, &value, &grad});
  }

  Eigen::Index size() const {
    Eigen::Index n = 0;
    for (const auto& e : entries) n += e.value->size();
    return n;
  }

  void zero_grads() {
    for (auto& e : entries) e.grad->setZero();
  }

  VecX<S> values() const {
    VecX<S> out(size());
    Eigen::Index at = 0;
    for (const auto& e : entries) {
      out.segment(at, e.value->size()) = Eigen::Map<const VecX<S>>(e.value->data(), e.value->size());
      at += e.value->size();
    }
    return out;
  }

  void set_values(const VecX<S>& flat) {
    Eigen::Index at = 0;
    for (auto& e : entries) {
      Eigen::Map<VecX<S>>(e.value->data(), e.value->size()) = flat.segment(at, e.value->size());
      at += e.value->size();
    }
  }

  VecX<S> grads() const {
    VecX<S> out(size());
    Eigen::Index at = 0;
    for (const auto& e : entries) {
      out.segment(at, e.grad->size()) = Eigen::Map<const VecX<S>>(e.grad->data(), e.grad->size());
      at += e.grad->size();
    }
    return out;
  }

  void save(ArchiveWriter& w, const std::string& prefix) const {
    for (const auto& e : entries) w.put_f64(prefix + e.name, e.value->template cast<double>());
  }

  void load(const Archive& ar, const std::string& prefix) {
    for (auto& e : entries) {
      MatrixXd m = ar.get_f64(prefix + e.name);
      if (m.rows() != e.value->rows() || m.cols() != e.value->cols())
        throw std::runtime_error("checkpoint: shape mismatch for " + e.name);
      *e.value = m.cast<S>();
    }
  }
};

template <class S>
MatX<S> uniform_init(int rows, int cols, int fan_in, Rng& rng) {
  MatX<S> m(rows, cols);
  S k = static_cast<S>(1.0 / std::sqrt(static_cast<double>(fan_in)));
  rng.fill_uniform(m, -k, k);
  return m;
}

template <class S>
struct Linear {
  MatX<S> W, b, dW, db;

  Linear() = default;
  Linear(int in, int out, Rng& rng)
      : W(uniform_init<S>(out, in, in, rng)),
        b(uniform_init<S>(out, 1, in, rng)),
        dW(MatX<S>::Zero(out, in)),
        db(MatX<S>::Zero(out, 1)) {}

  void reg(ParamRegistry<S>& r, const std::string& p) {
    r.add(p + ".W", W, dW);
    r.add(p + ".b", b, db);
  }

  MatX<S> forward(const MatX<S>& X) const { return (W * X).colwise() + b.col(0); }

  MatX<S> backward(const MatX<S>& X, const MatX<S>& dY) {
    dW.noalias() += dY * X.transpose();
    db.col(0) += dY.rowwise().sum();
    return W.transpose() * dY;
  }
};

template <class S>
MatX<S> tanh_forward(const MatX<S>& X) {
  return X.array().tanh();
}

// dX from dY and the forward output.
template <class S>
MatX<S> tanh_backward(const MatX<S>& Y, const MatX<S>& dY) {
  return (dY.array() * (S(1) - Y.array().square())).matrix();
}

template <class S>
MatX<S> sigmoid(const MatX<S>& X) {
  return (S(1) / (S(1) + (-X.array()).exp())).matrix();
}

// Inverted dropout; mask entries are 0 or 1/(1-p).
template <class S>
MatX<S> dropout_mask(Eigen::Index rows, Eigen::Index cols, double p, Rng& rng) {
  MatX<S> m(rows, cols);
  const S keep = static_cast<S>(1.0 / (1.0 - p));
  for (Eigen::Index j = 0; j < cols; ++j)
    for (Eigen::Index i = 0; i < rows; ++i) m(i, j) = rng.uniform01() >= p ? keep : S(0);
  return m;
}

// Single-layer LSTM over a masked sequence. Masked steps carry state through
// unchanged, which implements both zero-padding and variable lengths.
template <class S>
struct Lstm {
  int in = 0, hidden = 0;
  MatX<S> Wx, Wh, b, dWx, dWh, db;

  Lstm() = default;
  Lstm(int in_dim, int hidden_dim, Rng& rng)
      : in(in_dim),
        hidden(hidden_dim),
        Wx(uniform_init<S>(4 * hidden_dim, in_dim, hidden_dim, rng)),
        Wh(uniform_init<S>(4 * hidden_dim, hidden_dim, hidden_dim, rng)),
        b(MatX<S>::Zero(4 * hidden_dim, 1)),
        dWx(MatX<S>::Zero(4 * hidden_dim, in_dim)),
        dWh(MatX<S>::Zero(4 * hidden_dim, hidden_dim)),
        db(MatX<S>::Zero(4 * hidden_dim, 1)) {
    b.block(hidden, 0, hidden, 1).setOnes();  // forget-gate bias
  }

  void reg(ParamRegistry<S>& r, const std::string& p) {
    r.add(p + ".Wx", Wx, dWx);
    r.add(p + ".Wh", Wh, dWh);
    r.add(p + ".b", b, db);
  }

  struct Cache {
    std::vector<MatX<S>> i, f, g, o, c, h;  // per step, hidden x N
    std::vector<VecX<S>> mask;              // per step, N (empty = all valid)
    Eigen::Index n = 0;
  };

  // xs[t] is (in x N); masks[t] is (N) with 1 = valid (empty vector = all
  // valid). Returns the final hidden state (hidden x N).
  MatX<S> forward(const std::vector<MatX<S>>& xs, const std::vector<VecX<S>>& masks,
                  Cache* cache) const {
    const Eigen::Index n = xs.empty() ? 0 : xs[0].cols();
    MatX<S> h = MatX<S>::Zero(hidden, n), c = MatX<S>::Zero(hidden, n);
    if (cache) {
      cache->n = n;
      cache->i.clear(); cache->f.clear(); cache->g.clear(); cache->o.clear();
      cache->c.clear(); cache->h.clear(); cache->mask.clear();
    }
    for (size_t t = 0; t < xs.size(); ++t) {
      MatX<S> z = ((Wx * xs[t] + Wh * h).colwise() + b.col(0));
      MatX<S> ig = sigmoid<S>(z.topRows(hidden));
      MatX<S> fg = sigmoid<S>(z.block(hidden, 0, hidden, n));
      MatX<S> gg = tanh_forward<S>(z.block(2 * hidden, 0, hidden, n));
      MatX<S> og = sigmoid<S>(z.bottomRows(hidden));
      MatX<S> c_new = (fg.array() * c.array() + ig.array() * gg.array()).matrix();
      MatX<S> h_new = (og.array() * c_new.array().tanh()).matrix();
      if (t < masks.size() && masks[t].size() > 0) {
        for (Eigen::Index col = 0; col < n; ++col) {
          if (masks[t](col) == S(0)) {
            c_new.col(col) = c.col(col);
            h_new.col(col) = h.col(col);
          }
        }
      }
      if (cache) {
        cache->i.push_back(ig); cache->f.push_back(fg); cache->g.push_back(gg);
        cache->o.push_back(og); cache->c.push_back(c_new); cache->h.push_back(h_new);
        cache->mask.push_back(t < masks.size() ? masks[t] : VecX<S>());
      }
      c = std::move(c_new);
      h = std::move(h_new);
    }
    return h;
  }

  // Backprop from the gradient of the final hidden state. Input gradients
  // are not produced (inputs are data, not parameters).
  void backward(const std::vector<MatX<S>>& xs, const Cache& cache, const MatX<S>& dh_final) {
    const Eigen::Index n = cache.n;
    const MatX<S> zero = MatX<S>::Zero(hidden, n);
    MatX<S> dh = dh_final, dc = MatX<S>::Zero(hidden, n);
    for (int t = static_cast<int>(xs.size()) - 1; t >= 0; --t) {
      MatX<S> dh_step = dh, dc_step = dc;
      const bool masked = cache.mask[t].size() > 0;
      if (masked) {
        for (Eigen::Index col = 0; col < n; ++col) {
          if (cache.mask[t](col) == S(0)) {
            dh_step.col(col).setZero();
            dc_step.col(col).setZero();
          }
        }
      }
      const MatX<S>& c_prev = t > 0 ? cache.c[t - 1] : zero;
      const MatX<S>& h_prev = t > 0 ? cache.h[t - 1] : zero;
      MatX<S> tanc = cache.c[t].array().tanh();
      MatX<S> do_ = (dh_step.array() * tanc.array()).matrix();
      dc_step.array() += dh_step.array() * cache.o[t].array() * (S(1) - tanc.array().square());
      MatX<S> di = (dc_step.array() * cache.g[t].array()).matrix();
      MatX<S> dg = (dc_step.array() * cache.i[t].array()).matrix();
      MatX<S> df = (dc_step.array() * c_prev.array()).matrix();

      MatX<S> dz(4 * hidden, n);
      dz.topRows(hidden) =
          (di.array() * cache.i[t].array() * (S(1) - cache.i[t].array())).matrix();
      dz.block(hidden, 0, hidden, n) =
          (df.array() * cache.f[t].array() * (S(1) - cache.f[t].array())).matrix();
      dz.block(2 * hidden, 0, hidden, n) =
          (dg.array() * (S(1) - cache.g[t].array().square())).matrix();
      dz.bottomRows(hidden) =
          (do_.array() * cache.o[t].array() * (S(1) - cache.o[t].array())).matrix();

      dWx.noalias() += dz * xs[t].transpose();
      dWh.noalias() += dz * h_prev.transpose();
      db.col(0) += dz.rowwise().sum();

      MatX<S> dh_prev = Wh.transpose() * dz;
      MatX<S> dc_prev = (dc_step.array() * cache.f[t].array()).matrix();
      if (masked) {
        // carried-through columns pass gradients straight to t-1
        for (Eigen::Index col = 0; col < n; ++col) {
          if (cache.mask[t](col) == S(0)) {
            dh_prev.col(col) += dh.col(col);
            dc_prev.col(col) += dc.col(col);
          }
        }
      }
      dh = std::move(dh_prev);
      dc = std::move(dc_prev);
    }
  }
};

// 1-D convolution over the step axis with same-padding, stride 1.
// X is (channels x L); weights are (cout x cin*k).
template <class S>
struct Conv1d {
  int cin = 0, cout = 0, k = 1;
  MatX<S> W, b, dW, db;

  Conv1d() = default;
  Conv1d(int cin_, int cout_, int k_, Rng& rng)
      : cin(cin_),
        cout(cout_),
        k(k_),
        W(uniform_init<S>(cout_, cin_ * k_, cin_ * k_, rng)),
        b(uniform_init<S>(cout_, 1, cin_ * k_, rng)),
        dW(MatX<S>::Zero(cout_, cin_ * k_)),
        db(MatX<S>::Zero(cout_, 1)) {}

  void reg(ParamRegistry<S>& r, const std::string& p) {
    r.add(p + ".W", W, dW);
    r.add(p + ".b", b, db);
  }

  MatX<S> im2col(const MatX<S>& X) const {
    const Eigen::Index L = X.cols();
    MatX<S> col = MatX<S>::Zero(static_cast<Eigen::Index>(cin) * k, L);
    const int half = k / 2;
    for (int j = 0; j < k; ++j) {
      const int off = j - half;
      for (Eigen::Index t = 0; t < L; ++t) {
        const Eigen::Index src = t + off;
        if (src >= 0 && src < L) col.block(static_cast<Eigen::Index>(j) * cin, t, cin, 1) = X.col(src);
      }
    }
    return col;
  }

  MatX<S> forward(const MatX<S>& X, MatX<S>* col_cache) const {
    MatX<S> col = im2col(X);
    MatX<S> Y = (W * col).colwise() + b.col(0);
    if (col_cache) *col_cache = std::move(col);
    return Y;
  }

  MatX<S> backward(const MatX<S>& col, const MatX<S>& dY) {
    dW.noalias() += dY * col.transpose();
    db.col(0) += dY.rowwise().sum();
    MatX<S> dcol = W.transpose() * dY;
    const Eigen::Index L = dY.cols();
    MatX<S> dX = MatX<S>::Zero(cin, L);
    const int half = k / 2;
    for (int j = 0; j < k; ++j) {
      const int off = j - half;
      for (Eigen::Index t = 0; t < L; ++t) {
        const Eigen::Index src = t + off;
        if (src >= 0 && src < L) dX.col(src) += dcol.block(static_cast<Eigen::Index>(j) * cin, t, cin, 1);
      }
    }
    return dX;
  }
};

// Columnwise softmax.
template <class S>
MatX<S> softmax_cols(const MatX<S>& Z) {
  MatX<S> P = Z;
  for (Eigen::Index j = 0; j < P.cols(); ++j) {
    P.col(j).array() -= P.col(j).maxCoeff();
    P.col(j) = P.col(j).array().exp();
    P.col(j) /= P.col(j).sum();
  }
  return P;
}

// Sinusoidal embedding of an integer index (diffusion step).
template <class S>
VecX<S> sinusoidal_embedding(int k, int dim) {
  VecX<S> e(dim);
  const int half = dim / 2;
  for (int i = 0; i < half; ++i) {
    double freq = std::exp(-std::log(10000.0) * static_cast<double>(i) / std::max(1, half - 1));
    e(2 * i) = static_cast<S>(std::sin(k * freq));
    e(2 * i + 1) = static_cast<S>(std::cos(k * freq));
  }
  if (dim % 2 == 1) e(dim - 1) = S(0);
  return e;
}

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 0.0;  // L2 added to the gradient
};

template <class S>
struct Adam {
  AdamConfig cfg;
  std::vector<MatX<S>> m, v;
  long t = 0;

  explicit Adam(AdamConfig c = {}) : cfg(c) {}

  void init(const ParamRegistry<S>& reg) {
    m.clear();
    v.clear();
    for (const auto& e : reg.entries) {
      m.push_back(MatX<S>::Zero(e.value->rows(), e.value->cols()));
      v.push_back(MatX<S>::Zero(e.value->rows(), e.value->cols()));
    }
    t = 0;
  }

  void step(ParamRegistry<S>& reg) {
    ++t;
    const S b1 = static_cast<S>(cfg.beta1), b2 = static_cast<S>(cfg.beta2);
    const S corr1 = static_cast<S>(1.0 - std::pow(cfg.beta1, t));
    const S corr2 = static_cast<S>(1.0 - std::pow(cfg.beta2, t));
    for (size_t i = 0; i < reg.entries.size(); ++i) {
      auto& e = reg.entries[i];
      MatX<S> g = *e.grad;
      if (cfg.weight_decay != 0.0) g += static_cast<S>(cfg.weight_decay) * *e.value;
      m[i] = b1 * m[i] + (S(1) - b1) * g;
      v[i] = (b2 * v[i].array() + (S(1) - b2) * g.array().square()).matrix();
      *e.value -=
          (static_cast<S>(cfg.lr) * (m[i].array() / corr1) /
           ((v[i].array() / corr2).sqrt() + static_cast<S>(cfg.eps)))
              .matrix();
    }
  }

  void save(ArchiveWriter& w, const std::string& prefix) const {
    w.put_i32(prefix + "t", {static_cast<int32_t>(t)});
    for (size_t i = 0; i < m.size(); ++i) {
      w.put_f64(prefix + "m" + std::to_string(i), m[i].template cast<double>());
      w.put_f64(prefix + "v" + std::to_string(i), v[i].template cast<double>());
    }
  }

  void load(const Archive& ar, const std::string& prefix) {
    t = ar.get_i32(prefix + "t")[0];
    for (size_t i = 0; i < m.size(); ++i) {
      m[i] = ar.get_f64(prefix + "m" + std::to_string(i)).cast<S>();
      v[i] = ar.get_f64(prefix + "v" + std::to_string(i)).cast<S>();
    }
  }
};

// Central-difference gradient check. `loss_fn` must zero grads, run
// forward+backward and return the loss. Relative error uses a unit-floored
// denominator so near-zero coordinates compare absolutely.
template <class S, class LossFn>
double max_grad_rel_error(ParamRegistry<S>& reg, LossFn&& loss_fn, double h = 1e-5) {
  loss_fn();
  VecX<S> analytic = reg.grads();
  VecX<S> theta = reg.values();
  double worst = 0.0;
  for (Eigen::Index i = 0; i < theta.size(); ++i) {
    VecX<S> tp = theta;
    tp(i) += static_cast<S>(h);
    reg.set_values(tp);
    double lp = static_cast<double>(loss_fn());
    tp(i) = theta(i) - static_cast<S>(h);
    reg.set_values(tp);
    double lm = static_cast<double>(loss_fn());
    double numeric = (lp - lm) / (2 * h);
    double ga = static_cast<double>(analytic(i));
    double rel = std::abs(ga - numeric) / std::max(1.0, std::max(std::abs(ga), std::abs(numeric)));
    worst = std::max(worst, rel);
  }
  reg.set_values(theta);
  return worst;
}

}  // namespace tomcat::nn
