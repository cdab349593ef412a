#include "tomcat/policy/pg_trainer.hpp"

#include <cmath>
#include <stdexcept>

#include "tomcat/rewards/profiles.hpp"

namespace tomcat {

double entropy_coef_at(const PgConfig& cfg, int iteration) {
  if (cfg.iterations <= 1) return cfg.entropy_start;
  double frac = static_cast<double>(iteration) / (cfg.iterations - 1);
  return cfg.entropy_start + frac * (cfg.entropy_end - cfg.entropy_start);
}

namespace {

class MlpPolicy final : public Policy {
 public:
  MlpPolicy(const std::string& name, int hidden, uint64_t seed) {
    profile_name = name;
    origin = "trained";
    Rng rng(hash_combine(seed, 0x9c));
    fc1 = nn::Linear<float>(kObsDim, hidden, rng);
    fc2 = nn::Linear<float>(hidden, kNumActions, rng);
    fc1.reg(params, "fc1");
    fc2.reg(params, "fc2");
  }

  ActionLogits logits(const Observation& o) const override {
    MatX<float> x = o;
    MatX<float> z = fc2.forward(nn::tanh_forward<float>(fc1.forward(x)));
    return z.col(0).cast<double>();
  }

  // Batched forward for training; caches the hidden activation.
  MatX<float> forward_batch(const MatX<float>& X, MatX<float>* h) const {
    MatX<float> hh = nn::tanh_forward<float>(fc1.forward(X));
    if (h) *h = hh;
    return fc2.forward(hh);
  }

  void backward_batch(const MatX<float>& X, const MatX<float>& h, const MatX<float>& dz) {
    MatX<float> dh = fc2.backward(h, dz);
    fc1.backward(X, nn::tanh_backward<float>(h, dh));
  }

  nn::Linear<float> fc1, fc2;
  nn::ParamRegistry<float> params;
};

struct Episode {
  std::array<MatX<float>, 2> obs;       // kObsDim x T
  std::array<std::vector<int>, 2> acts;
  std::array<VectorXd, 2> rewards;
  double task = 0;
};

Episode run_training_episode(const GridLayout& layout, const MlpPolicy& a, const MlpPolicy& b,
                             const AgentProfile& pa, const AgentProfile& pb, int T,
                             double temperature, uint64_t seed) {
  Episode ep;
  for (int i = 0; i < 2; ++i) {
    ep.obs[i].resize(kObsDim, T);
    ep.acts[i].resize(T);
    ep.rewards[i].resize(T);
  }
  std::array<const MlpPolicy*, 2> pols = {&a, &b};
  std::array<const AgentProfile*, 2> profs = {&pa, &pb};
  std::array<Rng, 2> rngs = {Rng(hash_combine(seed, 21)), Rng(hash_combine(seed, 22))};
  KitchenState state = reset(layout, hash_combine(seed, 1));
  for (int t = 0; t < T; ++t) {
    std::array<Action, 2> actions;
    for (int i = 0; i < 2; ++i) {
      Observation o = observe(layout, state, i);
      ep.obs[i].col(t) = o;
      int act = sample_from_logits(pols[i]->logits(o), temperature, rngs[i]);
      ep.acts[i][t] = act;
      actions[i] = static_cast<Action>(act);
    }
    StepResult r = step(layout, state, actions);
    ep.task += r.task_reward;
    for (int i = 0; i < 2; ++i) {
      FeatureVector phi = extract_features(layout, state, r.events, r.state, i, r.task_reward);
      ep.rewards[i](t) = linear_reward(phi, *profs[i]);
    }
    state = r.state;
  }
  return ep;
}

// Behavior-clone the scripted controller from its own rollouts.
void clone_from_scripted(MlpPolicy& actor, const GridLayout& layout, const AgentProfile& prof,
                         const PgConfig& cfg, uint64_t seed) {
  PolicyPtr teacher = scripted_policy(prof, layout);
  std::vector<Observation> obs;
  std::vector<VectorXd> targets;
  Rng rng(hash_combine(seed, 0xc1));
  for (int e = 0; e < cfg.clone_episodes; ++e) {
    KitchenState state = reset(layout, rng.next_u64());
    for (int t = 0; t < cfg.T; ++t) {
      std::array<Action, 2> actions;
      for (int i = 0; i < 2; ++i) {
        Observation o = observe(layout, state, i);
        obs.push_back(o);
        targets.push_back(teacher->action_probs(o));
        actions[i] = static_cast<Action>(sample_from_logits(teacher->logits(o), 0.3, rng));
      }
      state = step(layout, state, actions).state;
    }
  }
  nn::Adam<float> opt({cfg.clone_lr});
  opt.init(actor.params);
  const int batch = 256;
  for (int s = 0; s < cfg.clone_steps; ++s) {
    MatX<float> X(kObsDim, batch);
    MatX<float> tgt(kNumActions, batch);
    for (int j = 0; j < batch; ++j) {
      int i = rng.uniform_int(static_cast<int>(obs.size()));
      X.col(j) = obs[i];
      tgt.col(j) = targets[i].cast<float>();
    }
    MatX<float> h;
    MatX<float> z = actor.forward_batch(X, &h);
    MatX<float> p = nn::softmax_cols<float>(z);
    actor.params.zero_grads();
    actor.backward_batch(X, h, (p - tgt) / static_cast<float>(batch));
    opt.step(actor.params);
  }
}

}  // namespace

std::pair<PolicyPtr, PolicyPtr> train_pair_policies(const GridLayout& layout,
                                                    const AgentProfile& profile_a,
                                                    const AgentProfile& profile_b,
                                                    const PgConfig& cfg, PgTrainLog* log) {
  if (cfg.iterations <= 0 || cfg.episodes_per_iter <= 0 || cfg.T <= 0)
    throw std::invalid_argument("train_pair_policies: non-positive training budget");

  auto a = std::make_shared<MlpPolicy>(profile_a.name, cfg.hidden, hash_combine(cfg.seed, 100));
  auto b = std::make_shared<MlpPolicy>(profile_b.name, cfg.hidden, hash_combine(cfg.seed, 101));
  if (cfg.clone_init) {
    clone_from_scripted(*a, layout, profile_a, cfg, hash_combine(cfg.seed, 200));
    clone_from_scripted(*b, layout, profile_b, cfg, hash_combine(cfg.seed, 201));
  }

  std::array<MlpPolicy*, 2> actors = {a.get(), b.get()};
  std::array<const AgentProfile*, 2> profs = {&profile_a, &profile_b};
  std::array<nn::Adam<float>, 2> opts = {nn::Adam<float>({cfg.lr}), nn::Adam<float>({cfg.lr})};
  for (int i = 0; i < 2; ++i) opts[i].init(actors[i]->params);

  Rng rng(hash_combine(cfg.seed, 0xbb));
  for (int iter = 0; iter < cfg.iterations; ++iter) {
    const double coef = entropy_coef_at(cfg, iter);
    std::vector<Episode> eps;
    double task_sum = 0;
    for (int e = 0; e < cfg.episodes_per_iter; ++e) {
      eps.push_back(run_training_episode(layout, *a, *b, profile_a, profile_b, cfg.T,
                                         cfg.temperature, rng.next_u64()));
      task_sum += eps.back().task;
    }

    for (int i = 0; i < 2; ++i) {
      // Discounted returns with a batch-mean baseline.
      const int N = cfg.episodes_per_iter * cfg.T;
      MatX<float> X(kObsDim, N);
      std::vector<int> acts(N);
      VectorXd adv(N);
      int at = 0;
      double mean_ret = 0;
      for (const Episode& ep : eps) {
        double g = 0;
        VectorXd ret(cfg.T);
        for (int t = cfg.T - 1; t >= 0; --t) {
          g = ep.rewards[i](t) + cfg.gamma * g;
          ret(t) = g;
        }
        for (int t = 0; t < cfg.T; ++t, ++at) {
          X.col(at) = ep.obs[i].col(t);
          acts[at] = ep.acts[i][t];
          adv(at) = ret(t);
          mean_ret += ret(t);
        }
      }
      mean_ret /= N;
      adv.array() -= mean_ret;

      MatX<float> h;
      MatX<float> z = actors[i]->forward_batch(X, &h);
      MatX<float> p = nn::softmax_cols<float>(z);
      MatX<float> dz = MatX<float>::Zero(kNumActions, N);
      for (int n = 0; n < N; ++n) {
        double ent = 0;
        for (int k = 0; k < kNumActions; ++k) {
          double pk = std::max(static_cast<double>(p(k, n)), 1e-12);
          ent -= pk * std::log(pk);
        }
        for (int k = 0; k < kNumActions; ++k) {
          double pk = std::max(static_cast<double>(p(k, n)), 1e-12);
          double g = adv(n) * (p(k, n) - (acts[n] == k ? 1.0 : 0.0));
          g += coef * pk * (std::log(pk) + ent);
          dz(k, n) = static_cast<float>(g / N);
        }
      }
      actors[i]->params.zero_grads();
      actors[i]->backward_batch(X, h, dz);
      opts[i].step(actors[i]->params);

      if (log) {
        double sum = 0;
        for (const Episode& ep : eps) sum += ep.rewards[i].sum();
        log->mean_indiv_reward[i].push_back(sum / cfg.episodes_per_iter);
      }
    }
    if (log) {
      log->mean_task_reward.push_back(task_sum / cfg.episodes_per_iter);
      log->entropy_coef.push_back(coef);
    }
  }
  (void)profs;
  return {a, b};
}

}  // namespace tomcat
