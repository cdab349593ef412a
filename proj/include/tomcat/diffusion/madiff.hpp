#pragma once

#include <optional>
#include <string>
#include <vector>

#include "tomcat/diffusion/denoiser.hpp"
#include "tomcat/diffusion/normalizer.hpp"
#include "tomcat/diffusion/schedule.hpp"
#include "tomcat/tom/tomnet.hpp"

namespace tomcat {

// Which optional condition segments a model is trained with.
struct ConditionSet {
  bool returns = false;
  bool profile = false;
  bool e_char = false;
  bool e_mental = false;

  bool any() const { return returns || profile || e_char || e_mental; }
  std::string descriptor() const;
  static ConditionSet parse(const std::string& text);
  bool operator==(const ConditionSet&) const = default;
};

// Optional condition segments concatenated in fixed order with a presence
// mask: returns (1), observer profile (14), e_char (8), e_mental (8).
// All segments absent is the unconditional token.
struct ConditioningVector {
  static constexpr int kDim = 1 + kNumFeatures + 2 * kEmbedDim;
  VectorXd values = VectorXd::Zero(kDim);
  VectorXd mask = VectorXd::Zero(kDim);

  static ConditioningVector null() { return {}; }
  bool is_null() const { return mask.sum() == 0; }

  void set_returns(double v);
  void set_profile(const VectorXd& theta);
  void set_char(const VectorXd& e);
  void set_mental(const VectorXd& e);
};

// A (2 x L x d) window in normalized units; slot 0 is always the observer.
// Pinned rows are overwritten with their stored values at every denoising
// step (observer history, zeroed teammate history, zero padding); `observed`
// is the companion mask channel marking rows holding real data.
template <class S>
struct JointWindowT {
  std::array<MatX<S>, 2> x;        // L x d
  std::array<VecX<S>, 2> pin;      // L
  std::array<VecX<S>, 2> observed; // L

  int length() const { return static_cast<int>(x[0].rows()); }
  int dim() const { return static_cast<int>(x[0].cols()); }
};
using JointWindow = JointWindowT<float>;

struct MadiffConfig {
  int history = 16;   // C
  int horizon = 64;   // H
  int diffusion_steps = 200;
  std::string schedule_kind = "cosine";
  int emb = 128;
  int hidden = 256;
  int kernel = 5;
  int conv_layers = 2;
  int invdyn_hidden = 128;
  double p_drop = 0.25;
  double guidance_w = 1.2;
  int ddim_steps = 15;
  double returns_gamma = 0.99;
  double returns_target = 1.0;  // execution-time returns condition
  ConditionSet conditions;

  int window_len() const { return history + 1 + horizon; }
  DenoiserConfig denoiser_config() const {
    DenoiserConfig d;
    d.emb = emb;
    d.hidden = hidden;
    d.kernel = kernel;
    d.n_layers = conv_layers;
    return d;
  }
};

// Per-trajectory ToM/returns attachments for both observer roles.
struct AugTrajectory {
  std::array<MatrixXf, 2> aug_obs;   // T x kAugObsDim (own obs + other's prev action)
  std::array<std::vector<uint8_t>, 2> actions;
  VectorXf returns;                  // T, discounted task return / 20, clamped to [0,1]
  std::array<VectorXf, 2> e_char;    // kEmbedDim
  std::array<MatrixXf, 2> e_mental;  // T x kEmbedDim
  std::array<VectorXd, 2> profile;
  std::array<std::string, 2> profile_names;
  int T = 0;
};

struct AugDataset {
  std::vector<AugTrajectory> trajs;
  Normalizer obs_norm;   // kAugObsDim dims
  Normalizer cond_norm;  // kNumFeatures + 2*kEmbedDim dims (profile, char, mental)
  uint64_t layout_hash = 0;
};

// Attaches e_char (from n_past sampled same-team trajectories), per-step
// e_mental, discounted returns-to-go and the teammate previous-action one-hot,
// then fits the CDF normalizers.
AugDataset augment_dataset(const Dataset& data, const ToMnetT<float>& tomnet, int n_past,
                           double returns_gamma, uint64_t seed);

// Persists the per-step attachments and normalizers; augmented observations
// are rebuilt from the source dataset on load (layout hash checked).
void save_augmented(const std::string& path, const AugDataset& aug);
AugDataset load_augmented(const std::string& path, const Dataset& data);

MatrixXf augment_observations(const MatrixXf& own_obs, const std::vector<uint8_t>& other_actions);

// Overt reconstruction of the teammate's previous action from two consecutive
// observer observations (position/orientation/held-item changes). Used at
// execution where true teammate actions are unobservable.
int reconstruct_teammate_action(const Observation& prev, const Observation& cur, int width,
                                int height);

// Mean over examples of the per-example mean squared epsilon error over
// non-pinned entries (pinned rows are inputs, not denoising targets). When
// `douts` is non-null it receives the gradients in denoiser output layout.
// A denoiser that returns the true noise scores exactly zero.
template <class S>
double masked_epsilon_mse(const std::vector<MatX<S>>& eps_hat,
                          const std::vector<std::array<MatX<S>, 2>>& eps_true,
                          const std::vector<const JointWindowT<S>*>& windows,
                          std::vector<MatX<S>>* douts);

template <class S>
class MadiffModelT {
 public:
  MadiffConfig cfg;
  DiffusionSchedule schedule;
  DenoiserT<S> denoiser;
  InvDynT<S> invdyn;
  Normalizer obs_norm, cond_norm;

  explicit MadiffModelT(const MadiffConfig& config = {}, uint64_t seed = 0)
      : cfg(config),
        schedule(make_schedule(config.diffusion_steps, config.schedule_kind)),
        denoiser(config.denoiser_config(), seed),
        invdyn(kObsDim, config.invdyn_hidden, hash_combine(seed, 2)) {
    denoiser.reg(params_, "den/");
    invdyn.reg(params_, "inv/");
  }

  MadiffModelT(const MadiffModelT& other) : MadiffModelT(other.cfg, 0) {
    params_.set_values(other.params_.values());
    obs_norm = other.obs_norm;
    cond_norm = other.cond_norm;
  }
  MadiffModelT& operator=(const MadiffModelT& other) {
    params_.set_values(other.params_.values());
    obs_norm = other.obs_norm;
    cond_norm = other.cond_norm;
    return *this;
  }

  nn::ParamRegistry<S>& params() { return params_; }
  const nn::ParamRegistry<S>& params() const { return params_; }

  // Normalizes present segments (profile/char/mental through the condition
  // normalizer, returns passed through) and stacks values over mask.
  VecX<S> stack_condition(const ConditioningVector& c) const;

  // One training example: a window plus an inverse-dynamics transition.
  struct Sample {
    JointWindowT<S> window;
    ConditioningVector cond;
    VecX<S> inv_in;  // 2*kObsDim
    int inv_action = 0;
  };

  Sample make_sample(const AugDataset& aug, int traj_idx, int observer, int t0) const;

  struct LossStats {
    double total = 0, diffusion = 0, invdyn = 0;
    int dropped = 0, batch = 0;
  };

  // Diffusion + inverse-dynamics loss with condition dropout; accumulates
  // gradients when `backward` is set.
  LossStats loss(std::vector<Sample>& batch, double p_drop, Rng& rng, bool backward);

  // eps_null + w * (eps_cond - eps_null); `x` is a window in denoiser input
  // layout. Exposed at window level below.
  MatX<S> guided_epsilon_raw(const MatX<S>& X, int k, const ConditioningVector& c,
                             double w) const;

  // Deterministic DDIM sampling with history in-painting. `history_aug` holds
  // up to history+1 raw augmented observer rows, oldest first.
  JointWindowT<S> ddim_plan(const MatrixXf& history_aug, const ConditioningVector& c, int steps,
                            double w, uint64_t seed) const;

  // Observer rows after the history segment, denormalized, first kObsDim
  // columns (the predicted observation plan).
  std::vector<Observation> extract_plan(const JointWindowT<S>& window) const;

  MatX<S> window_to_input(const JointWindowT<S>& w) const;

 private:
  nn::ParamRegistry<S> params_;
};

using MadiffModel = MadiffModelT<float>;

struct MadiffTrainConfig {
  int steps = 2000;
  int batch = 32;
  double lr = 2e-4;
  uint64_t seed = 0;
  int log_every = 50;
};

struct MadiffTrainLog {
  std::vector<double> loss;        // per logged interval (mean)
  std::vector<double> step_loss;   // every step
};

template <class S>
MadiffTrainLog train_madiff(MadiffModelT<S>& model, const AugDataset& aug,
                            const MadiffTrainConfig& tc, nn::Adam<S>* resume_opt = nullptr,
                            Rng* resume_rng = nullptr);

void save_madiff(const std::string& path, const MadiffModelT<float>& model,
                 const nn::Adam<float>* opt = nullptr, const Rng* rng = nullptr);
MadiffModelT<float> load_madiff(const std::string& path, nn::Adam<float>* opt = nullptr,
                                Rng* rng = nullptr);

}  // namespace tomcat
