#pragma once

#include <memory>

#include "tomcat/plan/replanner.hpp"
#include "tomcat/policy/dataset.hpp"

namespace tomcat {

// Anything that can act in an episode. Profiles are assigned before
// run_episode; begin_episode re-seeds per-episode state.
class Agent {
 public:
  virtual ~Agent() = default;
  virtual void begin_episode(uint64_t seed) = 0;
  virtual int act(const Observation& o) = 0;
  virtual const AgentProfile& profile() const = 0;
  virtual int plan_count() const { return 0; }
  // Mean probability assigned to the true sign of `target`'s weights under
  // the agent's current ToM belief; NaN when the agent has no ToM.
  virtual double profile_belief(const AgentProfile& target) const {
    (void)target;
    return std::numeric_limits<double>::quiet_NaN();
  }
};

class NoOpAgent final : public Agent {
 public:
  explicit NoOpAgent(const AgentProfile& profile) : profile_(profile) {}
  void begin_episode(uint64_t) override {}
  int act(const Observation&) override { return static_cast<int>(Action::NoOp); }
  const AgentProfile& profile() const override { return profile_; }

 private:
  AgentProfile profile_;
};

// Wraps a behavior policy with softmax exploration.
class PolicyAgent final : public Agent {
 public:
  PolicyAgent(PolicyPtr policy, const AgentProfile& profile, double temperature)
      : policy_(std::move(policy)), profile_(profile), temperature_(temperature) {}
  void begin_episode(uint64_t seed) override { rng_ = Rng(hash_combine(seed, 0x90)); }
  int act(const Observation& o) override {
    return sample_action(*policy_, o, temperature_, rng_);
  }
  const AgentProfile& profile() const override { return profile_; }

 private:
  PolicyPtr policy_;
  AgentProfile profile_;
  double temperature_;
  Rng rng_{0};
};

// The online planning agent. In prior mode e_char comes from n_past sampled
// same-team trajectories; in unknown mode it is accumulated from a live
// buffer over the first 100 steps.
class TomcatAgent final : public Agent {
 public:
  TomcatAgent(const AgentProfile& profile, const TomcatModels& models, ReplanPolicy replan,
              AgentRuntime::Mode mode)
      : profile_(profile), models_(models), replan_(replan), mode_(mode) {}

  // Prior-mode source of past trajectories (same-team sampling needs the
  // opponent's profile, set per episode).
  void set_prior_source(const Dataset* data, int n_past) {
    prior_data_ = data;
    n_past_ = n_past;
  }
  void set_opponent(const std::string& profile_name) { opponent_ = profile_name; }

  void begin_episode(uint64_t seed) override;
  int act(const Observation& o) override;
  const AgentProfile& profile() const override { return profile_; }
  int plan_count() const override { return rt_.plan_count; }
  double profile_belief(const AgentProfile& target) const override;
  const AgentRuntime& runtime() const { return rt_; }

 private:
  AgentProfile profile_;
  TomcatModels models_;
  ReplanPolicy replan_;
  AgentRuntime::Mode mode_;
  AgentRuntime rt_;
  const Dataset* prior_data_ = nullptr;
  int n_past_ = 4;
  std::string opponent_;
};

struct EpisodeMetrics {
  double task_reward = 0;
  std::array<double, 2> individual = {0, 0};
  std::array<int, 2> plan_count = {0, 0};
  std::vector<double> profile_prob_trace;  // agent 0's belief about agent 1
};

// Steps the environment T times; agents act from their own observations.
// Agent failures surface with the step index.
std::pair<EpisodeMetrics, JointTrajectory> run_episode(Agent& agent_a, Agent& agent_b,
                                                       const GridLayout& layout, int T,
                                                       uint64_t seed);

// Recomputes EpisodeMetrics reward fields from a stored trajectory.
EpisodeMetrics metrics_from_trajectory(const JointTrajectory& traj);

}  // namespace tomcat
