#pragma once

#include <deque>
#include <optional>

#include "tomcat/diffusion/madiff.hpp"

namespace tomcat {

struct ReplanPolicy {
  enum class Kind { Always, EveryN, Horizon, Dynamic };
  Kind kind = Kind::Dynamic;
  int every_n = 10;
  double threshold = 0.2;

  static ReplanPolicy always() { return {Kind::Always, 1, 0}; }
  static ReplanPolicy every(int n) { return {Kind::EveryN, n, 0}; }
  static ReplanPolicy horizon() { return {Kind::Horizon, 1, 0}; }
  static ReplanPolicy dynamic(double eps = 0.2) { return {Kind::Dynamic, 1, eps}; }
  std::string name() const;
  static ReplanPolicy parse(const std::string& name, int every_n, double threshold);
};

// Mean over observation dimensions of the squared difference in normalized
// space; an absent prediction forces a replan (+infinity).
double obs_divergence(const Observation& o, const std::optional<Observation>& predicted,
                      const Normalizer& obs_norm);

// Live state of one planning agent.
struct AgentRuntime {
  enum class Mode { Prior, Unknown };

  VectorXd profile;
  std::string profile_name;
  Mode mode = Mode::Prior;
  VectorXd e_char = VectorXd::Zero(kEmbedDim);

  std::deque<Observation> history;        // most recent <= C+1 observations
  std::optional<Observation> evicted;     // observation that fell off the queue
  std::deque<uint8_t> action_history;     // own actions aligned with history[0..n-2]
  std::deque<Observation> plan;           // predicted observations, front is next
  std::optional<Observation> predicted;   // latest dequeued prediction
  int plan_count = 0;
  int t = 0;
  Rng rng{0};

  // unknown-teammate live buffer
  StepSeq buffer;
  int freeze_t = 100;
  bool frozen = false;
};

AgentRuntime make_runtime(const AgentProfile& profile, AgentRuntime::Mode mode, uint64_t seed);

struct TomcatModels {
  const MadiffModel* madiff = nullptr;
  const ToMnet* tomnet = nullptr;  // required when the condition set uses embeddings
  const GridLayout* layout = nullptr;
};

bool should_replan(const AgentRuntime& rt, const Observation& o, const ReplanPolicy& policy,
                   const Normalizer& obs_norm);

// One step of the online planning loop: enqueue the observation, replan if
// the policy demands it, pop the next predicted observation and return the
// inverse-dynamics action.
int tomcat_act(AgentRuntime& rt, const Observation& o, const TomcatModels& models,
               const ReplanPolicy& policy);

// Unknown-teammate mode: grow the live buffer and recompute e_char from it as
// a single pseudo-past trajectory; freezes at freeze_t steps.
void update_character_buffer(AgentRuntime& rt, const Observation& o, int action,
                             const ToMnet& tomnet);

}  // namespace tomcat
