#pragma once

#include <memory>
#include <string>

#include "tomcat/core/rng.hpp"
#include "tomcat/core/types.hpp"
#include "tomcat/env/kitchen.hpp"
#include "tomcat/rewards/profiles.hpp"

namespace tomcat {

using ActionLogits = Eigen::Matrix<double, kNumActions, 1>;

template <class Derived>
VectorXd softmax(const Eigen::MatrixBase<Derived>& logits) {
  VectorXd z = logits.template cast<double>();
  z.array() -= z.maxCoeff();
  VectorXd e = z.array().exp();
  return e / e.sum();
}

// A behavior policy: observation -> action logits, plus provenance metadata.
// Probabilities are softmax(logits); callers apply exploration temperature
// through sample_action.
struct Policy {
  virtual ~Policy() = default;
  virtual ActionLogits logits(const Observation& o) const = 0;
  VectorXd action_probs(const Observation& o) const { return softmax(logits(o)); }

  std::string profile_name;
  std::string origin;  // "scripted" | "trained"
};

using PolicyPtr = std::shared_ptr<const Policy>;

// Samples from softmax(logits / temperature). Throws on temperature <= 0.
int sample_action(const Policy& policy, const Observation& o, double temperature, Rng& rng);
int sample_from_logits(const ActionLogits& logits, double temperature, Rng& rng);

// Deterministic-greedy heuristic controller expressing the profile's
// incentives, softened only by the sampling temperature. `gain` is the logit
// margin of the preferred action.
PolicyPtr scripted_policy(const AgentProfile& profile, const GridLayout& layout,
                          double gain = 1.5);

// Fields recovered from an Observation (positions are exact because the
// encoding is grid-normalized).
struct DecodedObs {
  Cell self;
  Action orientation = Action::South;
  Held held = Held::Nothing;
  Cell mate;
  Action mate_orientation = Action::South;
  Held mate_held = Held::Nothing;
  struct PotView {
    int onion_count = 0;
    bool cooking = false;
    bool ready = false;
  };
  std::vector<PotView> pots;  // in layout pot order
};

DecodedObs decode_observation(const GridLayout& layout, const Observation& o);

}  // namespace tomcat
