#pragma once

#include <array>
#include <string>
#include <vector>

#include "tomcat/core/types.hpp"
#include "tomcat/env/kitchen.hpp"

namespace tomcat {

// FeatureVector component order; the first eight mirror EventBit.
enum FeatureIndex : int {
  kFeatOnionDrop = 0,
  kFeatOnionPickup,
  kFeatDishDrop,
  kFeatDishPickup,
  kFeatPottingOnion,
  kFeatSoupDelivery,
  kFeatSoupDrop,
  kFeatSoupPickup,
  kFeatSelfPosX,
  kFeatSelfPosY,
  kFeatDistToOtherX,
  kFeatDistToOtherY,
  kFeatPathDistToOther,
  kFeatTaskRewFrac,
};

const std::array<std::string, kNumFeatures>& feature_names();

struct AgentProfile {
  std::string name;
  FeatureVector weights = FeatureVector::Zero();
};

// Reward features of the step that produced `state`. Event flags are per
// agent; positions and distances come from the post-step state; the task
// reward is shared by both agents.
FeatureVector extract_features(const GridLayout& layout, const KitchenState& prev_state,
                               const EventSet& events, const KitchenState& state, int agent,
                               double task_reward);

// R_i = phi . theta_i.
double linear_reward(const FeatureVector& phi, const AgentProfile& profile);

// Componentwise sign; |w| < 1e-9 counts as zero.
Eigen::Matrix<double, kNumFeatures, 1> profile_sign(const AgentProfile& profile);

// The seven built-in profiles: Cook, Server, Helper, FarHelper, Follower,
// Sparse, Random.
const std::vector<AgentProfile>& builtin_profiles();
const AgentProfile& profile_by_name(const std::string& name);

// Text-table serialization: one line per profile, name + 14 numbers.
std::string profiles_to_text(const std::vector<AgentProfile>& profiles);
std::vector<AgentProfile> profiles_from_text(const std::string& text);
void save_profiles(const std::string& path, const std::vector<AgentProfile>& profiles);
std::vector<AgentProfile> load_profiles(const std::string& path);

}  // namespace tomcat
