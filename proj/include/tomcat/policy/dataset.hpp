#pragma once

#include <map>
#include <string>
#include <utility>
#include <vector>

#include "tomcat/policy/policy.hpp"

namespace tomcat {

// One logged episode. Replaying `actions` through the environment from
// `env_seed` reproduces observations, events and rewards exactly.
struct JointTrajectory {
  std::array<std::string, 2> profiles;
  uint64_t env_seed = 0;
  int T = 0;
  std::array<MatrixXf, 2> obs;  // T x kObsDim, row per step (pre-action)
  std::array<std::vector<uint8_t>, 2> actions;
  std::array<VectorXd, 2> rewards;  // individual linear profile rewards
  std::array<std::vector<uint8_t>, 2> events;
  VectorXd task_reward;  // shared per step
};

struct DatasetManifest {
  int schema_version = 1;
  uint64_t layout_hash = 0;
  uint64_t seed = 0;
  int T = 0;
  double temperature = 0.3;
  std::map<std::string, int> team_counts;
};

// Joint trajectories grouped by unordered profile pair.
class Dataset {
 public:
  static std::string team_key(const std::string& a, const std::string& b);

  void add(JointTrajectory traj);
  const std::vector<JointTrajectory>& team(const std::string& a, const std::string& b) const;
  bool has_team(const std::string& a, const std::string& b) const;
  std::vector<std::string> team_keys() const;
  const std::map<std::string, std::vector<JointTrajectory>>& groups() const { return groups_; }
  size_t size() const;

  // Teams a profile participates in (either slot).
  std::vector<std::string> teams_of(const std::string& profile) const;

  DatasetManifest manifest;
  std::string layout_text;

 private:
  std::map<std::string, std::vector<JointTrajectory>> groups_;
};

// Rolls out one episode with softmax exploration at `temperature`.
JointTrajectory rollout_episode(const GridLayout& layout, const Policy& pol_a,
                                const Policy& pol_b, const AgentProfile& prof_a,
                                const AgentProfile& prof_b, int T, double temperature,
                                uint64_t episode_seed);

// Rolls out episodes_per_team trajectories per unordered team with
// reproducible per-episode seeds hash(seed, team, episode index).
Dataset generate_dataset(const GridLayout& layout,
                         const std::vector<std::pair<std::string, std::string>>& teams,
                         int episodes_per_team, int T, double temperature, uint64_t seed,
                         double scripted_gain = 1.5);

// Re-steps logged actions through the environment and verifies observations,
// events, rewards and task rewards. Returns false on any mismatch
// (observations bit-exact, rewards to 1e-9).
bool replay_matches(const GridLayout& layout, const JointTrajectory& traj);

void save_dataset(const std::string& dir, const Dataset& ds);
Dataset load_dataset(const std::string& dir);

void export_trajectory_csv(const std::string& path, const JointTrajectory& traj);

}  // namespace tomcat
