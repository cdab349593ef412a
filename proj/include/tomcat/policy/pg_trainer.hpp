#pragma once

#include "tomcat/nn/nn.hpp"
#include "tomcat/policy/policy.hpp"

namespace tomcat {

// Desk-scale stand-in for the full MARL pipeline: two independent
// policy-gradient actors trained on shared episodes, each maximizing its own
// linear profile reward, optionally warm-started by cloning the scripted
// controller for its profile.
struct PgConfig {
  int iterations = 20;
  int episodes_per_iter = 8;
  int T = 200;
  double lr = 8e-4;
  double gamma = 0.99;
  double entropy_start = 0.05;  // linearly decreasing to entropy_end
  double entropy_end = 0.0;
  double temperature = 1.0;
  int hidden = 64;
  bool clone_init = true;
  int clone_steps = 200;
  int clone_episodes = 6;
  double clone_lr = 1e-3;
  uint64_t seed = 0;
};

double entropy_coef_at(const PgConfig& cfg, int iteration);

struct PgTrainLog {
  std::vector<double> mean_task_reward;      // per iteration
  std::vector<double> mean_indiv_reward[2];  // per iteration per agent
  std::vector<double> entropy_coef;          // per iteration
};

std::pair<PolicyPtr, PolicyPtr> train_pair_policies(const GridLayout& layout,
                                                    const AgentProfile& profile_a,
                                                    const AgentProfile& profile_b,
                                                    const PgConfig& cfg,
                                                    PgTrainLog* log = nullptr);

}  // namespace tomcat
