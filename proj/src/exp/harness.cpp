#include "tomcat/exp/harness.hpp"

#include <cmath>
#include <stdexcept>

namespace tomcat {

void TomcatAgent::begin_episode(uint64_t seed) {
  rt_ = make_runtime(profile_, mode_, seed);
  if (mode_ == AgentRuntime::Mode::Prior && models_.madiff->cfg.conditions.e_char) {
    if (!prior_data_ || !models_.tomnet)
      throw std::runtime_error("tomcat agent: prior mode needs a dataset and a tomnet");
    if (opponent_.empty()) throw std::runtime_error("tomcat agent: opponent profile not set");
    const auto& trajs = prior_data_->team(profile_.name, opponent_);
    Rng rng(hash_combine(seed, 0xe5));
    std::vector<StepSeq> past;
    for (int p = 0; p < n_past_ && !trajs.empty(); ++p) {
      const JointTrajectory& traj = trajs[rng.uniform_int(static_cast<int>(trajs.size()))];
      int slot;
      if (traj.profiles[0] == profile_.name && traj.profiles[1] == profile_.name)
        slot = rng.uniform_int(2);
      else
        slot = traj.profiles[0] == profile_.name ? 0 : 1;
      StepSeq s;
      const int len = std::min(traj.T, models_.tomnet->cfg.t_past);
      s.obs = traj.obs[slot].topRows(len);
      s.actions.assign(traj.actions[slot].begin(), traj.actions[slot].begin() + len);
      past.push_back(std::move(s));
    }
    rt_.e_char = models_.tomnet->char_embed(rt_.profile, past);
  }
}

int TomcatAgent::act(const Observation& o) { return tomcat_act(rt_, o, models_, replan_); }

double TomcatAgent::profile_belief(const AgentProfile& target) const {
  if (!models_.tomnet || rt_.history.empty())
    return std::numeric_limits<double>::quiet_NaN();
  const ToMnet& tom = *models_.tomnet;
  // Recent completed (obs, action) pairs feed the mental net.
  const int pairs = static_cast<int>(rt_.action_history.size());
  const int take = std::min(pairs, tom.cfg.t_cur);
  StepSeq w;
  w.obs = MatrixXf::Zero(take, kObsDim);
  w.actions.resize(take);
  const int offset = pairs - take;
  for (int i = 0; i < take; ++i) {
    w.obs.row(i) = rt_.history[offset + i].transpose();
    w.actions[i] = rt_.action_history[offset + i];
  }
  VectorXd e_mental = tom.mental_embed(rt_.profile, w, rt_.e_char);
  ToMPrediction pred = tom.predict(rt_.profile, rt_.history.back(), rt_.e_char, e_mental);
  AgentProfile tgt = target;
  FeatureVector sign = profile_sign(tgt);
  double prob = 0;
  for (int k = 0; k < kNumFeatures; ++k) {
    int cls = std::abs(sign[k]) < 0.5 ? 1 : (sign[k] > 0 ? 2 : 0);
    prob += pred.signs(cls, k);
  }
  return prob / kNumFeatures;
}

std::pair<EpisodeMetrics, JointTrajectory> run_episode(Agent& agent_a, Agent& agent_b,
                                                       const GridLayout& layout, int T,
                                                       uint64_t seed) {
  if (T <= 0) throw std::invalid_argument("run_episode: T must be positive");
  std::array<Agent*, 2> agents = {&agent_a, &agent_b};
  agent_a.begin_episode(hash_combine(seed, 10));
  agent_b.begin_episode(hash_combine(seed, 11));

  JointTrajectory traj;
  traj.profiles = {agent_a.profile().name, agent_b.profile().name};
  traj.env_seed = hash_combine(seed, 1);
  traj.T = T;
  for (int i = 0; i < 2; ++i) {
    traj.obs[i].resize(T, kObsDim);
    traj.actions[i].resize(T);
    traj.rewards[i].resize(T);
    traj.events[i].resize(T);
  }
  traj.task_reward.resize(T);

  EpisodeMetrics m;
  KitchenState state = reset(layout, traj.env_seed);
  for (int t = 0; t < T; ++t) {
    std::array<Action, 2> actions;
    for (int i = 0; i < 2; ++i) {
      Observation o = observe(layout, state, i);
      traj.obs[i].row(t) = o.transpose();
      int a;
      try {
        a = agents[i]->act(o);
      } catch (const std::exception& e) {
        throw std::runtime_error("agent " + std::to_string(i) + " failed at step " +
                                 std::to_string(t) + ": " + e.what());
      }
      if (a < 0 || a >= kNumActions)
        throw std::runtime_error("agent " + std::to_string(i) + " emitted illegal action at step " +
                                 std::to_string(t));
      traj.actions[i][t] = static_cast<uint8_t>(a);
      actions[i] = static_cast<Action>(a);
    }
    StepResult r = step(layout, state, actions);
    traj.task_reward[t] = r.task_reward;
    m.task_reward += r.task_reward;
    for (int i = 0; i < 2; ++i) {
      traj.events[i][t] = r.events.flags[i];
      FeatureVector phi = extract_features(layout, state, r.events, r.state, i, r.task_reward);
      double rew = linear_reward(phi, agents[i]->profile());
      traj.rewards[i](t) = rew;
      m.individual[i] += rew;
    }
    double belief = agent_a.profile_belief(agent_b.profile());
    if (!std::isnan(belief)) m.profile_prob_trace.push_back(belief);
    state = r.state;
  }
  m.plan_count = {agent_a.plan_count(), agent_b.plan_count()};
  return {std::move(m), std::move(traj)};
}

EpisodeMetrics metrics_from_trajectory(const JointTrajectory& traj) {
  EpisodeMetrics m;
  m.task_reward = traj.task_reward.sum();
  m.individual = {traj.rewards[0].sum(), traj.rewards[1].sum()};
  return m;
}

}  // namespace tomcat
