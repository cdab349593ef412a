#include "tomcat/plan/replanner.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace tomcat {

std::string ReplanPolicy::name() const {
  switch (kind) {
    case Kind::Always: return "always";
    case Kind::EveryN: return "every" + std::to_string(every_n);
    case Kind::Horizon: return "horizon";
    case Kind::Dynamic: return "dynamic";
  }
  return "?";
}

ReplanPolicy ReplanPolicy::parse(const std::string& name, int every_n, double threshold) {
  if (name == "always") return always();
  if (name == "horizon") return horizon();
  if (name == "dynamic") return dynamic(threshold);
  if (name == "every_n" || name == "fixed") return every(every_n);
  throw std::invalid_argument("replan policy: unknown scheme '" + name + "'");
}

double obs_divergence(const Observation& o, const std::optional<Observation>& predicted,
                      const Normalizer& obs_norm) {
  if (!predicted) return std::numeric_limits<double>::infinity();
  if (o.size() != predicted->size())
    throw std::invalid_argument("obs_divergence: observation length mismatch");
  double sum = 0;
  for (int d = 0; d < o.size(); ++d) {
    double diff = obs_norm.apply1(d, o[d]) - obs_norm.apply1(d, (*predicted)[d]);
    sum += diff * diff;
  }
  return sum / static_cast<double>(o.size());
}

AgentRuntime make_runtime(const AgentProfile& profile, AgentRuntime::Mode mode, uint64_t seed) {
  AgentRuntime rt;
  rt.profile = profile.weights;
  rt.profile_name = profile.name;
  rt.mode = mode;
  rt.rng = Rng(hash_combine(seed, 0x7c7));
  rt.buffer.obs = MatrixXf::Zero(0, kObsDim);
  return rt;
}

bool should_replan(const AgentRuntime& rt, const Observation& o, const ReplanPolicy& policy,
                   const Normalizer& obs_norm) {
  switch (policy.kind) {
    case ReplanPolicy::Kind::Always: return true;
    case ReplanPolicy::Kind::EveryN: return rt.t % policy.every_n == 0;
    case ReplanPolicy::Kind::Horizon: return rt.plan.empty();
    case ReplanPolicy::Kind::Dynamic:
      return rt.plan.empty() || obs_divergence(o, rt.predicted, obs_norm) > policy.threshold;
  }
  return true;
}

namespace {

// History rows in augmented layout; the teammate's previous action is
// reconstructed from consecutive observations (overt behavior only).
MatrixXf history_to_aug(const AgentRuntime& rt, const GridLayout& layout) {
  const int n = static_cast<int>(rt.history.size());
  MatrixXf rows = MatrixXf::Zero(n, kAugObsDim);
  for (int i = 0; i < n; ++i) {
    rows.row(i).head(kObsDim) = rt.history[i].transpose();
    const Observation* prev = nullptr;
    if (i > 0) prev = &rt.history[i - 1];
    else if (rt.evicted) prev = &*rt.evicted;
    if (prev) {
      int act = reconstruct_teammate_action(*prev, rt.history[i], layout.width(), layout.height());
      rows(i, kObsDim + act) = 1.0f;
    }
  }
  return rows;
}

StepSeq mental_window(const AgentRuntime& rt, int t_cur) {
  // completed (obs, action) pairs strictly before the current step
  const int pairs = static_cast<int>(rt.action_history.size());
  const int take = std::min(pairs, t_cur);
  StepSeq w;
  w.obs = MatrixXf::Zero(take, kObsDim);
  w.actions.resize(take);
  const int offset = pairs - take;
  for (int i = 0; i < take; ++i) {
    w.obs.row(i) = rt.history[offset + i].transpose();
    w.actions[i] = rt.action_history[offset + i];
  }
  return w;
}

}  // namespace

int tomcat_act(AgentRuntime& rt, const Observation& o, const TomcatModels& models,
               const ReplanPolicy& policy) {
  if (!models.madiff || !models.layout) throw std::invalid_argument("tomcat_act: models missing");
  const MadiffModel& madiff = *models.madiff;
  const MadiffConfig& cfg = madiff.cfg;
  if ((cfg.conditions.e_char || cfg.conditions.e_mental) && !models.tomnet)
    throw std::invalid_argument("tomcat_act: condition set needs a tomnet");

  rt.history.push_back(o);
  while (static_cast<int>(rt.history.size()) > cfg.history + 1) {
    rt.evicted = rt.history.front();
    rt.history.pop_front();
    if (!rt.action_history.empty()) rt.action_history.pop_front();
  }

  if (should_replan(rt, o, policy, madiff.obs_norm)) {
    ConditioningVector cond;
    if (cfg.conditions.returns) cond.set_returns(cfg.returns_target);
    if (cfg.conditions.profile) cond.set_profile(rt.profile);
    if (cfg.conditions.e_char) cond.set_char(rt.e_char);
    if (cfg.conditions.e_mental) {
      VectorXd e_mental = models.tomnet->mental_embed(
          rt.profile, mental_window(rt, models.tomnet->cfg.t_cur), rt.e_char);
      cond.set_mental(e_mental);
    }
    MatrixXf hist = history_to_aug(rt, *models.layout);
    JointWindow win =
        madiff.ddim_plan(hist, cond, cfg.ddim_steps, cfg.guidance_w, rt.rng.next_u64());
    std::vector<Observation> plan = madiff.extract_plan(win);
    rt.plan.assign(plan.begin(), plan.end());
    rt.plan_count += 1;
    rt.predicted = o;
  }

  Observation next = rt.plan.front();
  rt.plan.pop_front();
  int action = madiff.invdyn.argmax_action(*rt.predicted, next);
  rt.predicted = next;

  rt.action_history.push_back(static_cast<uint8_t>(action));
  rt.t += 1;
  if (rt.mode == AgentRuntime::Mode::Unknown && models.tomnet)
    update_character_buffer(rt, o, action, *models.tomnet);
  return action;
}

void update_character_buffer(AgentRuntime& rt, const Observation& o, int action,
                             const ToMnet& tomnet) {
  if (rt.mode != AgentRuntime::Mode::Unknown || rt.frozen) return;
  const int n = rt.buffer.length();
  if (n >= rt.freeze_t) {
    rt.frozen = true;
    return;
  }
  MatrixXf grown(n + 1, kObsDim);
  if (n > 0) grown.topRows(n) = rt.buffer.obs;
  grown.row(n) = o.transpose();
  rt.buffer.obs = grown;
  rt.buffer.actions.push_back(static_cast<uint8_t>(action));
  rt.e_char = tomnet.char_embed(rt.profile, {rt.buffer});
}

}  // namespace tomcat
