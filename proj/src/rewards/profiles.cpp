#include "tomcat/rewards/profiles.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace tomcat {

const std::array<std::string, kNumFeatures>& feature_names() {
  static const std::array<std::string, kNumFeatures> names = {
      "OnionDrop",    "OnionPickup", "DishDrop",     "DishPickup",      "PottingOnion",
      "SoupDelivery", "SoupDrop",    "SoupPickup",   "SelfPosX",        "SelfPosY",
      "DistToOtherX", "DistToOtherY", "PathDistToOther", "TaskRewFrac"};
  return names;
}

FeatureVector extract_features(const GridLayout& layout, const KitchenState& prev_state,
                               const EventSet& events, const KitchenState& state, int agent,
                               double task_reward) {
  (void)prev_state;
  FeatureVector phi = FeatureVector::Zero();
  for (int b = 0; b < 8; ++b) phi[b] = (events.flags[agent] >> b) & 1 ? 1.0 : 0.0;
  const AgentState& self = state.agents[agent];
  const AgentState& mate = state.agents[1 - agent];
  phi[kFeatSelfPosX] = self.pos.x;
  phi[kFeatSelfPosY] = self.pos.y;
  phi[kFeatDistToOtherX] = std::abs(self.pos.x - mate.pos.x);
  phi[kFeatDistToOtherY] = std::abs(self.pos.y - mate.pos.y);
  phi[kFeatPathDistToOther] = layout.path_distance(self.pos, mate.pos);
  phi[kFeatTaskRewFrac] = task_reward;
  return phi;
}

double linear_reward(const FeatureVector& phi, const AgentProfile& profile) {
  return phi.dot(profile.weights);
}

Eigen::Matrix<double, kNumFeatures, 1> profile_sign(const AgentProfile& profile) {
  Eigen::Matrix<double, kNumFeatures, 1> s;
  for (int k = 0; k < kNumFeatures; ++k) {
    double w = profile.weights[k];
    s[k] = std::abs(w) < 1e-9 ? 0.0 : (w > 0 ? 1.0 : -1.0);
  }
  return s;
}

const std::vector<AgentProfile>& builtin_profiles() {
  static const std::vector<AgentProfile> profiles = [] {
    auto make = [](const std::string& name, std::initializer_list<double> w) {
      AgentProfile p;
      p.name = name;
      int k = 0;
      for (double v : w) p.weights[k++] = v;
      return p;
    };
    std::vector<AgentProfile> v;
    v.push_back(make("Cook",
                     {-5.0, 1.0, 1.0, -5.0, 5.0, 0.0, 1.0, -5.0, 0, 0, 0, 0, 0.0, 1.0}));
    v.push_back(make("Server",
                     {1.0, -5.0, -5.0, 1.0, -1.0, 5.0, -5.0, 10.0, 0, 0, 0, 0, 0.0, 1.0}));
    v.push_back(make("Helper",
                     {0.0, 0.10, 0.0, 0.10, 10.0, 0.0, -20.0, 15.0, 0, 0, 0, 0, 0.0, 1.0}));
    v.push_back(make("FarHelper",
                     {0.0, 0.10, 0.0, 0.10, 10.0, 0.0, -20.0, 15.0, 0, 0, 0, 0, 0.01, 1.0}));
    v.push_back(make("Follower",
                     {0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0, 0, 0, 0, -1.0, 0.0}));
    v.push_back(make("Sparse",
                     {0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0, 0, 0, 0, 0.0, 1.0}));
    v.push_back(make("Random",
                     {0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0, 0, 0, 0, 0.0, 0.0}));
    return v;
  }();
  return profiles;
}

const AgentProfile& profile_by_name(const std::string& name) {
  for (const AgentProfile& p : builtin_profiles())
    if (p.name == name) return p;
  throw std::invalid_argument("unknown profile '" + name + "'");
}

std::string profiles_to_text(const std::vector<AgentProfile>& profiles) {
  std::ostringstream out;
  out << "# profile";
  for (const auto& n : feature_names()) out << "\t" << n;
  out << "\n";
  char buf[32];
  for (const AgentProfile& p : profiles) {
    out << p.name;
    for (int k = 0; k < kNumFeatures; ++k) {
      std::snprintf(buf, sizeof(buf), "%.2f", p.weights[k]);
      out << "\t" << buf;
    }
    out << "\n";
  }
  return out.str();
}

std::vector<AgentProfile> profiles_from_text(const std::string& text) {
  std::vector<AgentProfile> out;
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ls(line);
    AgentProfile p;
    if (!(ls >> p.name))
      throw std::runtime_error("profiles: bad line " + std::to_string(line_no));
    for (int k = 0; k < kNumFeatures; ++k) {
      if (!(ls >> p.weights[k]))
        throw std::runtime_error("profiles: line " + std::to_string(line_no) + " has fewer than " +
                                 std::to_string(kNumFeatures) + " weights");
    }
    double extra;
    if (ls >> extra)
      throw std::runtime_error("profiles: line " + std::to_string(line_no) + " has more than " +
                               std::to_string(kNumFeatures) + " weights");
    out.push_back(std::move(p));
  }
  return out;
}

void save_profiles(const std::string& path, const std::vector<AgentProfile>& profiles) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("profiles: cannot write " + path);
  out << profiles_to_text(profiles);
}

std::vector<AgentProfile> load_profiles(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("profiles: cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return profiles_from_text(ss.str());
}

}  // namespace tomcat
