#include "tomcat/policy/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <stdexcept>

#include <json.hpp>

#include "tomcat/core/binio.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace tomcat {

std::string Dataset::team_key(const std::string& a, const std::string& b) {
  return a <= b ? a + "__" + b : b + "__" + a;
}

void Dataset::add(JointTrajectory traj) {
  groups_[team_key(traj.profiles[0], traj.profiles[1])].push_back(std::move(traj));
}

const std::vector<JointTrajectory>& Dataset::team(const std::string& a,
                                                  const std::string& b) const {
  auto it = groups_.find(team_key(a, b));
  if (it == groups_.end())
    throw std::out_of_range("dataset: no trajectories for team " + team_key(a, b));
  return it->second;
}

bool Dataset::has_team(const std::string& a, const std::string& b) const {
  return groups_.count(team_key(a, b)) > 0;
}

std::vector<std::string> Dataset::team_keys() const {
  std::vector<std::string> keys;
  for (const auto& [k, _] : groups_) keys.push_back(k);
  return keys;
}

size_t Dataset::size() const {
  size_t n = 0;
  for (const auto& [_, v] : groups_) n += v.size();
  return n;
}

std::vector<std::string> Dataset::teams_of(const std::string& profile) const {
  std::vector<std::string> keys;
  for (const auto& [k, v] : groups_) {
    if (v.empty()) continue;
    if (v[0].profiles[0] == profile || v[0].profiles[1] == profile) keys.push_back(k);
  }
  return keys;
}

JointTrajectory rollout_episode(const GridLayout& layout, const Policy& pol_a,
                                const Policy& pol_b, const AgentProfile& prof_a,
                                const AgentProfile& prof_b, int T, double temperature,
                                uint64_t episode_seed) {
  if (T <= 0) throw std::invalid_argument("rollout: T must be positive");
  JointTrajectory traj;
  traj.profiles = {prof_a.name, prof_b.name};
  traj.env_seed = hash_combine(episode_seed, 1);
  traj.T = T;
  for (int i = 0; i < 2; ++i) {
    traj.obs[i].resize(T, kObsDim);
    traj.actions[i].resize(T);
    traj.rewards[i].resize(T);
    traj.events[i].resize(T);
  }
  traj.task_reward.resize(T);

  std::array<Rng, 2> rngs = {Rng(hash_combine(episode_seed, 2)),
                             Rng(hash_combine(episode_seed, 3))};
  const std::array<const Policy*, 2> pols = {&pol_a, &pol_b};
  const std::array<const AgentProfile*, 2> profs = {&prof_a, &prof_b};

  KitchenState state = reset(layout, traj.env_seed);
  for (int t = 0; t < T; ++t) {
    std::array<Action, 2> acts;
    for (int i = 0; i < 2; ++i) {
      Observation o = observe(layout, state, i);
      traj.obs[i].row(t) = o.transpose();
      int a = sample_action(*pols[i], o, temperature, rngs[i]);
      traj.actions[i][t] = static_cast<uint8_t>(a);
      acts[i] = static_cast<Action>(a);
    }
    StepResult r = step(layout, state, acts);
    traj.task_reward[t] = r.task_reward;
    for (int i = 0; i < 2; ++i) {
      traj.events[i][t] = r.events.flags[i];
      FeatureVector phi =
          extract_features(layout, state, r.events, r.state, i, r.task_reward);
      traj.rewards[i](t) = linear_reward(phi, *profs[i]);
    }
    state = r.state;
  }
  return traj;
}

Dataset generate_dataset(const GridLayout& layout,
                         const std::vector<std::pair<std::string, std::string>>& teams,
                         int episodes_per_team, int T, double temperature, uint64_t seed,
                         double scripted_gain) {
  if (T <= 0) throw std::invalid_argument("generate_dataset: T must be positive");
  if (episodes_per_team <= 0)
    throw std::invalid_argument("generate_dataset: episodes_per_team must be positive");
  Dataset ds;
  ds.layout_text = layout.to_text();
  ds.manifest.layout_hash = layout.text_hash();
  ds.manifest.seed = seed;
  ds.manifest.T = T;
  ds.manifest.temperature = temperature;

  std::map<std::string, PolicyPtr> cache;
  auto policy_for = [&](const std::string& name) {
    auto it = cache.find(name);
    if (it != cache.end()) return it->second;
    PolicyPtr p = scripted_policy(profile_by_name(name), layout, scripted_gain);
    cache[name] = p;
    return p;
  };

  for (const auto& [a, b] : teams) {
    const std::string key = Dataset::team_key(a, b);
    const AgentProfile &pa = profile_by_name(a), &pb = profile_by_name(b);
    PolicyPtr pol_a = policy_for(a), pol_b = policy_for(b);
    uint64_t team_seed = hash_combine(seed, hash_string(key.c_str()));
    for (int e = 0; e < episodes_per_team; ++e) {
      ds.add(rollout_episode(layout, *pol_a, *pol_b, pa, pb, T, temperature,
                             hash_combine(team_seed, static_cast<uint64_t>(e))));
    }
    ds.manifest.team_counts[key] += episodes_per_team;
  }
  return ds;
}

bool replay_matches(const GridLayout& layout, const JointTrajectory& traj) {
  KitchenState state = reset(layout, traj.env_seed);
  for (int t = 0; t < traj.T; ++t) {
    for (int i = 0; i < 2; ++i) {
      Observation o = observe(layout, state, i);
      if ((o.transpose().array() != traj.obs[i].row(t).array()).any()) return false;
    }
    StepResult r = step(layout, state,
                        {action_from_int(traj.actions[0][t]), action_from_int(traj.actions[1][t])});
    if (r.task_reward != traj.task_reward[t]) return false;
    for (int i = 0; i < 2; ++i) {
      if (r.events.flags[i] != traj.events[i][t]) return false;
      FeatureVector phi = extract_features(layout, state, r.events, r.state, i, r.task_reward);
      double rew = linear_reward(phi, profile_by_name(traj.profiles[i]));
      if (std::abs(rew - traj.rewards[i](t)) > 1e-9) return false;
    }
    state = r.state;
  }
  return true;
}

namespace {

constexpr uint32_t kDatasetSchema = 1;
constexpr size_t kChunkSize = 100;

void save_chunk(const std::string& path, const std::vector<JointTrajectory>& trajs,
                size_t begin, size_t end) {
  ArchiveWriter w;
  w.put_string("count", std::to_string(end - begin));
  for (size_t i = begin; i < end; ++i) {
    const JointTrajectory& t = trajs[i];
    std::string p = "t" + std::to_string(i - begin) + "/";
    w.put_string(p + "profiles", t.profiles[0] + "," + t.profiles[1]);
    w.put_u64(p + "seed", {t.env_seed});
    for (int a = 0; a < 2; ++a) {
      std::string ap = p + std::to_string(a) + "/";
      w.put_f32(ap + "obs", t.obs[a]);
      w.put_u8(ap + "actions", t.actions[a]);
      w.put_f64(ap + "rewards", t.rewards[a]);
      w.put_u8(ap + "events", t.events[a]);
    }
    w.put_f64(p + "task_reward", t.task_reward);
  }
  w.save(path, kDatasetSchema);
}

}  // namespace

void save_dataset(const std::string& dir, const Dataset& ds) {
  fs::create_directories(dir);
  std::ofstream(fs::path(dir) / "layout.txt") << ds.layout_text;

  json manifest;
  manifest["schema_version"] = ds.manifest.schema_version;
  manifest["layout_hash"] = ds.manifest.layout_hash;
  manifest["seed"] = ds.manifest.seed;
  manifest["T"] = ds.manifest.T;
  manifest["temperature"] = ds.manifest.temperature;
  manifest["team_counts"] = ds.manifest.team_counts;
  std::ofstream(fs::path(dir) / "manifest.json") << manifest.dump(2) << "\n";

  for (const auto& [key, trajs] : ds.groups()) {
    fs::path team_dir = fs::path(dir) / "teams" / key;
    fs::create_directories(team_dir);
    size_t chunk = 0;
    for (size_t begin = 0; begin < trajs.size(); begin += kChunkSize, ++chunk) {
      char name[32];
      std::snprintf(name, sizeof(name), "chunk_%04zu.bin", chunk);
      save_chunk((team_dir / name).string(), trajs, begin,
                 std::min(begin + kChunkSize, trajs.size()));
    }
  }
}

Dataset load_dataset(const std::string& dir) {
  std::ifstream mf(fs::path(dir) / "manifest.json");
  if (!mf) throw std::runtime_error("dataset: missing manifest in " + dir);
  json manifest = json::parse(mf);
  Dataset ds;
  ds.manifest.schema_version = manifest.at("schema_version").get<int>();
  if (ds.manifest.schema_version != static_cast<int>(kDatasetSchema))
    throw std::runtime_error("dataset: schema version mismatch in " + dir);
  ds.manifest.layout_hash = manifest.at("layout_hash").get<uint64_t>();
  ds.manifest.seed = manifest.at("seed").get<uint64_t>();
  ds.manifest.T = manifest.at("T").get<int>();
  ds.manifest.temperature = manifest.at("temperature").get<double>();
  ds.manifest.team_counts = manifest.at("team_counts").get<std::map<std::string, int>>();

  std::ifstream lf(fs::path(dir) / "layout.txt");
  std::stringstream ss;
  ss << lf.rdbuf();
  ds.layout_text = ss.str();
  GridLayout layout = parse_layout(ds.layout_text);
  if (layout.text_hash() != ds.manifest.layout_hash)
    throw std::runtime_error("dataset: layout hash mismatch in " + dir);

  for (const auto& [key, expected] : ds.manifest.team_counts) {
    fs::path team_dir = fs::path(dir) / "teams" / key;
    if (!fs::exists(team_dir)) throw std::runtime_error("dataset: missing team dir " + key);
    std::vector<fs::path> chunks;
    for (const auto& e : fs::directory_iterator(team_dir)) chunks.push_back(e.path());
    std::sort(chunks.begin(), chunks.end());
    int loaded = 0;
    for (const fs::path& cp : chunks) {
      Archive ar = Archive::load(cp.string());
      int count = std::stoi(ar.get_string("count"));
      for (int i = 0; i < count; ++i) {
        std::string p = "t" + std::to_string(i) + "/";
        JointTrajectory t;
        std::string profs = ar.get_string(p + "profiles");
        size_t comma = profs.find(',');
        t.profiles = {profs.substr(0, comma), profs.substr(comma + 1)};
        t.env_seed = ar.get_u64(p + "seed")[0];
        for (int a = 0; a < 2; ++a) {
          std::string ap = p + std::to_string(a) + "/";
          t.obs[a] = ar.get_f32(ap + "obs");
          t.actions[a] = ar.get_u8(ap + "actions");
          t.rewards[a] = ar.get_f64(ap + "rewards");
          t.events[a] = ar.get_u8(ap + "events");
        }
        t.task_reward = ar.get_f64(p + "task_reward");
        t.T = static_cast<int>(t.obs[0].rows());
        ds.add(std::move(t));
        ++loaded;
      }
    }
    if (loaded != expected)
      throw std::runtime_error("dataset: team " + key + " has " + std::to_string(loaded) +
                               " trajectories, manifest says " + std::to_string(expected));
  }
  return ds;
}

void export_trajectory_csv(const std::string& path, const JointTrajectory& traj) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("csv: cannot write " + path);
  out << "t,action0,action1,reward0,reward1,task_reward,events0,events1";
  for (int a = 0; a < 2; ++a)
    for (int k = 0; k < kObsDim; ++k) out << ",obs" << a << "_" << k;
  out << "\n";
  for (int t = 0; t < traj.T; ++t) {
    out << t << "," << int(traj.actions[0][t]) << "," << int(traj.actions[1][t]) << ","
        << traj.rewards[0](t) << "," << traj.rewards[1](t) << "," << traj.task_reward[t] << ","
        << int(traj.events[0][t]) << "," << int(traj.events[1][t]);
    for (int a = 0; a < 2; ++a)
      for (int k = 0; k < kObsDim; ++k) out << "," << traj.obs[a](t, k);
    out << "\n";
  }
}

}  // namespace tomcat
