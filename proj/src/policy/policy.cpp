#include "tomcat/policy/policy.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <optional>
#include <stdexcept>

namespace tomcat {

int sample_from_logits(const ActionLogits& logits, double temperature, Rng& rng) {
  if (temperature <= 0.0)
    throw std::invalid_argument("sample_action: temperature must be positive");
  VectorXd p = softmax(logits / temperature);
  double u = rng.uniform01();
  double acc = 0.0;
  for (int a = 0; a < kNumActions; ++a) {
    acc += p[a];
    if (u < acc) return a;
  }
  return kNumActions - 1;
}

int sample_action(const Policy& policy, const Observation& o, double temperature, Rng& rng) {
  return sample_from_logits(policy.logits(o), temperature, rng);
}

DecodedObs decode_observation(const GridLayout& layout, const Observation& o) {
  const float wn = static_cast<float>(layout.width() - 1);
  const float hn = static_cast<float>(layout.height() - 1);
  auto argmax4 = [&](int base) {
    int best = 0;
    for (int i = 1; i < 4; ++i)
      if (o[base + i] > o[base + best]) best = i;
    return best;
  };
  DecodedObs d;
  d.self = {static_cast<int>(std::lround(o[0] * wn)), static_cast<int>(std::lround(o[1] * hn))};
  d.orientation = static_cast<Action>(argmax4(2));
  d.held = static_cast<Held>(argmax4(6));
  d.mate = {static_cast<int>(std::lround(o[18] * wn)), static_cast<int>(std::lround(o[19] * hn))};
  d.mate_orientation = static_cast<Action>(argmax4(23));
  d.mate_held = static_cast<Held>(argmax4(27));

  // Observation pot slots are nearest-first from self; map back to layout order.
  std::vector<int> order = pot_order_from(layout, d.self);
  d.pots.resize(layout.pots().size());
  for (int slot = 0; slot < 2 && slot < static_cast<int>(order.size()); ++slot) {
    DecodedObs::PotView v;
    v.onion_count = static_cast<int>(std::lround(o[10 + 4 * slot] * 3.0f));
    v.cooking = o[11 + 4 * slot] > 0.5f;
    v.ready = o[12 + 4 * slot] > 0.5f;
    d.pots[order[slot]] = v;
  }
  return d;
}

namespace {

constexpr std::array<Action, 4> kDirs = {Action::North, Action::South, Action::East, Action::West};

// Multi-source BFS over floor cells; returns dist-to-nearest-target per cell
// (-1 unreachable). `blocked` cells act as walls.
std::vector<int> dist_to_targets(const GridLayout& layout, const std::vector<Cell>& targets,
                                 const std::vector<Cell>& blocked) {
  std::vector<int> dist(static_cast<size_t>(layout.width()) * layout.height(), -1);
  auto idx = [&](Cell c) { return static_cast<size_t>(c.y) * layout.width() + c.x; };
  for (Cell b : blocked)
    if (layout.in_bounds(b)) dist[idx(b)] = -2;
  std::deque<Cell> queue;
  for (Cell t : targets) {
    if (!layout.is_floor(t) || dist[idx(t)] != -1) continue;
    dist[idx(t)] = 0;
    queue.push_back(t);
  }
  while (!queue.empty()) {
    Cell c = queue.front();
    queue.pop_front();
    for (Action a : kDirs) {
      Cell n = neighbor(c, a);
      if (!layout.is_floor(n) || dist[idx(n)] != -1) continue;
      dist[idx(n)] = dist[idx(c)] + 1;
      queue.push_back(n);
    }
  }
  for (int& d : dist)
    if (d == -2) d = -1;
  return dist;
}

// First move of a shortest path from `from` to any target cell, preferring
// the direction order N,S,E,W. Falls back to ignoring the teammate block if
// it disconnects everything; nullopt when already there or unreachable.
std::optional<Action> bfs_step(const GridLayout& layout, Cell from,
                               const std::vector<Cell>& targets, Cell mate) {
  for (Cell t : targets)
    if (t == from) return std::nullopt;
  for (int pass = 0; pass < 2; ++pass) {
    std::vector<Cell> blocked = pass == 0 ? std::vector<Cell>{mate} : std::vector<Cell>{};
    std::vector<int> dist = dist_to_targets(layout, targets, blocked);
    int here = layout.dist_at(dist, from);
    if (here <= 0) continue;  // unreachable under this blocking (or on target)
    for (Action a : kDirs) {
      Cell n = neighbor(from, a);
      if (!layout.is_floor(n) || n == mate) continue;
      int d = layout.dist_at(dist, n);
      if (d >= 0 && d == here - 1) return a;
    }
  }
  return std::nullopt;
}

std::vector<Cell> adjacent_floor(const GridLayout& layout, Cell station) {
  std::vector<Cell> out;
  for (Action a : kDirs) {
    Cell n = neighbor(station, a);
    if (layout.is_floor(n)) out.push_back(n);
  }
  return out;
}

class ScriptedPolicy final : public Policy {
 public:
  ScriptedPolicy(const AgentProfile& profile, const GridLayout& layout, double gain)
      : layout_(layout), gain_(gain) {
    profile_name = profile.name;
    origin = "scripted";
    kind_ = profile.name;
    bool known = false;
    for (const AgentProfile& p : builtin_profiles()) known |= p.name == kind_;
    if (!known) throw std::invalid_argument("scripted_policy: unknown profile '" + kind_ + "'");
  }

  ActionLogits logits(const Observation& o) const override {
    ActionLogits z = ActionLogits::Zero();
    if (kind_ == "Random") return z;
    DecodedObs d = decode_observation(layout_, o);
    z[static_cast<int>(decide(d))] = gain_;
    return z;
  }

 private:
  enum class PotWant { Fillable, Ready, Cooking };

  // Picks a pot matching `want`; FarHelper prefers pots far from the mate.
  std::optional<Cell> pick_pot(const DecodedObs& d, PotWant want) const {
    const auto& pots = layout_.pots();
    std::optional<Cell> best;
    double best_key = std::numeric_limits<double>::infinity();
    for (size_t i = 0; i < pots.size(); ++i) {
      const auto& v = d.pots[i];
      bool ok = false;
      switch (want) {
        case PotWant::Fillable: ok = !v.cooking && !v.ready && v.onion_count < 3; break;
        case PotWant::Ready: ok = v.ready; break;
        case PotWant::Cooking: ok = v.cooking; break;
      }
      if (!ok) continue;
      double key = station_key(d, pots[i]);
      if (key < best_key) {
        best_key = key;
        best = pots[i];
      }
    }
    return best;
  }

  std::optional<Cell> pick_station(const DecodedObs& d, Tile kind) const {
    std::optional<Cell> best;
    double best_key = std::numeric_limits<double>::infinity();
    for (Cell c : layout_.stations(kind)) {
      double key = station_key(d, c);
      if (key < best_key) {
        best_key = key;
        best = c;
      }
    }
    return best;
  }

  // Smaller is better: own approach distance, with FarHelper trading it off
  // against distance from the teammate.
  double station_key(const DecodedObs& d, Cell station) const {
    auto approach = [&](Cell from, Cell target) {
      std::vector<int> dist = dist_to_targets(layout_, adjacent_floor(layout_, target), {});
      int v = layout_.dist_at(dist, from);
      return v < 0 ? layout_.distance_sentinel() : v;
    };
    double own = approach(d.self, station);
    if (kind_ != "FarHelper") return own;
    return own - 2.0 * approach(d.mate, station);
  }

  // Walk to a cell adjacent to `station`, turn to face it, then either
  // interact or hold position (wait mode, e.g. beside a cooking pot).
  Action reach(const DecodedObs& d, Cell station, bool interact) const {
    for (Action a : kDirs) {
      if (neighbor(d.self, a) == station) {
        if (d.orientation == a) return interact ? Action::Interact : Action::NoOp;
        return a;  // turning move; blocked by the station tile itself
      }
    }
    auto stepa = bfs_step(layout_, d.self, adjacent_floor(layout_, station), d.mate);
    return stepa.value_or(Action::NoOp);
  }

  Action decide(const DecodedObs& d) const {
    if (kind_ == "Follower") {
      if (layout_.path_distance(d.self, d.mate) <= 1) return Action::NoOp;
      auto stepa = bfs_step(layout_, d.self, adjacent_floor(layout_, d.mate), d.mate);
      return stepa.value_or(Action::NoOp);
    }

    auto fillable = pick_pot(d, PotWant::Fillable);
    auto ready = pick_pot(d, PotWant::Ready);
    auto cooking = pick_pot(d, PotWant::Cooking);

    if (kind_ == "Cook") {
      switch (d.held) {
        case Held::Nothing: return reach_station(d, Tile::OnionDispenser, true);
        case Held::Onion:
          if (fillable) return reach(d, *fillable, true);
          return wait_at_pot(d, cooking, ready);
        case Held::Dish:
        case Held::Soup: return reach_station(d, Tile::Counter, true);
      }
    }

    if (kind_ == "Server") {
      switch (d.held) {
        case Held::Soup: return reach_station(d, Tile::ServingStation, true);
        case Held::Dish:
          if (ready) return reach(d, *ready, true);
          return wait_at_pot(d, cooking, ready);
        case Held::Nothing:
          if (ready || cooking) return reach_station(d, Tile::DishDispenser, true);
          return Action::NoOp;
        case Held::Onion: return reach_station(d, Tile::Counter, true);
      }
    }

    if (kind_ == "Helper" || kind_ == "FarHelper") {
      switch (d.held) {
        case Held::Soup: return reach_station(d, Tile::ServingStation, true);
        case Held::Dish:
          if (ready) return reach(d, *ready, true);
          return wait_at_pot(d, cooking, ready);
        case Held::Onion:
          if (fillable) return reach(d, *fillable, true);
          return wait_at_pot(d, cooking, ready);
        case Held::Nothing:
          if (ready) return reach_station(d, Tile::DishDispenser, true);
          if (fillable) return reach_station(d, Tile::OnionDispenser, true);
          return reach_station(d, Tile::DishDispenser, true);  // everything cooking
      }
    }

    if (kind_ == "Sparse") {
      switch (d.held) {
        case Held::Soup: return reach_station(d, Tile::ServingStation, true);
        case Held::Dish:
          if (ready) return reach(d, *ready, true);
          return wait_at_pot(d, cooking, ready);
        case Held::Onion:
          if (fillable) return reach(d, *fillable, true);
          return wait_at_pot(d, cooking, ready);
        case Held::Nothing:
          if (ready || cooking) return reach_station(d, Tile::DishDispenser, true);
          if (fillable) return reach_station(d, Tile::OnionDispenser, true);
          return Action::NoOp;
      }
    }

    return Action::NoOp;
  }

  Action reach_station(const DecodedObs& d, Tile kind, bool interact) const {
    auto target = pick_station(d, kind);
    if (!target) return Action::NoOp;
    return reach(d, *target, interact);
  }

  Action wait_at_pot(const DecodedObs& d, std::optional<Cell> cooking,
                     std::optional<Cell> ready) const {
    Cell target = ready ? *ready : (cooking ? *cooking : layout_.pots()[0]);
    return reach(d, target, false);
  }

  GridLayout layout_;
  double gain_;
  std::string kind_;
};

}  // namespace

PolicyPtr scripted_policy(const AgentProfile& profile, const GridLayout& layout, double gain) {
  return std::make_shared<ScriptedPolicy>(profile, layout, gain);
}

}  // namespace tomcat
