#include "tomcat/env/kitchen.hpp"

#include <algorithm>
#include <stdexcept>

namespace tomcat {

Action action_from_int(int a) {
  if (a < 0 || a >= kNumActions)
    throw std::invalid_argument("action: index " + std::to_string(a) + " out of range 0..5");
  return static_cast<Action>(a);
}

KitchenState reset(const GridLayout& layout, uint64_t seed) {
  const auto& spawn = layout.spawn_zone();
  if (spawn.size() < 2)
    throw std::invalid_argument("reset: spawn zone has " + std::to_string(spawn.size()) +
                                " cells, need at least 2");
  Rng rng(seed);
  int i = rng.uniform_int(static_cast<int>(spawn.size()));
  int j = rng.uniform_int(static_cast<int>(spawn.size()) - 1);
  if (j >= i) ++j;
  KitchenState s;
  s.agents[0] = {spawn[i], Action::South, Held::Nothing};
  s.agents[1] = {spawn[j], Action::South, Held::Nothing};
  s.pots.assign(layout.pots().size(), PotState{});
  s.tick = 0;
  return s;
}

namespace {

bool is_move(Action a) { return static_cast<int>(a) < 4; }

int pot_index_at(const GridLayout& layout, Cell c) {
  const auto& pots = layout.pots();
  for (size_t i = 0; i < pots.size(); ++i)
    if (pots[i] == c) return static_cast<int>(i);
  return -1;
}

void interact(const GridLayout& layout, KitchenState& s, int agent, EventSet& events,
              double& task_reward, const EnvParams& params) {
  AgentState& a = s.agents[agent];
  Cell faced = neighbor(a.pos, a.orientation);
  if (!layout.in_bounds(faced)) return;
  switch (layout.tile(faced)) {
    case Tile::OnionDispenser:
      if (a.held == Held::Nothing) {
        a.held = Held::Onion;
        events.flags[agent] |= kOnionPickup;
      }
      break;
    case Tile::DishDispenser:
      if (a.held == Held::Nothing) {
        a.held = Held::Dish;
        events.flags[agent] |= kDishPickup;
      }
      break;
    case Tile::Pot: {
      PotState& pot = s.pots[pot_index_at(layout, faced)];
      if (a.held == Held::Onion && pot.onion_count < params.onions_per_soup && !pot.ready) {
        a.held = Held::Nothing;
        events.flags[agent] |= kPottingOnion;
        if (++pot.onion_count == params.onions_per_soup) pot.cook_timer = params.cook_time;
      } else if (a.held == Held::Dish && pot.ready) {
        a.held = Held::Soup;
        pot = PotState{};
        events.flags[agent] |= kSoupPickup;
      }
      break;
    }
    case Tile::ServingStation:
      if (a.held == Held::Soup) {
        a.held = Held::Nothing;
        events.flags[agent] |= kSoupDelivery;
        task_reward += params.delivery_reward;
      }
      break;
    case Tile::Counter:
      // Counters accept drops; the item is discarded (state keeps no
      // counter contents).
      switch (a.held) {
        case Held::Onion: events.flags[agent] |= kOnionDrop; break;
        case Held::Dish: events.flags[agent] |= kDishDrop; break;
        case Held::Soup: events.flags[agent] |= kSoupDrop; break;
        case Held::Nothing: return;
      }
      a.held = Held::Nothing;
      break;
    case Tile::Floor:
      break;
  }
}

}  // namespace

StepResult step(const GridLayout& layout, const KitchenState& state,
                std::array<Action, 2> joint_action, const EnvParams& params) {
  StepResult r;
  r.state = state;
  KitchenState& s = r.state;

  // Movement phase: orientation always follows the move direction; the
  // position only changes onto a free Floor cell.
  std::array<Cell, 2> want{s.agents[0].pos, s.agents[1].pos};
  for (int i = 0; i < 2; ++i) {
    if (!is_move(joint_action[i])) continue;
    s.agents[i].orientation = joint_action[i];
    Cell target = neighbor(s.agents[i].pos, joint_action[i]);
    if (layout.is_floor(target)) want[i] = target;
  }
  const Cell pos0 = s.agents[0].pos, pos1 = s.agents[1].pos;
  if (want[0] == want[1]) {
    // contested cell (or a move into an agent that stays put): both blocked
  } else if (want[0] == pos1 && want[1] == pos0) {
    // swap-through forbidden: both stay
  } else {
    // remaining moves are conflict-free; a vacated cell may be entered
    s.agents[0].pos = want[0];
    s.agents[1].pos = want[1];
  }

  // Interaction phase, agent-index order.
  for (int i = 0; i < 2; ++i)
    if (joint_action[i] == Action::Interact)
      interact(layout, s, i, r.events, r.task_reward, params);

  // Cooking phase: a full pot counts down once per tick, including the tick
  // the last onion was potted.
  for (PotState& pot : s.pots) {
    if (pot.cook_timer > 0 && --pot.cook_timer == 0) pot.ready = true;
  }

  s.tick += 1;
  return r;
}

std::vector<int> pot_order_from(const GridLayout& layout, Cell from) {
  const auto& pots = layout.pots();
  std::vector<int> dists = layout.floor_distances(from);
  std::vector<std::pair<int, int>> keyed;  // (distance, index)
  for (size_t i = 0; i < pots.size(); ++i) {
    int best = layout.distance_sentinel() + 1;
    for (Action d : {Action::North, Action::South, Action::East, Action::West}) {
      Cell adj = neighbor(pots[i], d);
      if (!layout.is_floor(adj)) continue;
      int v = layout.dist_at(dists, adj);
      if (v >= 0) best = std::min(best, v + 1);
    }
    keyed.emplace_back(best, static_cast<int>(i));
  }
  std::stable_sort(keyed.begin(), keyed.end());
  std::vector<int> order;
  for (auto& [_, i] : keyed) order.push_back(i);
  return order;
}

Observation observe(const GridLayout& layout, const KitchenState& state, int agent) {
  if (agent < 0 || agent > 1) throw std::invalid_argument("observe: agent index out of range");
  const AgentState& self = state.agents[agent];
  const AgentState& mate = state.agents[1 - agent];
  const float wn = static_cast<float>(layout.width() - 1);
  const float hn = static_cast<float>(layout.height() - 1);
  const EnvParams params;

  Observation o = Observation::Zero(kObsDim);
  int k = 0;
  o[k++] = static_cast<float>(self.pos.x) / wn;
  o[k++] = static_cast<float>(self.pos.y) / hn;
  o[k + static_cast<int>(self.orientation)] = 1.0f;
  k += 4;
  o[k + static_cast<int>(self.held)] = 1.0f;
  k += 4;

  // Two pots, nearest-first from the observer.
  std::vector<int> order = pot_order_from(layout, self.pos);
  for (int slot = 0; slot < 2; ++slot) {
    const PotState& pot = state.pots[order[slot]];
    o[k++] = static_cast<float>(pot.onion_count) / static_cast<float>(params.onions_per_soup);
    o[k++] = pot.cook_timer > 0 ? 1.0f : 0.0f;
    o[k++] = pot.ready ? 1.0f : 0.0f;
    o[k++] = static_cast<float>(pot.cook_timer) / static_cast<float>(params.cook_time);
  }

  o[k++] = static_cast<float>(mate.pos.x) / wn;
  o[k++] = static_cast<float>(mate.pos.y) / hn;
  o[k++] = (static_cast<float>(mate.pos.x - self.pos.x) / wn + 1.0f) / 2.0f;
  o[k++] = (static_cast<float>(mate.pos.y - self.pos.y) / hn + 1.0f) / 2.0f;
  o[k++] = static_cast<float>(layout.path_distance(self.pos, mate.pos)) /
           static_cast<float>(layout.distance_sentinel());
  o[k + static_cast<int>(mate.orientation)] = 1.0f;
  k += 4;
  o[k + static_cast<int>(mate.held)] = 1.0f;
  k += 4;

  auto faces_interactable = [&](const AgentState& a) {
    Cell faced = neighbor(a.pos, a.orientation);
    return layout.in_bounds(faced) && layout.tile(faced) != Tile::Floor;
  };
  o[k++] = faces_interactable(mate) ? 1.0f : 0.0f;
  o[k++] = faces_interactable(self) ? 1.0f : 0.0f;
  return o;
}

}  // namespace tomcat
