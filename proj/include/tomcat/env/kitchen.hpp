#pragma once

#include <array>
#include <cstdint>

#include "tomcat/core/rng.hpp"
#include "tomcat/core/types.hpp"
#include "tomcat/env/layout.hpp"

namespace tomcat {

// Action indices are fixed across the stack: the first four double as
// orientations.
enum class Action : uint8_t { North = 0, South = 1, East = 2, West = 3, NoOp = 4, Interact = 5 };
enum class Held : uint8_t { Onion = 0, Dish = 1, Soup = 2, Nothing = 3 };

inline Cell neighbor(Cell c, Action dir) {
  switch (dir) {
    case Action::North: return {c.x, c.y - 1};
    case Action::South: return {c.x, c.y + 1};
    case Action::East: return {c.x + 1, c.y};
    case Action::West: return {c.x - 1, c.y};
    default: return c;
  }
}

struct AgentState {
  Cell pos;
  Action orientation = Action::South;  // always one of the four directions
  Held held = Held::Nothing;
  bool operator==(const AgentState&) const = default;
};

struct PotState {
  int onion_count = 0;
  int cook_timer = 0;  // ticks remaining; 0 when idle or ready
  bool ready = false;
  bool operator==(const PotState&) const = default;
};

struct KitchenState {
  std::array<AgentState, 2> agents;
  std::vector<PotState> pots;  // aligned with GridLayout::pots()
  int tick = 0;
  bool operator==(const KitchenState&) const = default;
};

// Per-agent interaction outcome flags for one step, bit-packed in the
// FeatureVector's event order.
enum EventBit : uint8_t {
  kOnionDrop = 1 << 0,
  kOnionPickup = 1 << 1,
  kDishDrop = 1 << 2,
  kDishPickup = 1 << 3,
  kPottingOnion = 1 << 4,
  kSoupDelivery = 1 << 5,
  kSoupDrop = 1 << 6,
  kSoupPickup = 1 << 7,
};

struct EventSet {
  std::array<uint8_t, 2> flags = {0, 0};
  bool test(int agent, EventBit bit) const { return (flags[agent] & bit) != 0; }
  bool operator==(const EventSet&) const = default;
};

struct EnvParams {
  int onions_per_soup = 3;
  int cook_time = 20;
  double delivery_reward = 20.0;
};

struct StepResult {
  KitchenState state;
  EventSet events;
  double task_reward = 0.0;
};

// Places both agents on distinct spawn cells drawn from the seeded
// generator; pots empty, tick 0. Identical seeds give identical states.
KitchenState reset(const GridLayout& layout, uint64_t seed);

// Pure deterministic transition. Movement actions always set orientation;
// position changes only onto free Floor cells. Simultaneous moves into one
// cell block both agents and swap-through is forbidden. Interactions resolve
// in agent-index order against the faced tile. Pots with a full onion load
// cook for EnvParams::cook_time ticks (the potting tick included) and then
// hold a ready soup.
StepResult step(const GridLayout& layout, const KitchenState& state,
                std::array<Action, 2> joint_action, const EnvParams& params = {});

// Orders the layout's pots nearest-first from `from` by floor path distance
// to a cell adjacent to the pot (ties by pot index). Used by observe() and
// by anything that must reproduce its pot ordering.
std::vector<int> pot_order_from(const GridLayout& layout, Cell from);

// Fixed-length overt-behavior encoding (kObsDim components, each in [0,1]).
Observation observe(const GridLayout& layout, const KitchenState& state, int agent);

Action action_from_int(int a);

}  // namespace tomcat
