#include <doctest.h>

#include <set>

#include "tomcat/env/kitchen.hpp"

using namespace tomcat;

namespace {

const char* kTinyLayout =
    "XXXXX\n"
    "XO PX\n"
    "X   X\n"
    "XD SX\n"
    "XXXXX\n";

KitchenState make_state(const GridLayout& layout, Cell a0, Cell a1,
                        Action o0 = Action::South, Action o1 = Action::South) {
  KitchenState s;
  s.agents[0] = {a0, o0, Held::Nothing};
  s.agents[1] = {a1, o1, Held::Nothing};
  s.pots.assign(layout.pots().size(), PotState{});
  return s;
}

}  // namespace

TEST_SUITE_BEGIN("env");

TEST_CASE("parse_layout accepts a minimal legal layout") {
  GridLayout g = parse_layout(kTinyLayout);
  CHECK(g.width() == 5);
  CHECK(g.height() == 5);
  CHECK(g.pots().size() == 1);
  CHECK(g.stations(Tile::OnionDispenser).size() == 1);
  CHECK(g.stations(Tile::DishDispenser).size() == 1);
  CHECK(g.stations(Tile::ServingStation).size() == 1);
  CHECK(g.spawn_zone().size() == 5);
  CHECK(g.to_text() == kTinyLayout);
}

TEST_CASE("parse_layout rejects an open boundary with row and column") {
  const char* open =
      "XXXXX\n"
      "XO PX\n"
      "X   X\n"
      "XD S \n"
      "XXXXX\n";
  CHECK_THROWS_WITH_AS(parse_layout(open), doctest::Contains("open boundary"),
                       std::invalid_argument);
}

TEST_CASE("parse_layout rejects non-rectangular input and unknown characters") {
  CHECK_THROWS_WITH_AS(parse_layout("XXXXX\nXO PX\nXXXX\n"),
                       doctest::Contains("non-rectangular"), std::invalid_argument);
  CHECK_THROWS_WITH_AS(parse_layout("XXX\nXqX\nXXX\n"), doctest::Contains("unknown character"),
                       std::invalid_argument);
  CHECK_THROWS_WITH_AS(parse_layout("XXX\nX X\nXXX\n"), doctest::Contains("missing required"),
                       std::invalid_argument);
}

TEST_CASE("bundled default layout has two pots behind a bottleneck column") {
  GridLayout g = default_layout();
  CHECK(g.pots().size() == 2);
  CHECK(g.to_text() == default_layout_text());
  // The middle column is non-floor except for a single gap.
  const int mid = g.width() / 2;
  int floor_cells = 0, counters = 0;
  for (int y = 1; y < g.height() - 1; ++y) {
    Tile t = g.tile(mid, y);
    floor_cells += t == Tile::Floor;
    counters += t == Tile::Counter;
  }
  CHECK(floor_cells == 1);
  CHECK(counters >= 2);
  // Both rooms stay connected through the gap.
  CHECK(g.path_distance({1, 1}, {g.width() - 2, 1}) < g.distance_sentinel());
}

TEST_CASE("reset is deterministic and spreads spawns across seeds") {
  GridLayout g = default_layout();
  CHECK(reset(g, 42) == reset(g, 42));
  std::set<std::pair<int, int>> firsts;
  for (uint64_t seed = 0; seed < 100; ++seed) {
    KitchenState s = reset(g, seed);
    CHECK(g.is_floor(s.agents[0].pos));
    CHECK(g.is_floor(s.agents[1].pos));
    CHECK(!(s.agents[0].pos == s.agents[1].pos));
    CHECK(s.tick == 0);
    for (const PotState& p : s.pots) CHECK(p == PotState{});
    firsts.insert({s.agents[0].pos.x, s.agents[0].pos.y});
  }
  CHECK(firsts.size() >= 2);
}

TEST_CASE("reset requires two spawn cells") {
  const char* cramped =
      "XXXXX\n"
      "XO DX\n"
      "XPXSX\n"
      "XXXXX\n";
  GridLayout g = parse_layout(cramped);
  REQUIRE(g.spawn_zone().size() == 1);
  CHECK_THROWS_AS(reset(g, 0), std::invalid_argument);
}

TEST_CASE("double NoOp leaves everything except tick and cook timers") {
  GridLayout g = parse_layout(kTinyLayout);
  KitchenState s = make_state(g, {2, 1}, {2, 3});
  StepResult r = step(g, s, {Action::NoOp, Action::NoOp});
  CHECK(r.state.agents == s.agents);
  CHECK(r.state.pots == s.pots);
  CHECK(r.state.tick == s.tick + 1);
  CHECK(r.task_reward == 0.0);
  CHECK(r.events == EventSet{});
}

TEST_CASE("delivery: holding soup facing the serving station") {
  GridLayout g = parse_layout(kTinyLayout);
  KitchenState s = make_state(g, {2, 3}, {2, 1});
  s.agents[0].held = Held::Soup;
  s.agents[0].orientation = Action::East;  // faces S at (3,3)
  StepResult r = step(g, s, {Action::Interact, Action::NoOp});
  CHECK(r.events.test(0, kSoupDelivery));
  CHECK(r.task_reward == 20.0);
  CHECK(r.state.agents[0].held == Held::Nothing);
}

TEST_CASE("movement blocking: contested cells, swaps and walls") {
  GridLayout g = parse_layout(kTinyLayout);
  // Both move into (2,2): both blocked, orientations change.
  KitchenState s = make_state(g, {2, 1}, {2, 3});
  StepResult r = step(g, s, {Action::South, Action::North});
  CHECK(r.state.agents[0].pos == Cell{2, 1});
  CHECK(r.state.agents[1].pos == Cell{2, 3});
  CHECK(r.state.agents[0].orientation == Action::South);
  CHECK(r.state.agents[1].orientation == Action::North);

  // Swap-through is forbidden.
  KitchenState s2 = make_state(g, {2, 2}, {2, 3});
  StepResult r2 = step(g, s2, {Action::South, Action::North});
  CHECK(r2.state.agents[0].pos == Cell{2, 2});
  CHECK(r2.state.agents[1].pos == Cell{2, 3});

  // Moving into a wall only turns.
  KitchenState s3 = make_state(g, {1, 2}, {3, 2});
  StepResult r3 = step(g, s3, {Action::West, Action::East});
  CHECK(r3.state.agents[0].pos == Cell{1, 2});
  CHECK(r3.state.agents[0].orientation == Action::West);
  CHECK(r3.state.agents[1].pos == Cell{3, 2});

  // Following into a vacated cell is allowed.
  KitchenState s4 = make_state(g, {2, 1}, {2, 2});
  StepResult r4 = step(g, s4, {Action::South, Action::South});
  CHECK(r4.state.agents[0].pos == Cell{2, 2});
  CHECK(r4.state.agents[1].pos == Cell{2, 3});
}

TEST_CASE("hand-simulated full delivery cycle yields exactly one delivery") {
  GridLayout g = parse_layout(kTinyLayout);
  KitchenState s = make_state(g, {2, 1}, {3, 2});

  using A = Action;
  // onion loop x3, dish fetch, wait for the cook, soup pickup, serve
  std::vector<Action> script = {
      A::West, A::Interact, A::East, A::Interact,  // onion 1
      A::West, A::Interact, A::East, A::Interact,  // onion 2
      A::West, A::Interact, A::East, A::Interact,  // onion 3 (cooking starts, tick 12)
      A::South, A::South, A::West, A::Interact,    // dish pickup
      A::North, A::North, A::East,                 // back to the pot, facing it
  };
  while (script.size() < 32) script.push_back(A::NoOp);  // pot ready after step 31
  script.push_back(A::Interact);                         // soup pickup (step 32)
  script.push_back(A::South);
  script.push_back(A::South);
  script.push_back(A::East);
  script.push_back(A::Interact);  // delivery (step 36)

  double total_reward = 0;
  int deliveries = 0, pottings = 0, onion_pickups = 0, dish_pickups = 0, soup_pickups = 0;
  for (size_t t = 0; t < script.size(); ++t) {
    StepResult r = step(g, s, {script[t], A::NoOp});
    total_reward += r.task_reward;
    deliveries += r.events.test(0, kSoupDelivery);
    pottings += r.events.test(0, kPottingOnion);
    onion_pickups += r.events.test(0, kOnionPickup);
    dish_pickups += r.events.test(0, kDishPickup);
    soup_pickups += r.events.test(0, kSoupPickup);
    if (r.events.test(0, kSoupDelivery)) CHECK(t == 36);
    s = r.state;
  }
  CHECK(deliveries == 1);
  CHECK(total_reward == 20.0);
  CHECK(pottings == 3);
  CHECK(onion_pickups == 3);
  CHECK(dish_pickups == 1);
  CHECK(soup_pickups == 1);
  CHECK(s.pots[0] == PotState{});
}

TEST_CASE("cook timer counts the potting tick and readies the pot") {
  GridLayout g = parse_layout(kTinyLayout);
  EnvParams params;
  params.cook_time = 3;
  KitchenState s = make_state(g, {2, 1}, {3, 2});
  s.pots[0].onion_count = 2;
  s.agents[0].held = Held::Onion;
  s.agents[0].orientation = Action::East;  // faces the pot
  StepResult r = step(g, s, {Action::Interact, Action::NoOp}, params);
  CHECK(r.state.pots[0].onion_count == 3);
  CHECK(r.state.pots[0].cook_timer == 2);  // decremented on the potting tick
  CHECK(!r.state.pots[0].ready);
  s = r.state;
  r = step(g, s, {Action::NoOp, Action::NoOp}, params);
  CHECK(r.state.pots[0].cook_timer == 1);
  r = step(g, r.state, {Action::NoOp, Action::NoOp}, params);
  CHECK(r.state.pots[0].cook_timer == 0);
  CHECK(r.state.pots[0].ready);
  // A further onion bounces off a ready pot.
  s = r.state;
  s.agents[0].held = Held::Onion;
  r = step(g, s, {Action::Interact, Action::NoOp}, params);
  CHECK(r.state.agents[0].held == Held::Onion);
  CHECK(!r.events.test(0, kPottingOnion));
}

TEST_CASE("observation one-hot blocks sum to one and dimension is fixed") {
  GridLayout g = default_layout();
  KitchenState s = reset(g, 7);
  for (int agent = 0; agent < 2; ++agent) {
    Observation o = observe(g, s, agent);
    REQUIRE(o.size() == kObsDim);
    CHECK(o.segment(2, 4).sum() == doctest::Approx(1.0));   // own orientation
    CHECK(o.segment(6, 4).sum() == doctest::Approx(1.0));   // own held
    CHECK(o.segment(23, 4).sum() == doctest::Approx(1.0));  // teammate orientation
    CHECK(o.segment(27, 4).sum() == doctest::Approx(1.0));  // teammate held
    CHECK(o.minCoeff() >= 0.0f);
    CHECK(o.maxCoeff() <= 1.0f);
  }
}

TEST_CASE("teammate held-item change touches only the teammate-held block") {
  GridLayout g = default_layout();
  KitchenState s = reset(g, 3);
  KitchenState s2 = s;
  s2.agents[1].held = Held::Soup;
  Observation a = observe(g, s, 0), b = observe(g, s2, 0);
  for (int k = 0; k < kObsDim; ++k) {
    if (k >= 27 && k < 31) continue;
    CHECK(a[k] == b[k]);
  }
  CHECK(a.segment(27, 4) != b.segment(27, 4));
}

TEST_CASE("mirrored agents swap self and teammate blocks") {
  GridLayout g = parse_layout(kTinyLayout);
  KitchenState s = make_state(g, {2, 1}, {2, 3}, Action::North, Action::East);
  s.agents[0].held = Held::Onion;
  s.agents[1].held = Held::Dish;
  Observation o0 = observe(g, s, 0), o1 = observe(g, s, 1);
  // self block of agent 0 == teammate block of agent 1
  CHECK(o0.segment(0, 2) == o1.segment(18, 2));
  CHECK(o0.segment(2, 4) == o1.segment(23, 4));
  CHECK(o0.segment(6, 4) == o1.segment(27, 4));
  CHECK(o1.segment(0, 2) == o0.segment(18, 2));
  // path distance is symmetric
  CHECK(o0[22] == o1[22]);
  // interactable flags swap
  CHECK(o0[31] == o1[32]);
  CHECK(o0[32] == o1[31]);
}

TEST_CASE("determinism and conservation over random rollouts") {
  GridLayout g = default_layout();
  Rng rng(99);
  for (int trial = 0; trial < 5; ++trial) {
    uint64_t seed = rng.next_u64();
    KitchenState a = reset(g, seed), b = reset(g, seed);
    Rng actions(seed);
    double cum_reward = 0;
    int deliveries = 0;
    for (int t = 0; t < 300; ++t) {
      std::array<Action, 2> acts = {static_cast<Action>(actions.uniform_int(6)),
                                    static_cast<Action>(actions.uniform_int(6))};
      StepResult ra = step(g, a, acts), rb = step(g, b, acts);
      CHECK(ra.state == rb.state);
      CHECK(ra.task_reward == rb.task_reward);
      cum_reward += ra.task_reward;
      for (int i = 0; i < 2; ++i) deliveries += ra.events.test(i, kSoupDelivery);
      // blocking invariant
      CHECK(g.is_floor(ra.state.agents[0].pos));
      CHECK(g.is_floor(ra.state.agents[1].pos));
      CHECK(!(ra.state.agents[0].pos == ra.state.agents[1].pos));
      for (const PotState& p : ra.state.pots) {
        CHECK(p.onion_count >= 0);
        CHECK(p.onion_count <= 3);
        if (p.ready) {
          CHECK(p.onion_count == 3);
          CHECK(p.cook_timer == 0);
        }
      }
      a = ra.state;
      b = rb.state;
    }
    CHECK(cum_reward == 20.0 * deliveries);
  }
}

TEST_CASE("malformed action index is rejected") {
  CHECK_THROWS_AS(action_from_int(6), std::invalid_argument);
  CHECK_THROWS_AS(action_from_int(-1), std::invalid_argument);
}

TEST_SUITE_END();
