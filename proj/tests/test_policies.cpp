#include "colpick/errors.hpp"
#include "colpick/policies.hpp"

#include "doctest.h"

#include <map>

using namespace colpick;

namespace {

// One picker; each AMR starts on its single item so it is waiting from t = 0.
std::unique_ptr<Simulator> waiting_world(std::shared_ptr<const Warehouse> wh, NodeId picker,
                                         const std::vector<NodeId>& items) {
  const auto& lay = wh->layout();
  EpisodeSetup s;
  s.products.resize(lay.pick_count());
  for (int v = 0; v < lay.pick_count(); ++v) s.products[v] = {v, 1.0, 1.0, 0};
  for (NodeId v : items) {
    Pickrun r;
    r.lines.push_back(make_pick_line(v, 1, s.products, {}));
    s.amr_runs.push_back(r);
    s.amr_start.push_back(v);
  }
  s.picker_start = {picker};
  return std::make_unique<Simulator>(wh, s, SimOptions::deterministic(7.5), 1, PickerStart::kRequest);
}

}  // namespace

TEST_SUITE("policies") {
  TEST_CASE("greedy takes the nearest valid node") {
    auto wh = Warehouse::make(2, 8);
    const auto& lay = wh->layout();
    const NodeId me = lay.pick_node(0, 4, Side::kLeft);
    const NodeId near = lay.pick_node(0, 2, Side::kLeft);  // 2.8 m
    const NodeId far = lay.pick_node(0, 7, Side::kLeft);   // 4.2 m
    auto sim = waiting_world(wh, me, {far, near});
    sim->advance_to_next_request();
    ActionMask mask(lay.pick_count(), 0);
    mask[near] = mask[far] = 1;
    CHECK(greedy_choice(*sim, 0, mask) == near);
    mask[near] = 0;
    CHECK(greedy_choice(*sim, 0, mask) == far);
    std::fill(mask.begin(), mask.end(), 0);
    CHECK_THROWS_AS(greedy_choice(*sim, 0, mask), InvalidActionError);
  }

  TEST_CASE("greedy breaks ties toward the lowest id") {
    auto wh = Warehouse::make(2, 8);
    const auto& lay = wh->layout();
    const NodeId me = lay.pick_node(0, 4, Side::kLeft);
    const NodeId below = lay.pick_node(0, 2, Side::kLeft);
    const NodeId above = lay.pick_node(0, 6, Side::kLeft);
    auto sim = waiting_world(wh, me, {above, below});
    sim->advance_to_next_request();
    ActionMask mask(lay.pick_count(), 0);
    mask[below] = mask[above] = 1;
    CHECK(greedy_choice(*sim, 0, mask) == std::min(below, above));
  }

  TEST_CASE("random policy is uniform over the mask and reproducible") {
    auto wh = Warehouse::make(2, 8);
    const auto& lay = wh->layout();
    auto sim = waiting_world(wh, 0, {3, 9, 20});
    sim->advance_to_next_request();
    ActionMask mask(lay.pick_count(), 0);
    for (NodeId v : {3, 9, 20, 31}) mask[v] = 1;
    RandomPolicy p;
    p.begin_episode(7);
    std::map<NodeId, int> count;
    const int n = 40000;
    std::vector<NodeId> first;
    for (int i = 0; i < n; ++i) {
      const NodeId v = p.choose({*sim, 0, mask});
      REQUIRE(mask[v]);
      ++count[v];
      if (i < 20) first.push_back(v);
    }
    for (auto [v, c] : count) CHECK(static_cast<double>(c) / n == doctest::Approx(0.25).epsilon(0.04));
    p.begin_episode(7);
    for (NodeId v : first) CHECK(p.choose({*sim, 0, mask}) == v);
  }

  TEST_CASE("aisle cost trades distance against waiting AMRs") {
    CHECK(VIPolicy::aisle_cost(2, 3, 2) == -1);
    CHECK(VIPolicy::aisle_cost(0, 3, 0) == 3);
    CHECK(VIPolicy::aisle_cost(4, 1, 1) == 2);
  }

  TEST_CASE("VI prefers a waiting AMR ahead over one equally far behind") {
    auto wh = Warehouse::make(2, 16);
    const auto& lay = wh->layout();
    // Aisle 0 runs up, so ahead is a larger depth index.
    const NodeId me = lay.pick_node(0, 8, Side::kLeft);
    const NodeId ahead = lay.pick_node(0, 12, Side::kLeft);
    const NodeId behind = lay.pick_node(0, 4, Side::kLeft);
    auto sim = waiting_world(wh, me, {ahead, behind});
    sim->advance_to_next_request();
    const auto mask = valid_actions(*sim, 0);
    REQUIRE(mask[ahead]);
    REQUIRE(mask[behind]);
    VIPolicy vi;
    vi.begin_episode(0);
    CHECK(vi.choose({*sim, 0, mask}) == ahead);
    CHECK(vi.walkers()[0].aisle == 0);
    CHECK(vi.walkers()[0].cursor == 12);
    CHECK(greedy_choice(*sim, 0, mask) == behind);
  }

  TEST_CASE("VI takes a nearer waiting AMR behind within the window") {
    auto wh = Warehouse::make(2, 16);
    const auto& lay = wh->layout();
    const NodeId me = lay.pick_node(0, 8, Side::kLeft);
    const NodeId ahead = lay.pick_node(0, 12, Side::kLeft);
    const NodeId behind = lay.pick_node(0, 6, Side::kLeft);
    auto sim = waiting_world(wh, me, {ahead, behind});
    sim->advance_to_next_request();
    VIPolicy vi;
    CHECK(vi.choose({*sim, 0, valid_actions(*sim, 0)}) == behind);
  }

  TEST_CASE("VI moves to the cheapest unvisited aisle") {
    auto wh = Warehouse::make(4, 6);
    const auto& lay = wh->layout();
    const NodeId me = lay.pick_node(0, 5, Side::kLeft);
    // Aisle 3 holds three waiting AMRs (cost 0), aisle 2 one (cost 1).
    const NodeId a2 = lay.pick_node(2, 3, Side::kLeft);
    const NodeId a3x = lay.pick_node(3, 1, Side::kLeft);
    const NodeId a3y = lay.pick_node(3, 4, Side::kRight);
    const NodeId a3z = lay.pick_node(3, 2, Side::kLeft);
    auto sim = waiting_world(wh, me, {a3x, a3y, a3z, a2});
    sim->advance_to_next_request();
    VIPolicy vi;
    // Aisle 3 runs down, so depth 4 is the first waiting node along travel.
    CHECK(vi.choose({*sim, 0, valid_actions(*sim, 0)}) == a3y);
    CHECK(vi.walkers()[0].aisle == 3);
  }

  TEST_CASE("baseline policies only choose valid nodes over full episodes") {
    ScenarioConfig sc;
    sc.n_aisles = 4;
    sc.depth = 4;
    sc.n_pickers = 3;
    sc.n_amrs = 6;
    sc.total_picks = 300;
    EnvConfig cfg{sc};
    for (const char* name : {"greedy", "vi", "random"}) {
      auto pol = make_baseline_policy(name, 3);
      PickingEnv env(cfg);
      env.set_compute_features(false);
      for (std::uint64_t seed = 1; seed <= 3; ++seed) {
        REQUIRE(env.reset(seed));
        pol->begin_episode(seed);
        while (!env.done()) {
          const auto& obs = env.observation();
          const NodeId v = pol->choose({env.sim(), obs.picker, obs.mask});
          REQUIRE(obs.mask.at(v));
          env.step(v);
        }
        CHECK(env.metrics().picks > 0);
      }
    }
    CHECK_THROWS_AS(make_baseline_policy("nearest"), ConfigError);
  }
}
