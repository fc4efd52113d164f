#include "colpick/errors.hpp"
#include "colpick/oracle.hpp"

#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <functional>

using namespace colpick;

namespace {

DeterministicInstance one_aisle_instance() {
  // One aisle of depth 3; picker and AMR both start at the bottom junction.
  DeterministicInstance inst;
  inst.id = "micro";
  inst.n_aisles = 1;
  inst.depth = 3;
  inst.picker_speed = 1.4;
  inst.amr_speed = 1.4;
  const auto lay = WarehouseLayout::build(1, 3);
  inst.items.push_back({lay.pick_node(0, 2, Side::kLeft), 4.0, 7.5});
  inst.amr_items = {{0}};
  inst.amr_start = {lay.base_node()};
  inst.picker_start = {lay.base_node()};
  return inst;
}

// Enumerates every (assignment, interleaving) pair by brute force.
double brute_force_best_completion(const DeterministicInstance& inst) {
  const int n = inst.n_items();
  const int K = inst.n_pickers();
  double best = std::numeric_limits<double>::infinity();
  std::vector<int> assign(n, 0);
  std::function<void(int)> over_assign = [&](int i) {
    if (i == n) {
      // All per-picker orders consistent with some global interleaving of AMR sequences.
      std::vector<std::size_t> next(inst.n_amrs(), 0);
      Decisions d;
      d.assignment = assign;
      d.orders.assign(K, {});
      std::function<void(int)> interleave = [&](int placed) {
        if (placed == n) {
          const auto s = evaluate_schedule(inst, d);
          if (s.feasible) best = std::min(best, s.completion);
          return;
        }
        for (int r = 0; r < inst.n_amrs(); ++r) {
          if (next[r] >= inst.amr_items[r].size()) continue;
          const int it = inst.amr_items[r][next[r]++];
          d.orders[assign[it]].push_back(it);
          interleave(placed + 1);
          d.orders[assign[it]].pop_back();
          --next[r];
        }
      };
      interleave(0);
      return;
    }
    for (int k = 0; k < K; ++k) {
      assign[i] = k;
      over_assign(i + 1);
    }
  };
  over_assign(0);
  return best;
}

}  // namespace

TEST_SUITE("oracle") {
  TEST_CASE("single item schedule matches the hand timeline") {
    const auto inst = one_aisle_instance();
    Decisions d{{0}, {{0}}};
    const auto s = evaluate_schedule(inst, d);
    REQUIRE(s.feasible);
    // Junction to depth 2 is 1.4 + 2 * 1.4 = 4.2 m, 3 s at 1.4 m/s for both.
    CHECK(s.picker_arrival[0] == doctest::Approx(3.0));
    CHECK(s.load_start[0] == doctest::Approx(3.0));
    CHECK(s.completion == doctest::Approx(10.5));
    CHECK(s.workload_sd == 0.0);
  }

  TEST_CASE("AMR waits for the slower picker") {
    auto inst = one_aisle_instance();
    inst.picker_speed = 0.7;
    const auto s = evaluate_schedule(inst, {{0}, {{0}}});
    CHECK(s.load_start[0] == doctest::Approx(6.0));
    CHECK(s.completion == doctest::Approx(13.5));
  }

  TEST_CASE("two items at one node take two loads after arrival") {
    auto inst = one_aisle_instance();
    inst.items.push_back({inst.items[0].node, 3.0, 7.5});
    inst.amr_items = {{0, 1}};
    const auto s = evaluate_schedule(inst, {{0, 0}, {{0, 1}}});
    REQUIRE(s.feasible);
    CHECK(s.completion == doctest::Approx(3.0 + 2 * 7.5));
    CHECK(s.workloads[0] == 7.0);
    const auto run = simulate_scripted(inst, {{0, 0}, {{0, 1}}});
    CHECK(run.metrics.completion_time == doctest::Approx(s.completion).epsilon(1e-12));
  }

  TEST_CASE("two items and one picker: best of both orders") {
    DeterministicInstance inst;
    inst.n_aisles = 2;
    inst.depth = 4;
    const auto lay = WarehouseLayout::build(2, 4);
    inst.items = {{lay.pick_node(0, 3, Side::kLeft), 1, 7.5}, {lay.pick_node(1, 1, Side::kRight), 2, 7.5}};
    inst.amr_items = {{0}, {1}};
    inst.amr_start = {lay.base_node(), lay.top_junction(1)};
    inst.picker_start = {lay.pick_node(1, 3, Side::kLeft)};
    const double c01 = evaluate_schedule(inst, {{0, 0}, {{0, 1}}}).completion;
    const double c10 = evaluate_schedule(inst, {{0, 0}, {{1, 0}}}).completion;
    const auto r = solve_exact(inst, Objective::efficiency());
    CHECK(r.schedule.completion == doctest::Approx(std::min(c01, c10)));
    CHECK(r.leaves >= 1u);
  }

  TEST_CASE("adding a picker never raises the optimum") {
    RandomStream rs(17);
    InstanceSpec spec;
    spec.max_items = 6;
    spec.max_pickers = 2;
    for (int t = 0; t < 8; ++t) {
      auto inst = random_instance(rs, spec);
      const double before = solve_exact(inst, Objective::efficiency()).schedule.completion;
      inst.picker_start.push_back(static_cast<NodeId>(rs.uniform_int(0, 2 * inst.n_aisles * inst.depth - 1)));
      const double after = solve_exact(inst, Objective::efficiency()).schedule.completion;
      CHECK(after <= before + 1e-9);
    }
  }

  TEST_CASE("cyclic precedence is infeasible") {
    DeterministicInstance inst;
    inst.n_aisles = 2;
    inst.depth = 3;
    const auto lay = WarehouseLayout::build(2, 3);
    inst.items = {{lay.pick_node(0, 0, Side::kLeft), 1, 7.5}, {lay.pick_node(0, 2, Side::kLeft), 1, 7.5}};
    inst.amr_items = {{0, 1}};
    inst.amr_start = {lay.base_node()};
    inst.picker_start = {lay.base_node()};
    CHECK_FALSE(evaluate_schedule(inst, {{0, 0}, {{1, 0}}}).feasible);
    CHECK(evaluate_schedule(inst, {{0, 0}, {{0, 1}}}).feasible);
  }

  TEST_CASE("malformed decisions are rejected") {
    const auto inst = one_aisle_instance();
    CHECK_THROWS_AS(evaluate_schedule(inst, {{0}, {{}}}), ConfigError);
    CHECK_THROWS_AS(evaluate_schedule(inst, {{1}, {{0}}}), ConfigError);
  }

  TEST_CASE("instance json round trip") {
    RandomStream rs(5);
    const auto inst = random_instance(rs, {}, "x");
    nlohmann::json j = inst;
    const auto back = j.get<DeterministicInstance>();
    CHECK(back.id == "x");
    CHECK(back.n_items() == inst.n_items());
    CHECK(back.amr_items == inst.amr_items);
    CHECK(back.picker_start == inst.picker_start);
    for (int i = 0; i < inst.n_items(); ++i) CHECK(back.items[i].workload == inst.items[i].workload);
  }

  TEST_CASE("exact search matches brute force and pruning keeps the optimum") {
    RandomStream rs(11);
    InstanceSpec spec;
    spec.max_items = 6;
    for (int t = 0; t < 12; ++t) {
      const auto inst = random_instance(rs, spec);
      const double brute = brute_force_best_completion(inst);
      const auto pruned = solve_exact(inst, Objective::efficiency(), true);
      const auto full = solve_exact(inst, Objective::efficiency(), false);
      CHECK(pruned.schedule.completion == doctest::Approx(brute).epsilon(1e-12));
      CHECK(full.schedule.completion == doctest::Approx(brute).epsilon(1e-12));
      CHECK(pruned.nodes <= full.nodes);
    }
  }

  TEST_CASE("fairness objective reaches the best achievable sd") {
    RandomStream rs(3);
    InstanceSpec spec;
    spec.max_items = 6;
    for (int t = 0; t < 8; ++t) {
      const auto inst = random_instance(rs, spec);
      // Best sd over all assignments, independent of timing.
      double best = std::numeric_limits<double>::infinity();
      const int n = inst.n_items();
      const int K = inst.n_pickers();
      int combos = 1;
      for (int i = 0; i < n; ++i) combos *= K;
      for (int c = 0; c < combos; ++c) {
        std::vector<double> w(K, 0.0);
        int x = c;
        for (int i = 0; i < n; ++i, x /= K) w[x % K] += inst.items[i].workload;
        best = std::min(best, population_sd(w));
      }
      const auto r = solve_exact(inst, Objective::fairness());
      CHECK(r.schedule.workload_sd == doctest::Approx(best).epsilon(1e-12));
    }
  }

  TEST_CASE("exact search bounds are enforced") {
    RandomStream rs(1);
    InstanceSpec spec;
    spec.min_items = 10;
    spec.max_items = 10;
    const auto inst = random_instance(rs, spec);
    CHECK_THROWS_AS(solve_exact(inst, Objective::efficiency()), ConfigError);
  }

  TEST_CASE("scripted simulation reproduces the schedule") {
    RandomStream rs(21);
    for (int t = 0; t < 40; ++t) {
      const auto inst = random_instance(rs, {});
      const auto d = random_decisions(rs, inst);
      const auto s = evaluate_schedule(inst, d);
      REQUIRE(s.feasible);
      const auto run = simulate_scripted(inst, d);
      CHECK(run.metrics.completion_time == doctest::Approx(s.completion).epsilon(1e-12));
      for (int k = 0; k < inst.n_pickers(); ++k) {
        CHECK(run.metrics.workloads[k] == doctest::Approx(s.workloads[k]).epsilon(1e-12));
      }
      CHECK(run.decisions.assignment == d.assignment);
    }
  }

  TEST_CASE("heuristics never beat the optimum") {
    RandomStream rs(8);
    InstanceSpec spec;
    spec.max_items = 7;
    for (int t = 0; t < 10; ++t) {
      const auto inst = random_instance(rs, spec);
      const auto opt = solve_exact(inst, Objective::efficiency());
      GreedyPolicy greedy;
      VIPolicy vi;
      const auto g = simulate_deterministic(inst, greedy);
      const auto v = simulate_deterministic(inst, vi);
      CHECK(g.metrics.completion_time >= opt.schedule.completion - 1e-9);
      CHECK(v.metrics.completion_time >= opt.schedule.completion - 1e-9);
      // Idle waits make the live run no faster than its decisions started as early as possible.
      const auto eg = evaluate_schedule(inst, g.decisions);
      REQUIRE(eg.feasible);
      CHECK(eg.completion <= g.metrics.completion_time + 1e-9);
    }
  }
}
