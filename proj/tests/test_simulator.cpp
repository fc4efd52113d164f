#include "colpick/errors.hpp"
#include "colpick/simulator.hpp"

#include "doctest.h"

#include <cmath>
#include <map>
#include <sstream>

using namespace colpick;

namespace {

std::vector<Product> unit_products(const WarehouseLayout& lay, double weight = 1.0) {
  std::vector<Product> p(lay.pick_count());
  for (int i = 0; i < lay.pick_count(); ++i) p[i] = {i, weight, 1.0, 0};
  return p;
}

Pickrun run_of(const std::vector<Product>& products, std::initializer_list<std::pair<NodeId, int>> lines) {
  Pickrun r;
  for (auto [node, n] : lines) r.lines.push_back(make_pick_line(node, n, products, {}));
  return r;
}

// Runs to completion, always sending the requesting picker to the first valid node.
EpisodeMetrics run_first_valid(Simulator& sim) {
  while (true) {
    const auto adv = sim.advance_to_next_request();
    if (adv.done) break;
    sim.apply_allocation(adv.picker, sim.valid_targets(adv.picker).front());
  }
  return sim.metrics();
}

}  // namespace

TEST_SUITE("simulator") {
  TEST_CASE("single item micro instance matches the hand timeline") {
    auto wh = Warehouse::make(2, 3);
    const auto& lay = wh->layout();
    EpisodeSetup s;
    s.products = unit_products(lay);
    const NodeId item = lay.pick_node(1, 1, Side::kLeft);
    s.amr_runs.push_back(run_of(s.products, {{item, 1}}));
    s.amr_start.push_back(lay.base_node());
    const NodeId picker_start = lay.pick_node(0, 2, Side::kRight);
    s.picker_start.push_back(picker_start);
    Simulator sim(wh, s, SimOptions::deterministic(7.5), 1, PickerStart::kRequest);
    const auto adv = sim.advance_to_next_request();
    REQUIRE_FALSE(adv.done);
    CHECK(adv.picker == 0);
    CHECK(adv.time == 0.0);
    sim.apply_allocation(0, item);
    CHECK(sim.advance_to_next_request().done);
    const double picker = wh->distance(MoveMode::kPicker, picker_start, item) / 1.25;
    const double amr = wh->distance(MoveMode::kAmr, lay.base_node(), item) / 1.5;
    CHECK(sim.metrics().completion_time == doctest::Approx(std::max(picker, amr) + 7.5).epsilon(1e-12));
    CHECK(sim.metrics().workloads[0] == doctest::Approx(1.0));
  }

  TEST_CASE("travel time is distance over speed") {
    auto wh = Warehouse::make(2, 6);
    const auto& lay = wh->layout();
    EpisodeSetup s;
    s.products = unit_products(lay);
    const NodeId from = lay.pick_node(0, 0, Side::kLeft);
    const NodeId to = lay.pick_node(0, 3, Side::kLeft);
    s.amr_runs.push_back(run_of(s.products, {{to, 1}}));
    s.amr_start.push_back(to);
    s.picker_start.push_back(from);
    auto opt = SimOptions::deterministic(7.5);
    opt.noise.picker_speed.mean = 1.4;
    opt.record_events = true;
    Simulator sim(wh, s, opt, 1, PickerStart::kRequest);
    sim.advance_to_next_request();
    sim.apply_allocation(0, to);
    sim.advance_to_next_request();
    const auto& log = sim.pick_log();
    REQUIRE(log.size() == 1u);
    CHECK(log[0].picker_arrival == doctest::Approx(3.0));
    CHECK(log[0].end == doctest::Approx(10.5));
  }

  TEST_CASE("allocation at the current node starts picking at once") {
    auto wh = Warehouse::make(2, 3);
    const auto& lay = wh->layout();
    EpisodeSetup s;
    s.products = unit_products(lay);
    const NodeId a = lay.pick_node(0, 1, Side::kLeft);
    s.amr_runs.push_back(run_of(s.products, {{a, 1}}));
    s.amr_start.push_back(a);
    s.picker_start.push_back(a);
    Simulator sim(wh, s, SimOptions::deterministic(7.5), 1, PickerStart::kRequest);
    sim.advance_to_next_request();
    sim.apply_allocation(0, a);
    CHECK(sim.pickers()[0].status == PickerStatus::kPicking);
    CHECK(sim.advance_to_next_request().done);
    CHECK(sim.metrics().completion_time == doctest::Approx(7.5));
  }

  TEST_CASE("invalid and claimed targets are rejected") {
    auto wh = Warehouse::make(2, 3);
    const auto& lay = wh->layout();
    EpisodeSetup s;
    s.products = unit_products(lay);
    const NodeId a = lay.pick_node(1, 2, Side::kLeft);
    s.amr_runs.push_back(run_of(s.products, {{a, 1}, {lay.pick_node(1, 0, Side::kRight), 1}}));
    s.amr_start.push_back(lay.base_node());
    s.picker_start = {0, 1};
    Simulator sim(wh, s, SimOptions::deterministic(7.5), 1, PickerStart::kRequest);
    auto adv = sim.advance_to_next_request();
    CHECK_THROWS_AS(sim.apply_allocation(adv.picker, lay.pick_node(0, 0, Side::kLeft)), InvalidActionError);
    sim.apply_allocation(adv.picker, a);
    adv = sim.advance_to_next_request();
    REQUIRE_FALSE(adv.done);
    CHECK_THROWS_AS(sim.apply_allocation(adv.picker, a), InvalidActionError);
    CHECK(sim.valid_targets(adv.picker) == std::vector<NodeId>{lay.pick_node(1, 0, Side::kRight)});
  }

  TEST_CASE("a second waiting AMR is served without a new request") {
    auto wh = Warehouse::make(2, 3);
    const auto& lay = wh->layout();
    EpisodeSetup s;
    s.products = unit_products(lay);
    const NodeId x = lay.pick_node(0, 1, Side::kLeft);
    s.amr_runs.push_back(run_of(s.products, {{x, 1}}));
    s.amr_runs.push_back(run_of(s.products, {{x, 2}}));
    s.amr_start = {x, x};
    s.picker_start = {lay.pick_node(0, 2, Side::kLeft)};
    Simulator sim(wh, s, SimOptions::deterministic(7.5), 1, PickerStart::kRequest);
    sim.advance_to_next_request();
    sim.apply_allocation(0, x);
    CHECK(sim.advance_to_next_request().done);
    CHECK(sim.pick_log().size() == 2u);
    CHECK(sim.metrics().completion_time == doctest::Approx(1.4 / 1.25 + 15.0));
    CHECK(sim.metrics().workloads[0] == doctest::Approx(3.0));
  }

  TEST_CASE("an AMR passing a stationary AMR pays an overtake delay") {
    auto wh = Warehouse::make(2, 5);
    const auto& lay = wh->layout();
    EpisodeSetup s;
    s.products = unit_products(lay);
    const NodeId blocker = lay.pick_node(0, 1, Side::kLeft);
    const NodeId target = lay.pick_node(0, 3, Side::kLeft);
    s.amr_runs.push_back(run_of(s.products, {{blocker, 1}}));
    s.amr_runs.push_back(run_of(s.products, {{target, 1}}));
    s.amr_start = {blocker, lay.pick_node(0, 0, Side::kLeft)};
    s.picker_start = {target};
    auto opt = SimOptions::deterministic(7.5);
    opt.overtaking = true;
    opt.repoll_on_stall = true;
    Simulator sim(wh, s, opt, 3, PickerStart::kRequest);
    sim.advance_to_next_request();
    sim.apply_allocation(0, target);
    auto adv = sim.advance_to_next_request();
    REQUIRE_FALSE(adv.done);
    const auto& log = sim.pick_log();
    REQUIRE(log.size() == 1u);
    const double free_run = 3 * 1.4 / 1.5;
    CHECK(log[0].amr_arrival > free_run + 1.0);
    CHECK(log[0].amr_arrival < free_run + 40.0);
  }

  TEST_CASE("workload sd") {
    const std::vector<double> w{10.0, 20.0};
    CHECK(population_sd(w) == doctest::Approx(5.0));
    const std::vector<double> same{4.0, 4.0, 4.0};
    CHECK(population_sd(same) == 0.0);
  }

  TEST_CASE("stochastic episodes conserve mass, keep pickrun order and replay") {
    ScenarioConfig sc;
    sc.n_aisles = 4;
    sc.depth = 4;
    sc.n_pickers = 3;
    sc.n_amrs = 6;
    sc.total_picks = 400;
    auto wh = Warehouse::make(sc.n_aisles, sc.depth);
    const auto model = ProductModel::defaults();
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
      auto sim = init_episode(wh, sc, model, {}, seed);
      const auto m = run_first_valid(sim);
      double mass = 0, picked = 0;
      for (const auto& r : sim.runs()) mass += r.mass();
      for (double w : m.workloads) picked += w;
      CHECK(picked == doctest::Approx(mass).epsilon(1e-12));
      CHECK(m.picks == sim.total_lines());
      std::map<std::pair<int, int>, double> last;
      for (const auto& rec : sim.pick_log()) {
        const auto key = std::make_pair(rec.amr, rec.run);
        if (last.count(key)) CHECK(rec.end > last[key]);
        last[key] = rec.end;
      }
      auto again = init_episode(wh, sc, model, {}, seed);
      const auto m2 = run_first_valid(again);
      CHECK(m2.completion_time == m.completion_time);
      CHECK(m2.workloads == m.workloads);
    }
  }

  TEST_CASE("diverse start") {
    ScenarioConfig sc;
    sc.diverse_start = false;
    auto wh = Warehouse::make(sc.n_aisles, sc.depth);
    RandomStream rs(9);
    const auto full = generate_episode(*wh, sc, ProductModel::defaults(), rs);
    for (std::size_t r = 0; r < full.amr_runs.size(); ++r) {
      CHECK(full.amr_start[r] == wh->layout().base_node());
      CHECK(full.amr_runs[r].lines.size() >= 15u);
    }
    sc.diverse_start = true;
    const auto cut = generate_episode(*wh, sc, ProductModel::defaults(), rs);
    int shortened = 0;
    for (std::size_t r = 0; r < cut.amr_runs.size(); ++r) {
      CHECK_FALSE(cut.amr_runs[r].lines.empty());
      if (cut.amr_runs[r].lines.size() < 15u) ++shortened;
    }
    CHECK(shortened > 0);
    auto sim = init_episode(wh, sc, ProductModel::defaults(), {}, 4);
    for (const auto& p : sim.pickers()) CHECK(p.workload == 0.0);
    CHECK(sim.clock() == 0.0);
  }

  TEST_CASE("rejects empty fleets") {
    ScenarioConfig sc;
    sc.n_pickers = 0;
    CHECK_THROWS_AS(sc.validate(), ConfigError);
    sc.n_pickers = 1;
    sc.n_amrs = 0;
    CHECK_THROWS_AS(sc.validate(), ConfigError);
  }

  TEST_CASE("event log csv") {
    ScenarioConfig sc;
    sc.n_aisles = 2;
    sc.depth = 2;
    sc.n_pickers = 1;
    sc.n_amrs = 1;
    sc.total_picks = 5;
    auto wh = Warehouse::make(2, 2);
    SimOptions opt;
    opt.record_events = true;
    auto sim = init_episode(wh, sc, ProductModel::defaults(), opt, 1);
    run_first_valid(sim);
    std::ostringstream os;
    write_event_log_csv(os, sim.event_log());
    CHECK(os.str().rfind("time,entity,event_type,node\n", 0) == 0);
    CHECK(os.str().find("pick_end") != std::string::npos);
  }
}
