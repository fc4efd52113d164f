#include "colpick/config.hpp"

#include "colpick/errors.hpp"

namespace colpick {

namespace {

struct PresetRow {
  const char* name;
  int aisles, depth, pickers, amrs, picks;
};

constexpr PresetRow kPresets[] = {
    {"S", 10, 10, 10, 25, 5000},
    {"M", 15, 15, 20, 50, 7500},
    {"L", 25, 25, 30, 90, 7500},
    {"XL", 35, 40, 60, 180, 15000},
};

nlohmann::json gaussian_json(const TruncatedGaussian& g) { return {{"mean", g.mean}, {"sd", g.sd}, {"floor", g.floor}}; }

TruncatedGaussian gaussian_from(const nlohmann::json& j, const TruncatedGaussian& d) {
  return {j.value("mean", d.mean), j.value("sd", d.sd), j.value("floor", d.floor)};
}

}  // namespace

ScenarioConfig preset(const std::string& name) {
  for (const auto& p : kPresets) {
    if (name == p.name) {
      ScenarioConfig s;
      s.n_aisles = p.aisles;
      s.depth = p.depth;
      s.n_pickers = p.pickers;
      s.n_amrs = p.amrs;
      s.total_picks = p.picks;
      return s;
    }
  }
  throw ConfigError("unknown preset '" + name + "' (expected S, M, L or XL)");
}

std::vector<std::string> preset_names() {
  std::vector<std::string> out;
  for (const auto& p : kPresets) out.emplace_back(p.name);
  return out;
}

void to_json(nlohmann::json& j, const ScenarioConfig& s) {
  j = {{"n_aisles", s.n_aisles},
       {"depth", s.depth},
       {"n_pickers", s.n_pickers},
       {"n_amrs", s.n_amrs},
       {"total_picks", s.total_picks},
       {"pickrun_min", s.pickrun_bounds.min_length},
       {"pickrun_max", s.pickrun_bounds.max_length},
       {"budget", s.budget == PickBudget::kOrderLines ? "order_lines" : "items"},
       {"diverse_start", s.diverse_start}};
}

void from_json(const nlohmann::json& j, ScenarioConfig& s) {
  s.n_aisles = j.value("n_aisles", s.n_aisles);
  s.depth = j.value("depth", s.depth);
  s.n_pickers = j.value("n_pickers", s.n_pickers);
  s.n_amrs = j.value("n_amrs", s.n_amrs);
  s.total_picks = j.value("total_picks", s.total_picks);
  s.pickrun_bounds.min_length = j.value("pickrun_min", s.pickrun_bounds.min_length);
  s.pickrun_bounds.max_length = j.value("pickrun_max", s.pickrun_bounds.max_length);
  if (j.contains("budget")) {
    const auto b = j.at("budget").get<std::string>();
    if (b == "order_lines") {
      s.budget = PickBudget::kOrderLines;
    } else if (b == "items") {
      s.budget = PickBudget::kItems;
    } else {
      throw ConfigError("scenario.budget must be order_lines or items");
    }
  }
  s.diverse_start = j.value("diverse_start", s.diverse_start);
}

void to_json(nlohmann::json& j, const NoiseModel& n) {
  j = {{"picker_speed", gaussian_json(n.picker_speed)},
       {"amr_speed", gaussian_json(n.amr_speed)},
       {"pick_time_relative_sd", n.pick_time_relative_sd},
       {"pick_time_floor", n.pick_time_floor},
       {"disruption_probability", n.disruption_probability},
       {"disruption", gaussian_json(n.disruption)},
       {"overtake", gaussian_json(n.overtake)}};
}

void from_json(const nlohmann::json& j, NoiseModel& n) {
  if (j.contains("picker_speed")) n.picker_speed = gaussian_from(j.at("picker_speed"), n.picker_speed);
  if (j.contains("amr_speed")) n.amr_speed = gaussian_from(j.at("amr_speed"), n.amr_speed);
  n.pick_time_relative_sd = j.value("pick_time_relative_sd", n.pick_time_relative_sd);
  n.pick_time_floor = j.value("pick_time_floor", n.pick_time_floor);
  n.disruption_probability = j.value("disruption_probability", n.disruption_probability);
  if (j.contains("disruption")) n.disruption = gaussian_from(j.at("disruption"), n.disruption);
  if (j.contains("overtake")) n.overtake = gaussian_from(j.at("overtake"), n.overtake);
}

void to_json(nlohmann::json& j, const SimOptions& o) {
  j = {{"noise", o.noise},
       {"random_speeds", o.random_speeds},
       {"random_pick_times", o.random_pick_times},
       {"disruptions", o.disruptions},
       {"overtaking", o.overtaking},
       {"fixed_pick_time", o.fixed_pick_time ? nlohmann::json(*o.fixed_pick_time) : nlohmann::json(nullptr)},
       {"rule", o.rule == AllocationRule::kAmrDestinations ? "amr_destinations" : "any_pending_item"},
       {"repoll_on_stall", o.repoll_on_stall}};
}

void from_json(const nlohmann::json& j, SimOptions& o) {
  if (j.contains("noise")) from_json(j.at("noise"), o.noise);
  o.random_speeds = j.value("random_speeds", o.random_speeds);
  o.random_pick_times = j.value("random_pick_times", o.random_pick_times);
  o.disruptions = j.value("disruptions", o.disruptions);
  o.overtaking = j.value("overtaking", o.overtaking);
  if (j.contains("fixed_pick_time")) {
    const auto& f = j.at("fixed_pick_time");
    o.fixed_pick_time = f.is_null() ? std::nullopt : std::optional<double>(f.get<double>());
  }
  if (j.contains("rule")) {
    const auto r = j.at("rule").get<std::string>();
    if (r == "amr_destinations") {
      o.rule = AllocationRule::kAmrDestinations;
    } else if (r == "any_pending_item") {
      o.rule = AllocationRule::kAnyPendingItem;
    } else {
      throw ConfigError("sim.rule must be amr_destinations or any_pending_item");
    }
  }
  o.repoll_on_stall = j.value("repoll_on_stall", o.repoll_on_stall);
}

void to_json(nlohmann::json& j, const EnvConfig& c) {
  j = {{"scenario", c.scenario}, {"products", c.products}, {"sim", c.sim}};
}

void from_json(const nlohmann::json& j, EnvConfig& c) {
  try {
    c = {};
    if (j.contains("preset")) c.scenario = preset(j.at("preset").get<std::string>());
    if (j.contains("scenario")) from_json(j.at("scenario"), c.scenario);
    if (j.contains("products")) c.products = j.at("products").get<ProductModel>();
    if (j.contains("sim")) from_json(j.at("sim"), c.sim);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("environment config: ") + e.what());
  }
  c.scenario.validate();
}

}  // namespace colpick
