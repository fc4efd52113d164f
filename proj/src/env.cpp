#include "colpick/env.hpp"

#include "colpick/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace colpick {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

const std::array<FeatureInfo, kNodeFeatures> kManifest{{
    {"picker_at_node", "current picker", "1 if the requesting picker is at the node"},
    {"picker_distance", "current picker", "picker-mode distance from the requesting picker"},
    {"amr_at_node", "amr", "1 if any AMR is at the node"},
    {"amrs_going", "amr", "AMRs travelling towards the node as current destination"},
    {"destination_distance", "amr", "min AMR-mode distance of AMRs travelling to the node, -10 if none"},
    {"expected_time_next", "amr", "min expected time until an AMR reaches the node as next destination, -10 if none"},
    {"expected_time_two_step", "amr", "same for the destination after next, -10 if none"},
    {"amrs_heading_to_aisle", "amr", "AMRs whose current destination lies in the node's aisle"},
    {"amrs_waiting_in_aisle", "amr", "AMRs waiting in the node's aisle"},
    {"other_picker_at_node", "other pickers", "1 if another picker is at the node"},
    {"picker_destination_distance", "other pickers", "min distance of pickers heading to the node, -10 if none"},
    {"pickers_heading_to_aisle", "other pickers", "other pickers whose destination lies in the node's aisle"},
    {"other_picker_distance", "other pickers", "min over other pickers of distance to destination plus on to the node"},
    {"other_picker_time", "other pickers", "same as expected time, including the pick at the destination"},
    {"aisle_position", "region", "aisle index over the number of aisles"},
    {"depth_position", "region", "depth along AMR travel over the aisle depth"},
    {"next_destination_distance_1", "neighborhood", "closest next destination of AMRs heading here, 0 if none"},
    {"next_destination_distance_2", "neighborhood", "second closest next destination, 0 if none"},
    {"two_step_distance_1", "neighborhood", "closest destination after next of AMRs heading here, 0 if none"},
    {"two_step_distance_2", "neighborhood", "second closest destination after next, 0 if none"},
    {"picker_destination_proximity", "neighborhood", "min distance to another node that is a picker destination, 0 if none"},
    {"unserved_amr_distance_1", "neighborhood", "closest other AMR destination without a picker, 0 if none"},
    {"unserved_amr_distance_2", "neighborhood", "second closest such destination, 0 if none"},
    {"current_picker_workload", "node workload", "workload of a picker at the node minus the mean workload"},
    {"next_picker_workload", "node workload", "workload of the picker heading to the node minus the mean"},
    {"item_weight", "node workload", "kg per item stored at the node"},
    {"waiting_amr_mass", "node workload", "mass to load on AMRs waiting at the node"},
    {"destination_amr_mass", "node workload", "mass to load on AMRs travelling to the node"},
    {"closest_picker_workload_1", "node workload", "workload minus mean of the picker expected first at the node"},
    {"closest_picker_workload_2", "node workload", "same for the second picker"},
    {"requesting_picker_workload", "distribution", "requesting picker workload minus the mean"},
    {"workload_min", "distribution", "minimum workload minus the mean"},
    {"workload_p25", "distribution", "25th percentile workload minus the mean"},
    {"workload_p75", "distribution", "75th percentile workload minus the mean"},
    {"workload_max", "distribution", "maximum workload minus the mean"},
}};

// Linear interpolation between order statistics.
double percentile(std::vector<double> v, double q) {
  std::sort(v.begin(), v.end());
  const double pos = q * static_cast<double>(v.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, v.size() - 1);
  return v[lo] + (pos - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

void keep_two_smallest(double x, double& a, double& b) {
  if (x < a) {
    b = a;
    a = x;
  } else if (x < b) {
    b = x;
  }
}

double or_value(double x, double fallback) { return std::isfinite(x) ? x : fallback; }

}  // namespace

const std::array<FeatureInfo, kNodeFeatures>& feature_manifest() { return kManifest; }

nlohmann::json feature_manifest_json() {
  nlohmann::json j = nlohmann::json::array();
  for (int i = 0; i < kNodeFeatures; ++i) {
    j.push_back({{"index", i},
                 {"name", kManifest[i].name},
                 {"block", i < kEfficiencyFeatures ? "efficiency" : "fairness"},
                 {"group", kManifest[i].group},
                 {"description", kManifest[i].description}});
  }
  return j;
}

std::uint64_t feature_manifest_hash() {
  std::uint64_t h = 1469598103934665603ULL;
  for (const auto& f : kManifest) {
    for (const char* c = f.name; *c; ++c) h = (h ^ static_cast<unsigned char>(*c)) * 1099511628211ULL;
    h = (h ^ 0x2c) * 1099511628211ULL;
  }
  return h;
}

ActionMask valid_actions(const Simulator& sim, int picker) {
  ActionMask m(sim.layout().pick_count(), 0);
  for (NodeId v : sim.valid_targets(picker)) {
    if (sim.layout().is_pick(v)) m[v] = 1;
  }
  return m;
}

FeatureTensor observe(const Simulator& sim, int picker) {
  const auto& lay = sim.layout();
  const auto& wh = sim.warehouse();
  const auto& dp = wh.distances(MoveMode::kPicker).dist;
  const auto& da = wh.distances(MoveMode::kAmr).dist;
  const double vp = sim.options().noise.picker_speed.mean;
  const double va = sim.options().noise.amr_speed.mean;
  const int P = lay.pick_count();
  const double now = sim.clock();
  const auto& pickers = sim.pickers();
  const auto& amrs = sim.amrs();
  const PickerState& me = pickers.at(picker);

  FeatureTensor f = FeatureTensor::Zero(kNodeFeatures, P);

  // Remaining pick time of the load in progress at an AMR, if any.
  std::vector<double> loading_left(amrs.size(), -1.0);
  for (const auto& p : pickers) {
    if (p.status == PickerStatus::kPicking && p.serving_amr >= 0) {
      const PickLine* l = sim.amr_line(p.serving_amr);
      loading_left[p.serving_amr] = std::max(0.0, p.pick_start + sim.planned_pick_time(*l) - now);
    }
  }

  // AMR aggregates.
  std::vector<double> dest_dist(P, kInf), t_next(P, kInf), t_two(P, kInf);
  std::vector<double> nd1(P, kInf), nd2(P, kInf), td1(P, kInf), td2(P, kInf);
  std::vector<double> waiting_mass(P, 0.0), incoming_mass(P, 0.0);
  std::vector<int> amr_at(P, 0), going(P, 0);
  std::vector<int> aisle_dest(lay.n_aisles(), 0), aisle_waiting(lay.n_aisles(), 0);
  std::vector<double> planned_at(P, -1.0);  // expected pick time of the first line due at a node
  std::vector<NodeId> unserved;
  for (const auto& a : amrs) {
    if (lay.is_pick(a.node)) amr_at[a.node] = 1;
    if (a.status == AmrStatus::kWaitingForPicker && lay.is_pick(a.node)) ++aisle_waiting[lay.aisle_of(a.node)];
    const PickLine* cur = sim.amr_line(a.id, 0);
    if (!cur) continue;
    const NodeId c = cur->node;
    const bool there = a.node == c;
    ++aisle_dest[lay.aisle_of(c)];
    if (planned_at[c] < 0) planned_at[c] = sim.planned_pick_time(*cur);
    if (there) {
      waiting_mass[c] += cur->mass;
    } else {
      ++going[c];
      dest_dist[c] = std::min(dest_dist[c], da(a.node, c));
      incoming_mass[c] += cur->mass;
    }
    if (sim.claimant(c) < 0) unserved.push_back(c);

    double t = there ? 0.0 : da(a.node, c) / va;
    t += loading_left[a.id] >= 0 ? loading_left[a.id] : sim.planned_pick_time(*cur);
    const PickLine* nxt = sim.amr_line(a.id, 1);
    if (!nxt) continue;
    if (planned_at[nxt->node] < 0) planned_at[nxt->node] = sim.planned_pick_time(*nxt);
    const double leg1 = da(c, nxt->node);
    t += leg1 / va;
    t_next[nxt->node] = std::min(t_next[nxt->node], t);
    keep_two_smallest(leg1, nd1[c], nd2[c]);
    const PickLine* two = sim.amr_line(a.id, 2);
    if (!two) continue;
    const double leg2 = da(nxt->node, two->node);
    t += sim.planned_pick_time(*nxt) + leg2 / va;
    t_two[two->node] = std::min(t_two[two->node], t);
    keep_two_smallest(leg1 + leg2, td1[c], td2[c]);
  }
  std::sort(unserved.begin(), unserved.end());
  unserved.erase(std::unique(unserved.begin(), unserved.end()), unserved.end());

  // Picker aggregates.
  double mean_w = 0.0;
  std::vector<double> w;
  for (const auto& p : pickers) w.push_back(p.workload);
  mean_w = std::accumulate(w.begin(), w.end(), 0.0) / static_cast<double>(w.size());

  std::vector<int> other_at(P, 0), aisle_pickers(lay.n_aisles(), 0);
  std::vector<double> picker_dest_dist(P, kInf);
  std::vector<double> at_workload_sum(P, 0.0);
  std::vector<int> at_count(P, 0);
  std::vector<double> next_workload(P, 0.0);
  std::vector<NodeId> picker_dests;
  struct Other {
    NodeId anchor;
    double dist;
    double time;
    double workload;
  };
  std::vector<Other> others;
  for (const auto& p : pickers) {
    if (lay.is_pick(p.node)) {
      at_workload_sum[p.node] += p.workload - mean_w;
      ++at_count[p.node];
    }
    if (p.destination) picker_dests.push_back(*p.destination);
    if (p.id == picker) continue;
    if (lay.is_pick(p.node)) other_at[p.node] = 1;
    const NodeId anchor = p.destination ? *p.destination : p.node;
    double pick_left = 0.0;
    if (p.destination) {
      const NodeId d = *p.destination;
      if (lay.is_pick(d)) {
        ++aisle_pickers[lay.aisle_of(d)];
        picker_dest_dist[d] = std::min(picker_dest_dist[d], dp(p.node, d));
        next_workload[d] = p.workload - mean_w;
      }
      if (p.status == PickerStatus::kPicking && p.serving_amr >= 0) {
        pick_left = loading_left[p.serving_amr];
      } else if (lay.is_pick(d)) {
        pick_left = planned_at[d] >= 0 ? planned_at[d] : expected_pick_time(sim.products()[d], 1);
      }
    }
    const double to_anchor = dp(p.node, anchor);
    others.push_back({anchor, to_anchor, to_anchor / vp + pick_left, p.workload});
  }

  const double w_min = *std::min_element(w.begin(), w.end()) - mean_w;
  const double w_max = *std::max_element(w.begin(), w.end()) - mean_w;
  const double w_p25 = percentile(w, 0.25) - mean_w;
  const double w_p75 = percentile(w, 0.75) - mean_w;
  const double w_me = me.workload - mean_w;

  for (NodeId v = 0; v < P; ++v) {
    const int aisle = lay.aisle_of(v);
    auto col = f.col(v);
    col(0) = me.node == v ? 1.0 : 0.0;
    col(1) = dp(me.node, v);
    col(2) = amr_at[v];
    col(3) = going[v];
    col(4) = or_value(dest_dist[v], kNoneSentinel);
    col(5) = or_value(t_next[v], kNoneSentinel);
    col(6) = or_value(t_two[v], kNoneSentinel);
    col(7) = aisle_dest[aisle];
    col(8) = aisle_waiting[aisle];
    col(9) = other_at[v];
    col(10) = or_value(picker_dest_dist[v], kNoneSentinel);
    col(11) = aisle_pickers[aisle];

    double od = kInf, ot = kInf;
    double c1 = kInf, c2 = kInf, w1 = 0.0, w2 = 0.0;
    for (const auto& o : others) {
      const double leg = dp(o.anchor, v);
      od = std::min(od, o.dist + leg);
      const double t = o.time + leg / vp;
      ot = std::min(ot, t);
      if (t < c1) {
        c2 = c1;
        w2 = w1;
        c1 = t;
        w1 = o.workload - mean_w;
      } else if (t < c2) {
        c2 = t;
        w2 = o.workload - mean_w;
      }
    }
    col(12) = or_value(od, 0.0);
    col(13) = or_value(ot, 0.0);
    col(14) = static_cast<double>(aisle) / lay.n_aisles();
    col(15) = static_cast<double>(lay.depth_along_travel(v)) / lay.depth();
    col(16) = or_value(nd1[v], 0.0);
    col(17) = or_value(nd2[v], 0.0);
    col(18) = or_value(td1[v], 0.0);
    col(19) = or_value(td2[v], 0.0);

    double pd = kInf;
    for (NodeId d : picker_dests) {
      if (d != v) pd = std::min(pd, dp(v, d));
    }
    col(20) = or_value(pd, 0.0);
    double u1 = kInf, u2 = kInf;
    for (NodeId u : unserved) {
      if (u != v) keep_two_smallest(dp(v, u), u1, u2);
    }
    col(21) = or_value(u1, 0.0);
    col(22) = or_value(u2, 0.0);

    col(23) = at_count[v] ? at_workload_sum[v] / at_count[v] : 0.0;
    col(24) = next_workload[v];
    col(25) = sim.products()[v].weight;
    col(26) = waiting_mass[v];
    col(27) = incoming_mass[v];
    col(28) = w1;
    col(29) = w2;
    col(30) = w_me;
    col(31) = w_min;
    col(32) = w_p25;
    col(33) = w_p75;
    col(34) = w_max;
  }
  return f;
}

RewardVector normalize_rewards(const RewardVector& r, const RewardVector& scales) {
  if (!(scales.efficiency > 0.0) || !(scales.fairness > 0.0)) {
    throw ConfigError("normalize_rewards: scales must be positive");
  }
  return {r.efficiency / scales.efficiency, r.fairness / scales.fairness};
}

// ---------------------------------------------------------------------------

PickingEnv::PickingEnv(EnvConfig config, std::shared_ptr<const Warehouse> warehouse)
    : config_(std::move(config)), warehouse_(std::move(warehouse)) {
  config_.scenario.validate();
  if (!warehouse_) warehouse_ = Warehouse::make(config_.scenario.n_aisles, config_.scenario.depth);
}

bool PickingEnv::reset(std::uint64_t seed) {
  sim_ = std::make_unique<Simulator>(init_episode(warehouse_, config_.scenario, config_.products, config_.sim, seed));
  last_time_ = 0.0;
  last_sd_ = 0.0;
  advance();
  return !done_;
}

void PickingEnv::advance() {
  const Advance adv = sim_->advance_to_next_request();
  done_ = adv.done;
  obs_.picker = adv.picker;
  obs_.time = adv.time;
  if (done_) {
    obs_.mask.clear();
    obs_.features.resize(0, 0);
    return;
  }
  obs_.mask = valid_actions(*sim_, adv.picker);
  if (compute_features_) obs_.features = observe(*sim_, adv.picker);
}

StepResult PickingEnv::step(NodeId action) {
  if (done_) throw std::logic_error("PickingEnv::step on a finished episode");
  if (action < 0 || action >= static_cast<NodeId>(obs_.mask.size()) || !obs_.mask[action]) {
    throw InvalidActionError("PickingEnv::step: node " + std::to_string(action) + " is masked out");
  }
  sim_->apply_allocation(obs_.picker, action);
  advance();
  StepResult r;
  const EpisodeMetrics m = sim_->metrics();
  const double t = done_ ? m.completion_time : sim_->clock();
  r.reward.efficiency = last_time_ - t;
  r.reward.fairness = last_sd_ - m.workload_sd;
  last_time_ = t;
  last_sd_ = m.workload_sd;
  r.done = done_;
  return r;
}

}  // namespace colpick
