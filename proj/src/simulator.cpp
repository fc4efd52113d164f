#include "colpick/simulator.hpp"

#include "colpick/errors.hpp"

#include <algorithm>
#include <cstdio>
#include <cmath>
#include <numeric>
#include <ostream>
#include <stdexcept>

namespace colpick {

SimOptions SimOptions::deterministic(std::optional<double> pick_time) {
  SimOptions o;
  o.random_speeds = false;
  o.random_pick_times = false;
  o.disruptions = false;
  o.overtaking = false;
  o.fixed_pick_time = pick_time;
  return o;
}

void ScenarioConfig::validate() const {
  if (n_aisles < 1 || depth < 1) throw ConfigError("scenario: n_aisles and depth must be >= 1");
  if (n_pickers < 1) throw ConfigError("scenario: n_pickers must be >= 1");
  if (n_amrs < 1) throw ConfigError("scenario: n_amrs must be >= 1");
  if (total_picks < 1) throw ConfigError("scenario: total_picks must be >= 1");
  if (pickrun_bounds.min_length < 1 || pickrun_bounds.max_length < pickrun_bounds.min_length) {
    throw ConfigError("scenario: invalid pickrun length bounds");
  }
}

const char* to_string(PickerStatus s) {
  switch (s) {
    case PickerStatus::kMoving: return "moving";
    case PickerStatus::kPicking: return "picking";
    case PickerStatus::kAwaitingAssignment: return "awaiting_assignment";
    case PickerStatus::kWaitingForAmr: return "waiting_for_amr";
    case PickerStatus::kIdle: return "idle";
  }
  return "?";
}

const char* to_string(AmrStatus s) {
  switch (s) {
    case AmrStatus::kMoving: return "moving";
    case AmrStatus::kWaitingForPicker: return "waiting_for_picker";
    case AmrStatus::kLoading: return "loading";
    case AmrStatus::kToBase: return "to_base";
    case AmrStatus::kIdleAtBase: return "idle_at_base";
  }
  return "?";
}

void write_event_log_csv(std::ostream& os, std::span<const EventRecord> events) {
  os << "time,entity,event_type,node\n";
  char buf[64];
  for (const auto& e : events) {
    std::snprintf(buf, sizeof buf, "%.6f", e.time);
    os << buf << ',' << e.entity << ',' << e.type << ',' << e.node << '\n';
  }
}

double population_sd(std::span<const double> values) {
  if (values.empty()) return 0.0;
  const double n = static_cast<double>(values.size());
  const double mean = std::accumulate(values.begin(), values.end(), 0.0) / n;
  double ss = 0.0;
  for (double v : values) ss += (v - mean) * (v - mean);
  return std::sqrt(ss / n);
}

// ---------------------------------------------------------------------------

Simulator::Simulator(std::shared_ptr<const Warehouse> warehouse, EpisodeSetup setup, SimOptions options,
                     std::uint64_t seed, PickerStart start)
    : warehouse_(std::move(warehouse)), options_(std::move(options)), rs_(seed) {
  const auto& lay = layout();
  if (setup.amr_runs.empty() || setup.amr_runs.size() != setup.amr_start.size()) {
    throw ConfigError("simulator: need at least one AMR and one start node per AMR");
  }
  if (setup.picker_start.empty()) throw ConfigError("simulator: need at least one picker");
  if (static_cast<int>(setup.products.size()) != lay.pick_count()) {
    throw ConfigError("simulator: product placement does not match the layout");
  }
  products_ = std::move(setup.products);
  claims_.assign(lay.node_count(), -1);

  const int n_amrs = static_cast<int>(setup.amr_runs.size());
  for (auto& r : setup.amr_runs) runs_.push_back(std::move(r));
  for (auto& r : setup.queued_runs) {
    queue_.push_back(static_cast<int>(runs_.size()));
    runs_.push_back(std::move(r));
  }
  for (const auto& r : runs_) {
    for (const auto& l : r.lines) {
      if (!lay.is_pick(l.node)) throw ConfigError("simulator: pickrun visits a non-pick node");
    }
    total_lines_ += static_cast<int>(r.lines.size());
  }

  amrs_.resize(n_amrs);
  for (int r = 0; r < n_amrs; ++r) {
    AmrState& a = amrs_[r];
    a.id = r;
    a.node = setup.amr_start[r];
    if (!lay.contains(a.node)) throw ConfigError("simulator: AMR start outside the layout");
    a.run = runs_[r].lines.empty() ? -1 : r;
  }
  pickers_.resize(setup.picker_start.size());
  picker_arrival_time_.assign(pickers_.size(), 0.0);
  for (std::size_t k = 0; k < pickers_.size(); ++k) {
    pickers_[k].id = static_cast<int>(k);
    pickers_[k].node = setup.picker_start[k];
    if (!lay.contains(pickers_[k].node)) throw ConfigError("simulator: picker start outside the layout");
  }

  for (int r = 0; r < n_amrs; ++r) {
    if (amrs_[r].run >= 0) log(amr_name(r), "run_start", amrs_[r].node);
    dispatch_amr(r);
  }
  if (start == PickerStart::kRandomAllocation) {
    place_pickers_randomly();
  } else {
    for (std::size_t k = 0; k < pickers_.size(); ++k) request(static_cast<int>(k));
  }
}

void Simulator::place_pickers_randomly() {
  const auto& lay = layout();
  for (auto& p : pickers_) {
    const auto targets = valid_targets(p.id);
    if (targets.empty()) {
      p.node = static_cast<NodeId>(rs_.uniform_int(0, lay.pick_count() - 1));
      p.status = PickerStatus::kIdle;
      log(picker_name(p.id), "idle", p.node);
      continue;
    }
    const NodeId t = targets[rs_.uniform_int(0, static_cast<std::int64_t>(targets.size()) - 1)];
    p.node = t;
    p.destination = t;
    claims_[t] = p.id;
    log(picker_name(p.id), "alloc", t);
    on_picker_arrival(p.id);
  }
}

// ---------------------------------------------------------------------------
// Queries

const PickLine* Simulator::amr_line(int amr, int offset) const {
  const AmrState& a = amrs_[amr];
  if (a.run < 0) return nullptr;
  const auto& lines = runs_[a.run].lines;
  const std::size_t i = a.cursor + static_cast<std::size_t>(offset);
  return i < lines.size() ? &lines[i] : nullptr;
}

std::optional<NodeId> Simulator::amr_destination(int amr, int offset) const {
  const PickLine* l = amr_line(amr, offset);
  if (!l) return std::nullopt;
  return l->node;
}

double Simulator::planned_pick_time(const PickLine& line) const {
  return options_.fixed_pick_time ? *options_.fixed_pick_time : line.expected_time;
}

std::vector<NodeId> Simulator::candidate_nodes(bool current_only) const {
  std::vector<char> mark(layout().node_count(), 0);
  for (const auto& a : amrs_) {
    if (a.run < 0) continue;
    const auto& lines = runs_[a.run].lines;
    std::size_t end = a.cursor + 1;
    if (!current_only) {
      end = options_.rule == AllocationRule::kAmrDestinations ? a.cursor + 2 : lines.size();
    }
    for (std::size_t i = a.cursor; i < std::min(end, lines.size()); ++i) mark[lines[i].node] = 1;
  }
  if (!current_only && options_.rule == AllocationRule::kAnyPendingItem) {
    for (int r : run_queue()) {
      for (const auto& l : runs_[r].lines) mark[l.node] = 1;
    }
  }
  std::vector<NodeId> out;
  for (NodeId v = 0; v < static_cast<NodeId>(mark.size()); ++v) {
    if (mark[v]) out.push_back(v);
  }
  return out;
}

std::vector<NodeId> Simulator::valid_targets(int picker) const {
  auto nodes = candidate_nodes(pickers_.at(picker).restricted);
  std::erase_if(nodes, [&](NodeId v) { return claims_[v] != -1 && claims_[v] != picker; });
  return nodes;
}

bool Simulator::is_valid_target(int picker, NodeId target) const {
  const auto t = valid_targets(picker);
  return std::binary_search(t.begin(), t.end(), target);
}

EpisodeMetrics Simulator::metrics() const {
  EpisodeMetrics m;
  m.completion_time = last_pick_time_;
  for (const auto& p : pickers_) m.workloads.push_back(p.workload);
  m.workload_sd = population_sd(m.workloads);
  m.picks = loaded_lines_;
  return m;
}

// ---------------------------------------------------------------------------
// Driver

Advance Simulator::advance_to_next_request() {
  if (requesting_ >= 0) throw std::logic_error("advance_to_next_request: pending allocation not applied");
  while (true) {
    if (done()) return {true, -1, clock_};
    while (!pending_.empty()) {
      const int k = pending_.front();
      pending_.pop_front();
      PickerState& p = pickers_[k];
      if (p.status != PickerStatus::kAwaitingAssignment) continue;
      if (!valid_targets(k).empty()) {
        requesting_ = k;
        return {false, k, clock_};
      }
      p.status = PickerStatus::kIdle;
      p.restricted = false;
      log(picker_name(k), "idle", p.node);
    }
    if (events_.empty()) {
      if (!recover_stall()) {
        throw SimulationIntegrityError("simulation stalled at t=" + std::to_string(clock_) + " with " +
                                       std::to_string(total_lines_ - loaded_lines_) + " order lines left");
      }
      continue;
    }
    const Event e = events_.top();
    events_.pop();
    clock_ = e.time;
    process(e);
  }
}

void Simulator::apply_allocation(int picker, NodeId target) {
  if (picker != requesting_) {
    throw InvalidActionError("apply_allocation: picker " + std::to_string(picker) + " is not requesting");
  }
  if (!layout().contains(target) || !is_valid_target(picker, target)) {
    throw InvalidActionError("apply_allocation: node " + std::to_string(target) + " is not a valid target for picker " +
                             std::to_string(picker));
  }
  requesting_ = -1;
  PickerState& p = pickers_[picker];
  p.destination = target;
  p.restricted = false;
  claims_[target] = picker;
  log(picker_name(picker), "alloc", target);
  if (p.node == target) {
    on_picker_arrival(picker);
    return;
  }
  p.status = PickerStatus::kMoving;
  p.speed = draw_speed(MoveMode::kPicker);
  p.trip = make_trip(MoveMode::kPicker, p.node, target, p.speed);
  schedule_picker_step(picker);
}

void Simulator::decline_allocation(int picker) {
  if (picker != requesting_) throw InvalidActionError("decline_allocation: picker is not requesting");
  requesting_ = -1;
  pickers_[picker].status = PickerStatus::kIdle;
  pickers_[picker].restricted = false;
  log(picker_name(picker), "idle", pickers_[picker].node);
}

void Simulator::schedule(double time, EventKind kind, int entity) { events_.push({time, seq_++, kind, entity}); }

void Simulator::process(const Event& e) {
  switch (e.kind) {
    case EventKind::kPickerStep: on_picker_step(e.entity); break;
    case EventKind::kAmrStep: on_amr_step(e.entity); break;
    case EventKind::kPickDone: on_pick_done(e.entity); break;
  }
}

double Simulator::arc_length(MoveMode mode, NodeId u, NodeId v) const {
  for (const Arc& a : layout().out_arcs(u, mode)) {
    if (a.to == v) return a.length;
  }
  throw std::logic_error("arc_length: no arc");
}

Trip Simulator::make_trip(MoveMode mode, NodeId from, NodeId to, double speed) const {
  Trip t;
  t.path = warehouse_->path(mode, from, to);
  t.cumulative.assign(t.path.size(), 0.0);
  for (std::size_t i = 1; i < t.path.size(); ++i) {
    t.cumulative[i] = t.cumulative[i - 1] + arc_length(mode, t.path[i - 1], t.path[i]);
  }
  t.start = clock_;
  t.speed = speed;
  return t;
}

double Simulator::draw_speed(MoveMode mode) {
  const auto& n = options_.noise;
  if (mode == MoveMode::kPicker) return options_.random_speeds ? sample_picker_speed(rs_, n) : n.picker_speed.mean;
  return options_.random_speeds ? sample_amr_speed(rs_, n) : n.amr_speed.mean;
}

// ---------------------------------------------------------------------------
// AMR process

void Simulator::dispatch_amr(int r) {
  AmrState& a = amrs_[r];
  if (const PickLine* line = amr_line(r)) {
    if (a.node == line->node) {
      on_amr_arrival(r);
      return;
    }
    a.status = AmrStatus::kMoving;
    a.speed = draw_speed(MoveMode::kAmr);
    a.trip = make_trip(MoveMode::kAmr, a.node, line->node, a.speed);
    schedule_amr_step(r);
    return;
  }
  if (a.run >= 0) {
    log(amr_name(r), "run_end", a.node);
    a.run = -1;
    a.cursor = 0;
  }
  const NodeId base = layout().base_node();
  if (a.node == base) {
    on_amr_at_base(r);
    return;
  }
  a.status = AmrStatus::kToBase;
  a.speed = draw_speed(MoveMode::kAmr);
  a.trip = make_trip(MoveMode::kAmr, a.node, base, a.speed);
  schedule_amr_step(r);
}

void Simulator::schedule_amr_step(int r) {
  AmrState& a = amrs_[r];
  Trip& t = a.trip;
  const NodeId next = t.next();
  if (options_.overtaking && layout().is_pick(next) && next != t.path.back()) {
    for (const auto& other : amrs_) {
      if (other.id == r || other.node != next) continue;
      if (other.status == AmrStatus::kWaitingForPicker || other.status == AmrStatus::kLoading) {
        t.delay += sample_overtake_delay(rs_, options_.noise);
        log(amr_name(r), "overtake", next);
      }
    }
  }
  schedule(t.start + t.delay + t.cumulative[t.index + 1] / t.speed, EventKind::kAmrStep, r);
}

void Simulator::on_amr_step(int r) {
  AmrState& a = amrs_[r];
  ++a.trip.index;
  a.node = a.trip.path[a.trip.index];
  if (a.trip.active()) {
    schedule_amr_step(r);
  } else if (a.status == AmrStatus::kToBase) {
    on_amr_at_base(r);
  } else {
    on_amr_arrival(r);
  }
}

void Simulator::on_amr_arrival(int r) {
  AmrState& a = amrs_[r];
  a.status = AmrStatus::kWaitingForPicker;
  a.waiting_since = clock_;
  log(amr_name(r), "arrive", a.node);
  const int k = claims_[a.node];
  if (k >= 0 && pickers_[k].status == PickerStatus::kWaitingForAmr && pickers_[k].node == a.node) {
    start_pick(k, r);
  }
}

void Simulator::on_amr_at_base(int r) {
  AmrState& a = amrs_[r];
  a.status = AmrStatus::kIdleAtBase;
  log(amr_name(r), "base", a.node);
  if (queue_head_ < queue_.size()) start_next_run(r);
}

void Simulator::start_next_run(int r) {
  AmrState& a = amrs_[r];
  a.run = queue_[queue_head_++];
  a.cursor = 0;
  log(amr_name(r), "run_start", a.node);
  dispatch_amr(r);
  wake_idle_pickers();
}

// ---------------------------------------------------------------------------
// Picker process

void Simulator::schedule_picker_step(int k) {
  const Trip& t = pickers_[k].trip;
  schedule(t.start + t.cumulative[t.index + 1] / t.speed, EventKind::kPickerStep, k);
}

void Simulator::on_picker_step(int k) {
  PickerState& p = pickers_[k];
  ++p.trip.index;
  p.node = p.trip.path[p.trip.index];
  if (p.trip.active()) {
    schedule_picker_step(k);
  } else {
    on_picker_arrival(k);
  }
}

int Simulator::waiting_amr_at(NodeId node) const {
  int best = -1;
  for (const auto& a : amrs_) {
    if (a.node != node || a.status != AmrStatus::kWaitingForPicker) continue;
    const PickLine* l = amr_line(a.id);
    if (!l || l->node != node) continue;
    if (best < 0 || a.waiting_since < amrs_[best].waiting_since) best = a.id;
  }
  return best;
}

void Simulator::on_picker_arrival(int k) {
  PickerState& p = pickers_[k];
  p.status = PickerStatus::kWaitingForAmr;
  picker_arrival_time_[k] = clock_;
  log(picker_name(k), "arrive", p.node);
  const int r = waiting_amr_at(p.node);
  if (r >= 0) start_pick(k, r);
}

void Simulator::start_pick(int k, int r) {
  PickerState& p = pickers_[k];
  AmrState& a = amrs_[r];
  const PickLine& line = *amr_line(r);
  const double planned = planned_pick_time(line);
  double duration = options_.random_pick_times ? sample_pick_time(rs_, planned, options_.noise) : planned;
  if (options_.disruptions) {
    if (auto d = sample_disruption(rs_, options_.noise)) {
      duration += *d;
      log(picker_name(k), "disruption", p.node);
    }
  }
  p.status = PickerStatus::kPicking;
  p.serving_amr = r;
  p.pick_start = clock_;
  a.status = AmrStatus::kLoading;
  log(picker_name(k), "pick_start", p.node);
  schedule(clock_ + duration, EventKind::kPickDone, k);
}

void Simulator::on_pick_done(int k) {
  PickerState& p = pickers_[k];
  const int r = p.serving_amr;
  AmrState& a = amrs_[r];
  const PickLine& line = *amr_line(r);

  p.workload += line.mass;
  ++p.picks;
  ++loaded_lines_;
  last_pick_time_ = clock_;
  pick_log_.push_back({k, r, a.run, static_cast<int>(a.cursor), line.node, picker_arrival_time_[k],
                       a.waiting_since, p.pick_start, clock_, line.mass});
  log(picker_name(k), "pick_end", p.node);

  p.serving_amr = -1;
  ++a.cursor;
  dispatch_amr(r);
  if (done()) {
    p.status = PickerStatus::kIdle;
    return;
  }

  const int next = waiting_amr_at(p.node);
  if (next >= 0) {
    start_pick(k, next);
  } else {
    if (claims_[p.node] == k) claims_[p.node] = -1;
    p.destination.reset();
    request(k);
  }
  wake_idle_pickers();
}

void Simulator::request(int k, bool front) {
  pickers_[k].status = PickerStatus::kAwaitingAssignment;
  if (front) {
    pending_.push_front(k);
  } else {
    pending_.push_back(k);
  }
}

void Simulator::wake_idle_pickers() {
  for (int k = static_cast<int>(pickers_.size()) - 1; k >= 0; --k) {
    if (pickers_[k].status == PickerStatus::kIdle) request(k, true);
  }
}

bool Simulator::recover_stall() {
  if (!options_.repoll_on_stall) return false;
  bool any = false;
  for (auto& p : pickers_) {
    if (p.status != PickerStatus::kWaitingForAmr && p.status != PickerStatus::kIdle) continue;
    if (p.destination && claims_[*p.destination] == p.id) claims_[*p.destination] = -1;
    p.destination.reset();
    p.restricted = true;
    log(picker_name(p.id), "repoll", p.node);
    request(p.id);
    any = true;
  }
  return any;
}

// ---------------------------------------------------------------------------

void Simulator::log(const std::string& entity, const char* type, NodeId node) {
  if (options_.record_events) event_log_.push_back({clock_, entity, type, node});
}

std::string Simulator::picker_name(int id) { return "picker:" + std::to_string(id); }
std::string Simulator::amr_name(int id) { return "amr:" + std::to_string(id); }

// ---------------------------------------------------------------------------

EpisodeSetup generate_episode(const Warehouse& warehouse, const ScenarioConfig& scenario, const ProductModel& model,
                              RandomStream& rs) {
  scenario.validate();
  const auto& lay = warehouse.layout();
  if (lay.n_aisles() != scenario.n_aisles || lay.depth() != scenario.depth) {
    throw ConfigError("generate_episode: warehouse does not match scenario dimensions");
  }
  EpisodeSetup s;
  s.products = generate_product_placement(rs, lay, model).products;
  auto runs = generate_pickruns(rs, lay, s.products, model, scenario.total_picks, scenario.pickrun_bounds,
                                scenario.budget);

  s.amr_runs.resize(scenario.n_amrs);
  s.amr_start.assign(scenario.n_amrs, lay.base_node());
  for (int r = 0; r < scenario.n_amrs && r < static_cast<int>(runs.size()); ++r) {
    Pickrun run = std::move(runs[r]);
    if (scenario.diverse_start) {
      const auto cut = rs.uniform_int(0, static_cast<std::int64_t>(run.lines.size()) - 1);
      if (cut > 0) {
        s.amr_start[r] = run.lines[cut - 1].node;
        run.lines.erase(run.lines.begin(), run.lines.begin() + cut);
      }
    }
    s.amr_runs[r] = std::move(run);
  }
  for (std::size_t i = scenario.n_amrs; i < runs.size(); ++i) s.queued_runs.push_back(std::move(runs[i]));
  for (int k = 0; k < scenario.n_pickers; ++k) {
    s.picker_start.push_back(static_cast<NodeId>(rs.uniform_int(0, lay.pick_count() - 1)));
  }
  return s;
}

Simulator init_episode(std::shared_ptr<const Warehouse> warehouse, const ScenarioConfig& scenario,
                       const ProductModel& model, const SimOptions& options, std::uint64_t seed) {
  RandomStream gen(derive_seed(seed, {1}));
  EpisodeSetup setup = generate_episode(*warehouse, scenario, model, gen);
  return Simulator(std::move(warehouse), std::move(setup), options, derive_seed(seed, {2}),
                   PickerStart::kRandomAllocation);
}

}  // namespace colpick
