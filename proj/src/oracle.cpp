#include "colpick/oracle.hpp"

#include "colpick/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <set>

namespace colpick {

namespace {

constexpr double kTol = 1e-9;

std::shared_ptr<const Warehouse> instance_warehouse(const DeterministicInstance& inst) {
  return Warehouse::make(inst.n_aisles, inst.depth);
}

// Smallest achievable sd when `remaining` mass may be split freely (water filling).
double sd_lower_bound(std::vector<double> w, double remaining) {
  std::sort(w.begin(), w.end());
  const std::size_t n = w.size();
  std::size_t m = 1;
  double level = w[0];
  double left = remaining;
  while (left > 0.0) {
    const double next = m < n ? w[m] : std::numeric_limits<double>::infinity();
    const double need = (next - level) * static_cast<double>(m);
    if (need >= left) {
      level += left / static_cast<double>(m);
      left = 0.0;
    } else {
      left -= need;
      level = next;
      ++m;
    }
  }
  for (std::size_t i = 0; i < n; ++i) w[i] = std::max(w[i], level);
  return population_sd(w);
}

}  // namespace

void DeterministicInstance::validate() const {
  if (n_aisles < 1 || depth < 1) throw ConfigError("instance " + id + ": invalid layout dimensions");
  if (picker_start.empty()) throw ConfigError("instance " + id + ": no pickers");
  if (amr_items.empty() || amr_items.size() != amr_start.size()) {
    throw ConfigError("instance " + id + ": AMR sequences and start nodes do not match");
  }
  if (!(picker_speed > 0.0) || !(amr_speed > 0.0)) throw ConfigError("instance " + id + ": speeds must be positive");
  const int pick_count = n_aisles * depth * 2;
  const int node_count = pick_count + 2 * n_aisles;
  std::vector<int> seen(items.size(), 0);
  for (const auto& seq : amr_items) {
    for (int i : seq) {
      if (i < 0 || i >= n_items()) throw ConfigError("instance " + id + ": item id out of range");
      ++seen[i];
    }
  }
  for (int c : seen) {
    if (c != 1) throw ConfigError("instance " + id + ": every item must be on exactly one AMR");
  }
  for (const auto& it : items) {
    if (it.node < 0 || it.node >= pick_count) throw ConfigError("instance " + id + ": item node is not a pick node");
    if (it.workload < 0.0 || !(it.load_time > 0.0)) throw ConfigError("instance " + id + ": invalid item data");
  }
  for (NodeId v : amr_start) {
    if (v < 0 || v >= node_count) throw ConfigError("instance " + id + ": AMR start outside the layout");
  }
  for (NodeId v : picker_start) {
    if (v < 0 || v >= node_count) throw ConfigError("instance " + id + ": picker start outside the layout");
  }
}

void to_json(nlohmann::json& j, const DeterministicInstance& inst) {
  nlohmann::json amrs = nlohmann::json::array();
  for (int r = 0; r < inst.n_amrs(); ++r) {
    nlohmann::json seq = nlohmann::json::array();
    for (int i : inst.amr_items[r]) {
      const auto& it = inst.items[i];
      seq.push_back({{"node", it.node}, {"workload", it.workload}, {"load_time", it.load_time}});
    }
    amrs.push_back({{"start", inst.amr_start[r]}, {"items", seq}});
  }
  j = {{"id", inst.id},
       {"n_aisles", inst.n_aisles},
       {"depth", inst.depth},
       {"picker_speed", inst.picker_speed},
       {"amr_speed", inst.amr_speed},
       {"picker_starts", inst.picker_start},
       {"amrs", amrs}};
}

void from_json(const nlohmann::json& j, DeterministicInstance& inst) {
  try {
    inst = {};
    inst.id = j.value("id", std::string{});
    inst.n_aisles = j.at("n_aisles").get<int>();
    inst.depth = j.at("depth").get<int>();
    inst.picker_speed = j.value("picker_speed", 1.25);
    inst.amr_speed = j.value("amr_speed", 1.5);
    inst.picker_start = j.at("picker_starts").get<std::vector<NodeId>>();
    for (const auto& a : j.at("amrs")) {
      inst.amr_start.push_back(a.at("start").get<NodeId>());
      std::vector<int> seq;
      for (const auto& it : a.at("items")) {
        seq.push_back(inst.n_items());
        inst.items.push_back({it.at("node").get<NodeId>(), it.at("workload").get<double>(), it.value("load_time", 7.5)});
      }
      inst.amr_items.push_back(std::move(seq));
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("instance json: ") + e.what());
  }
  inst.validate();
}

InstanceTimes::InstanceTimes(const DeterministicInstance& inst, const Warehouse& wh) {
  const int n = inst.n_items();
  const auto& dp = wh.distances(MoveMode::kPicker);
  const auto& da = wh.distances(MoveMode::kAmr);
  picker_start_.resize(inst.n_pickers(), n);
  amr_start_.resize(inst.n_amrs(), n);
  picker_.resize(n, n);
  amr_.resize(n, n);
  for (int i = 0; i < n; ++i) {
    const NodeId v = inst.items[i].node;
    for (int k = 0; k < inst.n_pickers(); ++k) picker_start_(k, i) = dp(inst.picker_start[k], v) / inst.picker_speed;
    for (int r = 0; r < inst.n_amrs(); ++r) amr_start_(r, i) = da(inst.amr_start[r], v) / inst.amr_speed;
    for (int j = 0; j < n; ++j) {
      picker_(i, j) = dp(v, inst.items[j].node) / inst.picker_speed;
      amr_(i, j) = da(v, inst.items[j].node) / inst.amr_speed;
    }
  }
}

Schedule evaluate_schedule(const DeterministicInstance& inst, const Decisions& d) {
  inst.validate();
  const int n = inst.n_items();
  const int K = inst.n_pickers();
  if (static_cast<int>(d.assignment.size()) != n || static_cast<int>(d.orders.size()) != K) {
    throw ConfigError("evaluate_schedule: decisions do not match the instance");
  }
  std::vector<int> amr_of(n), amr_prev(n, -1), picker_prev(n, -1), count(n, 0);
  for (int r = 0; r < inst.n_amrs(); ++r) {
    for (std::size_t j = 0; j < inst.amr_items[r].size(); ++j) {
      const int i = inst.amr_items[r][j];
      amr_of[i] = r;
      if (j > 0) amr_prev[i] = inst.amr_items[r][j - 1];
    }
  }
  for (int k = 0; k < K; ++k) {
    for (std::size_t j = 0; j < d.orders[k].size(); ++j) {
      const int i = d.orders[k][j];
      if (i < 0 || i >= n || d.assignment[i] != k) {
        throw ConfigError("evaluate_schedule: picker order disagrees with the assignment");
      }
      ++count[i];
      if (j > 0) picker_prev[i] = d.orders[k][j - 1];
    }
  }
  for (int c : count) {
    if (c != 1) throw ConfigError("evaluate_schedule: every item needs exactly one position in a picker order");
  }

  // Kahn's algorithm over AMR and picker precedences.
  std::vector<std::vector<int>> succ(n);
  std::vector<int> indeg(n, 0);
  for (int i = 0; i < n; ++i) {
    for (int p : {amr_prev[i], picker_prev[i]}) {
      if (p < 0) continue;
      succ[p].push_back(i);
      ++indeg[i];
    }
  }
  std::vector<int> order;
  for (int i = 0; i < n; ++i) {
    if (indeg[i] == 0) order.push_back(i);
  }
  for (std::size_t h = 0; h < order.size(); ++h) {
    for (int s : succ[order[h]]) {
      if (--indeg[s] == 0) order.push_back(s);
    }
  }
  Schedule s;
  s.workloads.assign(K, 0.0);
  for (int i = 0; i < n; ++i) s.workloads[d.assignment[i]] += inst.items[i].workload;
  s.workload_sd = population_sd(s.workloads);
  if (static_cast<int>(order.size()) < n) return s;

  const auto wh = instance_warehouse(inst);
  const InstanceTimes tt(inst, *wh);
  s.feasible = true;
  s.picker_arrival.assign(n, 0.0);
  s.load_start.assign(n, 0.0);
  s.load_end.assign(n, 0.0);
  s.amr_completion.assign(inst.n_amrs(), 0.0);
  for (int i : order) {
    const int k = d.assignment[i];
    const int r = amr_of[i];
    const int pk = picker_prev[i];
    const int pr = amr_prev[i];
    const double bk = pk < 0 ? tt.picker_start(k, i) : s.load_end[pk] + tt.picker(pk, i);
    const double ar = pr < 0 ? tt.amr_start(r, i) : s.load_end[pr] + tt.amr(pr, i);
    s.picker_arrival[i] = bk;
    s.load_start[i] = std::max(ar, bk);
    s.load_end[i] = s.load_start[i] + inst.items[i].load_time;
    s.amr_completion[r] = std::max(s.amr_completion[r], s.load_end[i]);
  }
  s.completion = *std::max_element(s.amr_completion.begin(), s.amr_completion.end());
  return s;
}

// ---------------------------------------------------------------------------

namespace {

class ExactSearch {
 public:
  ExactSearch(const DeterministicInstance& inst, Objective obj, bool prune)
      : inst_(inst), obj_(obj), prune_(prune), wh_(instance_warehouse(inst)), tt_(inst, *wh_) {
    n_ = inst.n_items();
    K_ = inst.n_pickers();
    R_ = inst.n_amrs();
    amr_of_.resize(n_);
    suffix_.resize(R_);
    for (int r = 0; r < R_; ++r) {
      const auto& seq = inst.amr_items[r];
      suffix_[r].assign(seq.size() + 1, 0.0);
      for (int j = static_cast<int>(seq.size()) - 1; j >= 0; --j) {
        amr_of_[seq[j]] = r;
        const double leg = j + 1 < static_cast<int>(seq.size()) ? tt_.amr(seq[j], seq[j + 1]) : 0.0;
        suffix_[r][j] = suffix_[r][j + 1] + inst.items[seq[j]].load_time + leg;
      }
    }
    total_mass_ = 0.0;
    for (const auto& it : inst.items) total_mass_ += it.workload;
    next_.assign(R_, 0);
    picker_last_.assign(K_, -1);
    assignment_.assign(n_, -1);
    end_.assign(n_, 0.0);
    workloads_.assign(K_, 0.0);
  }

  ExactResult run() {
    dfs(0, -1, 0.0, 0.0);
    ExactResult res;
    res.decisions = best_;
    res.schedule = evaluate_schedule(inst_, best_);
    res.nodes = nodes_;
    res.leaves = leaves_;
    return res;
  }

 private:
  struct Key {
    double a;
    double b;
  };

  Key key(double c, double sd) const {
    switch (obj_.kind) {
      case Objective::Kind::kEfficiency: return {c, sd};
      case Objective::Kind::kFairness: return {sd, c};
      case Objective::Kind::kWeighted: return {obj_.w_efficiency * c + obj_.w_fairness * sd, 0.0};
    }
    return {c, sd};
  }

  static bool better(const Key& x, const Key& y) {
    if (x.a < y.a - kTol) return true;
    if (x.a > y.a + kTol) return false;
    return x.b < y.b - kTol;
  }

  double completion_bound(double c_now) const {
    double lb = c_now;
    for (int r = 0; r < R_; ++r) {
      const auto& seq = inst_.amr_items[r];
      const int j = next_[r];
      if (j >= static_cast<int>(seq.size())) continue;
      const double arrive = j == 0 ? tt_.amr_start(r, seq[0]) : end_[seq[j - 1]] + tt_.amr(seq[j - 1], seq[j]);
      lb = std::max(lb, arrive + suffix_[r][j]);
    }
    return lb;
  }

  void dfs(int placed, int last, double c_now, double mass_placed) {
    ++nodes_;
    if (placed == n_) {
      ++leaves_;
      const Key k = key(c_now, population_sd(workloads_));
      if (!have_best_ || better(k, best_key_)) {
        have_best_ = true;
        best_key_ = k;
        best_.assignment = assignment_;
        best_.orders = orders_from_sequence();
      }
      return;
    }
    if (prune_ && have_best_) {
      const double lb_c = completion_bound(c_now);
      const double lb_sd = sd_lower_bound(workloads_, total_mass_ - mass_placed);
      double lb = 0.0;
      switch (obj_.kind) {
        case Objective::Kind::kEfficiency: lb = lb_c; break;
        case Objective::Kind::kFairness: lb = lb_sd; break;
        case Objective::Kind::kWeighted: lb = obj_.w_efficiency * lb_c + obj_.w_fairness * lb_sd; break;
      }
      if (lb > best_key_.a + kTol) return;
    }
    for (int r = 0; r < R_; ++r) {
      const auto& seq = inst_.amr_items[r];
      if (next_[r] >= static_cast<int>(seq.size())) continue;
      const int i = seq[next_[r]];
      for (int k = 0; k < K_; ++k) {
        // Adjacent independent placements commute; keep one order only.
        if (last >= 0 && assignment_[last] != k && amr_of_[last] != r && i < last) continue;
        const int pk = picker_last_[k];
        const int pr = next_[r] > 0 ? seq[next_[r] - 1] : -1;
        const double bk = pk < 0 ? tt_.picker_start(k, i) : end_[pk] + tt_.picker(pk, i);
        const double ar = pr < 0 ? tt_.amr_start(r, i) : end_[pr] + tt_.amr(pr, i);
        end_[i] = std::max(ar, bk) + inst_.items[i].load_time;
        assignment_[i] = k;
        picker_last_[k] = i;
        ++next_[r];
        workloads_[k] += inst_.items[i].workload;
        sequence_.push_back(i);
        dfs(placed + 1, i, std::max(c_now, end_[i]), mass_placed + inst_.items[i].workload);
        sequence_.pop_back();
        workloads_[k] -= inst_.items[i].workload;
        --next_[r];
        picker_last_[k] = pk;
        assignment_[i] = -1;
      }
    }
  }

  std::vector<std::vector<int>> orders_from_sequence() const {
    std::vector<std::vector<int>> orders(K_);
    for (int i : sequence_) orders[assignment_[i]].push_back(i);
    return orders;
  }

  const DeterministicInstance& inst_;
  Objective obj_;
  bool prune_;
  std::shared_ptr<const Warehouse> wh_;
  InstanceTimes tt_;
  int n_ = 0, K_ = 0, R_ = 0;
  std::vector<int> amr_of_;
  std::vector<std::vector<double>> suffix_;
  double total_mass_ = 0.0;
  std::vector<int> next_, picker_last_, assignment_, sequence_;
  std::vector<double> end_, workloads_;
  bool have_best_ = false;
  Key best_key_{0.0, 0.0};
  Decisions best_;
  std::uint64_t nodes_ = 0, leaves_ = 0;
};

}  // namespace

ExactResult solve_exact(const DeterministicInstance& inst, Objective objective, bool prune) {
  inst.validate();
  if (inst.n_items() > kMaxExactItems || inst.n_pickers() > kMaxExactPickers) {
    throw ConfigError("solve_exact: instance " + inst.id + " exceeds the enumeration bounds (" +
                      std::to_string(kMaxExactItems) + " items, " + std::to_string(kMaxExactPickers) + " pickers)");
  }
  if (inst.n_items() == 0) {
    ExactResult r;
    r.decisions.orders.assign(inst.n_pickers(), {});
    r.schedule = evaluate_schedule(inst, r.decisions);
    return r;
  }
  return ExactSearch(inst, objective, prune).run();
}

// ---------------------------------------------------------------------------

namespace {

struct PreparedSim {
  std::shared_ptr<const Warehouse> wh;
  EpisodeSetup setup;
  SimOptions options;
};

PreparedSim prepare(const DeterministicInstance& inst) {
  inst.validate();
  PreparedSim p;
  p.wh = instance_warehouse(inst);
  const auto& lay = p.wh->layout();
  p.setup.products.resize(lay.pick_count());
  for (int v = 0; v < lay.pick_count(); ++v) p.setup.products[v] = {v, 1.0, 1.0, 0};
  for (int r = 0; r < inst.n_amrs(); ++r) {
    Pickrun run;
    for (int i : inst.amr_items[r]) {
      const auto& it = inst.items[i];
      run.lines.push_back({it.node, 1, it.workload, it.load_time});
      p.setup.products[it.node].weight = std::max(it.workload, 1e-6);
    }
    p.setup.amr_runs.push_back(std::move(run));
  }
  p.setup.amr_start = inst.amr_start;
  p.setup.picker_start = inst.picker_start;
  p.options = SimOptions::deterministic(std::nullopt);
  p.options.noise.picker_speed.mean = inst.picker_speed;
  p.options.noise.amr_speed.mean = inst.amr_speed;
  return p;
}

DeterministicRun collect(const DeterministicInstance& inst, const Simulator& sim) {
  DeterministicRun out;
  out.metrics = sim.metrics();
  out.picks = sim.pick_log();
  out.decisions.assignment.assign(inst.n_items(), -1);
  out.decisions.orders.assign(inst.n_pickers(), {});
  for (const auto& p : out.picks) {
    const int item = inst.amr_items[p.amr][p.line];
    out.decisions.assignment[item] = p.picker;
    out.decisions.orders[p.picker].push_back(item);
  }
  return out;
}

}  // namespace

DeterministicRun simulate_deterministic(const DeterministicInstance& inst, AllocationPolicy& policy) {
  PreparedSim p = prepare(inst);
  Simulator sim(p.wh, std::move(p.setup), p.options, 0, PickerStart::kRequest);
  policy.begin_episode(0);
  while (true) {
    const Advance adv = sim.advance_to_next_request();
    if (adv.done) break;
    const ActionMask mask = valid_actions(sim, adv.picker);
    FeatureTensor features;
    if (policy.needs_features()) features = observe(sim, adv.picker);
    const DecisionContext ctx{sim, adv.picker, mask, policy.needs_features() ? &features : nullptr};
    sim.apply_allocation(adv.picker, policy.choose(ctx));
  }
  return collect(inst, sim);
}

DeterministicRun simulate_scripted(const DeterministicInstance& inst, const Decisions& decisions) {
  PreparedSim p = prepare(inst);
  p.options.rule = AllocationRule::kAnyPendingItem;
  p.options.repoll_on_stall = false;
  if (static_cast<int>(decisions.orders.size()) != inst.n_pickers()) {
    throw ConfigError("simulate_scripted: one order per picker required");
  }
  Simulator sim(p.wh, std::move(p.setup), p.options, 0, PickerStart::kRequest);
  std::vector<std::size_t> cursor(inst.n_pickers(), 0);
  while (true) {
    const Advance adv = sim.advance_to_next_request();
    if (adv.done) break;
    const auto& order = decisions.orders[adv.picker];
    std::size_t& c = cursor[adv.picker];
    if (c < order.size()) {
      sim.apply_allocation(adv.picker, inst.items[order[c++]].node);
    } else {
      sim.decline_allocation(adv.picker);
    }
  }
  return collect(inst, sim);
}

// ---------------------------------------------------------------------------

DeterministicInstance random_instance(RandomStream& rs, const InstanceSpec& spec, const std::string& id) {
  DeterministicInstance inst;
  inst.id = id;
  inst.n_aisles = spec.n_aisles;
  inst.depth = spec.depth;
  const auto lay = WarehouseLayout::build(spec.n_aisles, spec.depth);
  const int K = static_cast<int>(rs.uniform_int(spec.min_pickers, spec.max_pickers));
  const int R = static_cast<int>(rs.uniform_int(spec.min_amrs, spec.max_amrs));
  const int n = static_cast<int>(rs.uniform_int(std::max(spec.min_items, R), std::max(spec.max_items, R)));
  if (n > lay.pick_count()) throw ConfigError("random_instance: more items than pick locations");

  std::vector<NodeId> pool(lay.pick_count());
  std::iota(pool.begin(), pool.end(), 0);
  for (int i = 0; i < n; ++i) std::swap(pool[i], pool[rs.uniform_int(i, lay.pick_count() - 1)]);

  std::vector<std::vector<PickLine>> lines(R);
  for (int i = 0; i < n; ++i) {
    const int r = i < R ? i : static_cast<int>(rs.uniform_int(0, R - 1));
    const double w = std::clamp(rs.lognormal(2.0, 0.8), 0.2, 15.0) * static_cast<double>(rs.uniform_int(1, 3));
    lines[r].push_back({pool[i], 1, w, spec.load_time});
  }
  for (int r = 0; r < R; ++r) {
    sort_s_shape(lay, lines[r]);
    std::vector<int> seq;
    for (const auto& l : lines[r]) {
      seq.push_back(inst.n_items());
      inst.items.push_back({l.node, l.mass, l.expected_time});
    }
    inst.amr_items.push_back(std::move(seq));
    NodeId start = lay.base_node();
    if (spec.diverse_start) {
      do {
        start = static_cast<NodeId>(rs.uniform_int(0, lay.pick_count() - 1));
      } while (std::any_of(inst.items.begin(), inst.items.end(), [&](const OracleItem& it) { return it.node == start; }));
    }
    inst.amr_start.push_back(start);
  }
  for (int k = 0; k < K; ++k) inst.picker_start.push_back(static_cast<NodeId>(rs.uniform_int(0, lay.pick_count() - 1)));
  return inst;
}

Decisions random_decisions(RandomStream& rs, const DeterministicInstance& inst) {
  Decisions d;
  d.assignment.assign(inst.n_items(), -1);
  d.orders.assign(inst.n_pickers(), {});
  std::vector<std::size_t> next(inst.n_amrs(), 0);
  while (true) {
    std::vector<int> open;
    for (int r = 0; r < inst.n_amrs(); ++r) {
      if (next[r] < inst.amr_items[r].size()) open.push_back(r);
    }
    if (open.empty()) break;
    const int r = open[rs.uniform_int(0, static_cast<std::int64_t>(open.size()) - 1)];
    const int i = inst.amr_items[r][next[r]++];
    const int k = static_cast<int>(rs.uniform_int(0, inst.n_pickers() - 1));
    d.assignment[i] = k;
    d.orders[k].push_back(i);
  }
  return d;
}

}  // namespace colpick
