#pragma once

#include "colpick/layout.hpp"
#include "colpick/pickrun.hpp"
#include "colpick/random.hpp"
#include "colpick/stochastic.hpp"

#include <cstdint>
#include <deque>
#include <iosfwd>
#include <memory>
#include <optional>
#include <queue>
#include <span>
#include <string>
#include <vector>

namespace colpick {

/// Which nodes a requesting picker may be sent to.
enum class AllocationRule {
  kAmrDestinations,  // current or next destination of some AMR, unclaimed
  kAnyPendingItem,   // any unclaimed node with an item still to be loaded
};

struct SimOptions {
  NoiseModel noise;
  bool random_speeds = true;
  bool random_pick_times = true;
  bool disruptions = true;
  bool overtaking = true;
  std::optional<double> fixed_pick_time;  // replaces the expected pick time
  AllocationRule rule = AllocationRule::kAmrDestinations;
  /// On a stall (no events, items left) re-poll waiting pickers instead of failing.
  bool repoll_on_stall = true;
  bool record_events = false;

  /// Fixed speeds, fixed pick time, no disruptions or overtaking.
  static SimOptions deterministic(std::optional<double> pick_time = 7.5);
};

/// Scenario dimensions and episode generation settings.
struct ScenarioConfig {
  int n_aisles = 10;
  int depth = 10;
  int n_pickers = 10;
  int n_amrs = 25;
  int total_picks = 5000;
  PickrunBounds pickrun_bounds;
  PickBudget budget = PickBudget::kOrderLines;
  bool diverse_start = true;

  void validate() const;
};

/// Everything needed to start an episode.
struct EpisodeSetup {
  std::vector<Product> products;   // per pick node
  std::vector<Pickrun> amr_runs;   // first run of each AMR; may be empty
  std::vector<NodeId> amr_start;   // per AMR
  std::deque<Pickrun> queued_runs; // handed out FIFO at the base
  std::vector<NodeId> picker_start;
};

/// How pickers obtain their first destination.
enum class PickerStart {
  kRandomAllocation,  // placed at uniformly drawn valid destinations
  kRequest,           // all pickers request an allocation at t = 0
};

enum class PickerStatus : std::uint8_t { kMoving, kPicking, kAwaitingAssignment, kWaitingForAmr, kIdle };
enum class AmrStatus : std::uint8_t { kMoving, kWaitingForPicker, kLoading, kToBase, kIdleAtBase };

const char* to_string(PickerStatus s);
const char* to_string(AmrStatus s);

struct Trip {
  std::vector<NodeId> path;
  std::vector<double> cumulative;  // distance from path[0] to path[i]
  std::size_t index = 0;           // path[index] is the last node reached
  double start = 0.0;
  double speed = 1.0;
  double delay = 0.0;              // accumulated overtaking time

  bool active() const { return index + 1 < path.size(); }
  NodeId next() const { return path[index + 1]; }
  double remaining() const { return path.empty() ? 0.0 : cumulative.back() - cumulative[index]; }
};

struct PickerState {
  int id = 0;
  NodeId node = 0;
  std::optional<NodeId> destination;
  double speed = 0.0;
  double workload = 0.0;  // kg
  int picks = 0;
  PickerStatus status = PickerStatus::kIdle;
  bool restricted = false;  // stall re-poll: current AMR destinations only
  int serving_amr = -1;
  double pick_start = 0.0;
  Trip trip;
};

struct AmrState {
  int id = 0;
  NodeId node = 0;
  int run = -1;  // index into Simulator::runs(), -1 when without work
  std::size_t cursor = 0;
  double speed = 0.0;
  AmrStatus status = AmrStatus::kIdleAtBase;
  double waiting_since = 0.0;
  Trip trip;
};

struct PickRecord {
  int picker;
  int amr;
  int run;
  int line;
  NodeId node;
  double picker_arrival;
  double amr_arrival;
  double start;
  double end;
  double mass;
};

struct EventRecord {
  double time;
  std::string entity;
  std::string type;
  NodeId node;
};

void write_event_log_csv(std::ostream& os, std::span<const EventRecord> events);

struct EpisodeMetrics {
  double completion_time = 0.0;  // s
  double workload_sd = 0.0;      // kg, population sd
  std::vector<double> workloads;
  int picks = 0;
};

double population_sd(std::span<const double> values);

/// Result of running the simulation up to the next decision point.
struct Advance {
  bool done = false;
  int picker = -1;
  double time = 0.0;
};

/// Discrete-event simulation of pickers and AMRs between allocation requests.
class Simulator {
 public:
  Simulator(std::shared_ptr<const Warehouse> warehouse, EpisodeSetup setup, SimOptions options,
            std::uint64_t seed, PickerStart start = PickerStart::kRandomAllocation);

  /// Executes events until a picker requests a destination or all items are loaded.
  Advance advance_to_next_request();

  /// Sends the requesting picker to `target`; throws InvalidActionError if not allowed.
  void apply_allocation(int picker, NodeId target);

  /// Leaves the requesting picker idle until the next state change.
  void decline_allocation(int picker);

  std::vector<NodeId> valid_targets(int picker) const;
  bool is_valid_target(int picker, NodeId target) const;

  bool done() const { return loaded_lines_ == total_lines_; }
  double clock() const { return clock_; }
  EpisodeMetrics metrics() const;

  const Warehouse& warehouse() const { return *warehouse_; }
  const WarehouseLayout& layout() const { return warehouse_->layout(); }
  const SimOptions& options() const { return options_; }
  const std::vector<Product>& products() const { return products_; }
  const std::vector<PickerState>& pickers() const { return pickers_; }
  const std::vector<AmrState>& amrs() const { return amrs_; }
  const std::vector<Pickrun>& runs() const { return runs_; }
  std::span<const int> run_queue() const { return std::span<const int>(queue_).subspan(queue_head_); }
  const std::vector<PickRecord>& pick_log() const { return pick_log_; }
  const std::vector<EventRecord>& event_log() const { return event_log_; }

  /// Picker holding `node` as destination, or -1.
  int claimant(NodeId node) const { return claims_[node]; }

  /// Line the AMR is heading to (offset 0), the one after (1), and so on.
  const PickLine* amr_line(int amr, int offset = 0) const;
  std::optional<NodeId> amr_destination(int amr, int offset = 0) const;

  /// Expected pick time used when planning, honoring a fixed pick time.
  double planned_pick_time(const PickLine& line) const;

  int total_lines() const { return total_lines_; }
  int loaded_lines() const { return loaded_lines_; }

 private:
  enum class EventKind : std::uint8_t { kPickerStep, kAmrStep, kPickDone };
  struct Event {
    double time;
    std::uint64_t seq;
    EventKind kind;
    int entity;
    bool operator>(const Event& o) const { return time != o.time ? time > o.time : seq > o.seq; }
  };

  void schedule(double time, EventKind kind, int entity);
  void process(const Event& e);
  Trip make_trip(MoveMode mode, NodeId from, NodeId to, double speed) const;
  double arc_length(MoveMode mode, NodeId u, NodeId v) const;

  void place_pickers_randomly();
  void dispatch_amr(int amr);
  void schedule_amr_step(int amr);
  void on_amr_step(int amr);
  void on_amr_arrival(int amr);
  void on_amr_at_base(int amr);
  void start_next_run(int amr);
  double draw_speed(MoveMode mode);

  void schedule_picker_step(int picker);
  void on_picker_step(int picker);
  void on_picker_arrival(int picker);
  void start_pick(int picker, int amr);
  void on_pick_done(int picker);

  void request(int picker, bool front = false);
  void wake_idle_pickers();
  bool recover_stall();
  int waiting_amr_at(NodeId node) const;
  std::vector<NodeId> candidate_nodes(bool current_only) const;

  void log(const std::string& entity, const char* type, NodeId node);
  static std::string picker_name(int id);
  static std::string amr_name(int id);

  std::shared_ptr<const Warehouse> warehouse_;
  SimOptions options_;
  RandomStream rs_;
  std::vector<Product> products_;
  std::vector<Pickrun> runs_;
  std::vector<int> queue_;
  std::size_t queue_head_ = 0;
  std::vector<PickerState> pickers_;
  std::vector<AmrState> amrs_;
  std::vector<int> claims_;
  std::deque<int> pending_;
  int requesting_ = -1;
  std::priority_queue<Event, std::vector<Event>, std::greater<>> events_;
  std::uint64_t seq_ = 0;
  double clock_ = 0.0;
  double last_pick_time_ = 0.0;
  int total_lines_ = 0;
  int loaded_lines_ = 0;
  std::vector<PickRecord> pick_log_;
  std::vector<double> picker_arrival_time_;
  std::vector<EventRecord> event_log_;
};

/// Draws products, pickruns and AMR starting points for one episode.
EpisodeSetup generate_episode(const Warehouse& warehouse, const ScenarioConfig& scenario,
                              const ProductModel& model, RandomStream& rs);

/// Generates an episode and starts a simulator with randomly allocated pickers.
Simulator init_episode(std::shared_ptr<const Warehouse> warehouse, const ScenarioConfig& scenario,
                       const ProductModel& model, const SimOptions& options, std::uint64_t seed);

}  // namespace colpick
