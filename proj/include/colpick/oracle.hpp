#pragma once

#include "colpick/layout.hpp"
#include "colpick/policies.hpp"
#include "colpick/random.hpp"
#include "colpick/simulator.hpp"

#include "json.hpp"

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace colpick {

struct OracleItem {
  NodeId node = 0;
  double workload = 0.0;   // kg
  double load_time = 7.5;  // s
};

/// Tiny deterministic problem: every AMR carries one fixed item sequence.
struct DeterministicInstance {
  std::string id;
  int n_aisles = 1;
  int depth = 1;
  double picker_speed = 1.25;
  double amr_speed = 1.5;
  std::vector<OracleItem> items;
  std::vector<std::vector<int>> amr_items;  // item ids in collection order, per AMR
  std::vector<NodeId> amr_start;
  std::vector<NodeId> picker_start;

  int n_items() const { return static_cast<int>(items.size()); }
  int n_pickers() const { return static_cast<int>(picker_start.size()); }
  int n_amrs() const { return static_cast<int>(amr_items.size()); }

  /// Throws ConfigError on inconsistent data.
  void validate() const;
};

void to_json(nlohmann::json& j, const DeterministicInstance& inst);
void from_json(const nlohmann::json& j, DeterministicInstance& inst);

/// Picker per item plus the order in which every picker serves its items.
struct Decisions {
  std::vector<int> assignment;            // item -> picker
  std::vector<std::vector<int>> orders;   // picker -> item ids
};

struct Schedule {
  bool feasible = false;
  std::vector<double> picker_arrival;  // B^K per item
  std::vector<double> load_start;      // B^R per item
  std::vector<double> load_end;        // F^R = F^K per item
  std::vector<double> amr_completion;  // C_r
  double completion = 0.0;             // C
  std::vector<double> workloads;       // W_k
  double workload_sd = 0.0;
};

/// Travel times of one instance.
class InstanceTimes {
 public:
  InstanceTimes(const DeterministicInstance& inst, const Warehouse& wh);

  double picker_start(int k, int i) const { return picker_start_(k, i); }
  double picker(int from, int to) const { return picker_(from, to); }
  double amr_start(int r, int i) const { return amr_start_(r, i); }
  double amr(int from, int to) const { return amr_(from, to); }

 private:
  Eigen::MatrixXd picker_start_, picker_, amr_start_, amr_;
};

/// Earliest-start times under the given decisions; infeasible on cyclic precedence.
Schedule evaluate_schedule(const DeterministicInstance& inst, const Decisions& decisions);

struct Objective {
  enum class Kind { kEfficiency, kFairness, kWeighted } kind = Kind::kEfficiency;
  double w_efficiency = 1.0;  // weighted only
  double w_fairness = 0.0;

  static Objective efficiency() { return {}; }
  static Objective fairness() { return {Kind::kFairness, 0.0, 1.0}; }
  static Objective weighted(double we, double wf) { return {Kind::kWeighted, we, wf}; }
};

struct ExactResult {
  Decisions decisions;
  Schedule schedule;
  std::uint64_t nodes = 0;   // search nodes expanded
  std::uint64_t leaves = 0;  // complete schedules evaluated
};

inline constexpr int kMaxExactItems = 9;
inline constexpr int kMaxExactPickers = 3;

/// Exhaustive branch and bound over picker choices and feasible interleavings.
ExactResult solve_exact(const DeterministicInstance& inst, Objective objective, bool prune = true);

struct DeterministicRun {
  EpisodeMetrics metrics;
  std::vector<PickRecord> picks;
  Decisions decisions;  // as realized by the simulator
};

/// Runs the event simulator without noise on the instance, under a policy.
DeterministicRun simulate_deterministic(const DeterministicInstance& inst, AllocationPolicy& policy);

/// Replays fixed decisions through the event simulator.
DeterministicRun simulate_scripted(const DeterministicInstance& inst, const Decisions& decisions);

struct InstanceSpec {
  int n_aisles = 4;
  int depth = 4;
  int min_items = 2;
  int max_items = 8;
  int min_pickers = 1;
  int max_pickers = 3;
  int min_amrs = 1;
  int max_amrs = 3;
  bool diverse_start = true;
  double load_time = 7.5;
};

/// Random instance with distinct item locations in S-shape order per AMR.
DeterministicInstance random_instance(RandomStream& rs, const InstanceSpec& spec, const std::string& id = "");

/// Decisions from a random interleaving of the AMR sequences with random pickers.
Decisions random_decisions(RandomStream& rs, const DeterministicInstance& inst);

}  // namespace colpick
