#pragma once

#include "colpick/simulator.hpp"

#include <Eigen/Core>
#include "json.hpp"

#include <array>
#include <cstdint>
#include <memory>
#include <string>
#include <vector>

namespace colpick {

inline constexpr int kEfficiencyFeatures = 23;
inline constexpr int kFairnessFeatures = 12;
inline constexpr int kNodeFeatures = kEfficiencyFeatures + kFairnessFeatures;
inline constexpr double kNoneSentinel = -10.0;

struct FeatureInfo {
  const char* name;
  const char* group;
  const char* description;
};

/// Frozen feature order; columns of a FeatureTensor follow pick node ids.
const std::array<FeatureInfo, kNodeFeatures>& feature_manifest();
nlohmann::json feature_manifest_json();
std::uint64_t feature_manifest_hash();

/// kNodeFeatures x n_pick_nodes; rows 0..22 efficiency, 23..34 fairness.
using FeatureTensor = Eigen::MatrixXd;
using ActionMask = std::vector<std::uint8_t>;

/// Features of every pick node as seen by the requesting picker.
FeatureTensor observe(const Simulator& sim, int picker);
ActionMask valid_actions(const Simulator& sim, int picker);

struct RewardVector {
  double efficiency = 0.0;  // s, elapsed time negated
  double fairness = 0.0;    // kg, decrease of the workload sd
};

RewardVector normalize_rewards(const RewardVector& r, const RewardVector& scales);

struct EnvConfig {
  ScenarioConfig scenario;
  ProductModel products = ProductModel::defaults();
  SimOptions sim;
};

struct Observation {
  FeatureTensor features;
  ActionMask mask;
  int picker = -1;
  double time = 0.0;
};

struct StepResult {
  RewardVector reward;
  bool done = false;
};

/// Two-objective environment over the picking simulator.
class PickingEnv {
 public:
  explicit PickingEnv(EnvConfig config, std::shared_ptr<const Warehouse> warehouse = nullptr);

  /// Starts a new episode; returns false if it finished before any request.
  bool reset(std::uint64_t seed);
  StepResult step(NodeId action);

  bool done() const { return done_; }
  const Observation& observation() const { return obs_; }
  const Simulator& sim() const { return *sim_; }
  const EnvConfig& config() const { return config_; }
  const std::shared_ptr<const Warehouse>& warehouse() const { return warehouse_; }
  EpisodeMetrics metrics() const { return sim_->metrics(); }

  /// Skips feature computation for policies that only need the mask.
  void set_compute_features(bool on) { compute_features_ = on; }

 private:
  void advance();

  EnvConfig config_;
  std::shared_ptr<const Warehouse> warehouse_;
  std::unique_ptr<Simulator> sim_;
  Observation obs_;
  bool done_ = true;
  bool compute_features_ = true;
  double last_time_ = 0.0;
  double last_sd_ = 0.0;
};

}  // namespace colpick
