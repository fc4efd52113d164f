#pragma once

#include "colpick/ppo.hpp"

#include <array>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace colpick {

/// Objective point in reward orientation: (efficiency, fairness), larger is better.
using Point2 = std::array<double, 2>;

bool dominates(const Point2& a, const Point2& b);
std::vector<Point2> non_dominated(std::vector<Point2> points);

/// Area dominated by `points` and bounded by `reference`; points not above the reference add nothing.
double hypervolume_2d(std::vector<Point2> points, const Point2& reference);

/// Mean over objectives of the mean squared gap between consecutive points sorted by objective 0.
double sparsity(std::vector<Point2> points);

struct ArchiveEntry {
  Point2 point{};
  int policy = -1;  // population index
  Weights omega{};
  std::string checkpoint;
};

/// Non-dominated set of evaluated policies.
class ParetoArchive {
 public:
  /// Returns true if the entry entered the archive; evicts entries it dominates.
  bool insert(const ArchiveEntry& e);
  const std::vector<ArchiveEntry>& entries() const { return entries_; }
  std::vector<Point2> points() const;
  std::size_t size() const { return entries_.size(); }
  bool is_non_dominated() const;
  double hypervolume(const Point2& reference) const { return hypervolume_2d(points(), reference); }
  nlohmann::json to_json() const;

 private:
  std::vector<ArchiveEntry> entries_;
};

/// Maps raw points into [0, 1]^2 between a reference and an ideal point.
struct ObjectiveScale {
  Point2 reference{};
  Point2 ideal{};
  Point2 normalize(const Point2& p) const;
};

/// f(w) = A / (1 + exp(-a (w - b))) + c.
struct Sigmoid {
  double A = 0.0, a = 1.0, b = 0.5, c = 0.0;
  double operator()(double w) const;
};

Sigmoid fit_sigmoid(const std::vector<double>& w, const std::vector<double>& y);

struct TrainingRecord {
  Weights omega{};
  Point2 before{};
  Point2 after{};
};

/// Predicted change of each objective when a policy is trained with weights omega.
struct HyperbolicModel {
  bool fitted = false;
  std::array<Sigmoid, 2> f{};
  Point2 fallback{};  // delta of the nearest record when not fitted

  Point2 predict_delta(const Weights& omega) const;
};

/// Fits on the records whose before-point lies within `radius` of `point` in normalized space.
HyperbolicModel fit_hyperbolic(const std::vector<TrainingRecord>& records, const Point2& point,
                               const ObjectiveScale& scale, double radius);

struct Candidate {
  int policy = -1;
  Weights omega{};
  Point2 predicted{};
};

/// Greedy choice of n (policy, weights) pairs maximizing hypervolume minus beta times sparsity
/// of the archive extended by the predictions; ties go to higher predicted efficiency.
std::vector<Candidate> select_tasks(const std::vector<Point2>& population, const std::vector<HyperbolicModel>& models,
                                    const std::vector<Point2>& archive, int n, const ObjectiveScale& scale,
                                    double beta = 1.0, double grid_step = 0.05);

/// Weight vectors (1 - k/(n-1), k/(n-1)).
std::vector<Weights> even_weights(int n);

struct MorlConfig {
  EnvConfig env;
  PPOConfig ppo;
  nn::ActorKind actor = nn::ActorKind::kAemo;
  int n_tasks = 6;
  int warmup_iterations = 8;
  int task_iterations = 4;
  int generations = 2;
  int eval_episodes = 20;
  double beta = 1.0;
  double grid_step = 0.05;
  double neighborhood_radius = 0.1;
  double reference_factor = 1.5;  // reference = factor x mean reward of the random policy
  std::uint64_t seed = 0;
  std::optional<std::filesystem::path> run_dir;

  void validate() const;
};

nlohmann::json to_json(const MorlConfig& c);
MorlConfig morl_config_from_json(const nlohmann::json& j);

struct PopulationEntry {
  Point2 point{};
  Weights omega{};
  int parent = -1;
  int generation = -1;  // -1 for warm-up
  std::string checkpoint;
  nn::PolicyModel model;
};

struct MorlResult {
  ParetoArchive archive;
  ParetoArchive warmup_archive;
  Point2 reference{};
  ObjectiveScale scale;
  std::vector<double> hv_history;  // after warm-up, then after each generation
  std::vector<PopulationEntry> population;
  std::vector<TrainingRecord> records;
  long total_steps = 0;
};

using IterationLog = std::function<void(const std::string& phase, int generation, int task, const IterationStats&)>;

MorlResult run_morl(const MorlConfig& config, const IterationLog& log = {});

}  // namespace colpick
