#pragma once

#include "colpick/env.hpp"
#include "colpick/nn/networks.hpp"

#include "json.hpp"

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>

namespace colpick::nn {

inline constexpr int kCheckpointVersion = 1;

/// Fixed per-row divisors applied to features before the networks.
const std::array<double, kNodeFeatures>& input_scale();

/// Actor plus critic in training precision.
struct PolicyModel {
  Actor<float> actor;
  Critic<float> critic;
  bool efficiency_only = false;  // fairness feature rows are zeroed at the input

  PolicyModel() = default;
  explicit PolicyModel(ActorKind kind, bool efficiency_only_ = false) : actor(kind), efficiency_only(efficiency_only_) {}

  void init(std::uint64_t seed);

  std::vector<DenseLayer<float>*> actor_layers() { return actor.layers(); }
  std::vector<DenseLayer<float>*> critic_layers() { return critic.layers(); }
  std::vector<DenseLayer<float>*> all_layers();
  Eigen::Index actor_parameter_count();
  Eigen::Index critic_parameter_count();

  /// Architecture description; a checkpoint only loads into an identical one.
  nlohmann::json manifest();

  /// Scaled network input for raw features.
  Mat<float> input(const FeatureTensor& f) const;
};

/// Scaled copy of the features in `T` precision.
template <typename T>
Mat<T> scale_features(const FeatureTensor& f) {
  const auto& s = input_scale();
  Mat<T> out(f.rows(), f.cols());
  for (Eigen::Index r = 0; r < f.rows(); ++r) out.row(r) = (f.row(r) / s[r]).template cast<T>();
  return out;
}

nlohmann::json checkpoint_json(PolicyModel& model, const nlohmann::json& metadata = {});
/// Throws ConfigError on a manifest or feature hash mismatch.
PolicyModel model_from_checkpoint(const nlohmann::json& j, nlohmann::json* metadata = nullptr);

void save_checkpoint(const std::filesystem::path& path, PolicyModel& model, const nlohmann::json& metadata = {});
PolicyModel load_checkpoint(const std::filesystem::path& path, nlohmann::json* metadata = nullptr);

/// Copies parameters between precisions (same architecture).
template <typename Dst, typename Src>
void copy_parameters(const std::vector<DenseLayer<Src>*>& from, const std::vector<DenseLayer<Dst>*>& to) {
  if (from.size() != to.size()) throw std::invalid_argument("copy_parameters: layer count mismatch");
  for (std::size_t i = 0; i < from.size(); ++i) {
    to[i]->W = from[i]->W.template cast<Dst>();
    to[i]->b = from[i]->b.template cast<Dst>();
  }
}

}  // namespace colpick::nn
