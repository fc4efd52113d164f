#pragma once

#include "colpick/env.hpp"
#include "colpick/nn/model.hpp"
#include "colpick/policies.hpp"

#include <array>
#include <cstdint>
#include <functional>
#include <memory>
#include <vector>

namespace colpick {

using Weights = std::array<double, 2>;  // (efficiency, fairness), on the simplex

struct PPOConfig {
  double clip = 0.2;
  double entropy_coef = 0.01;
  double learning_rate = 5e-4;
  int epochs = 3;
  int minibatch = 128;
  double gamma = 0.995;
  double lambda = 0.95;
  int workers = 64;
  int steps_per_worker = 400;
  double max_grad_norm = 0.5;  // 0 disables clipping
  bool normalize_advantages = true;
  RewardVector reward_scale{200.0, 100.0};  // divisors for (-dt s, -d sd kg)

  void validate() const;
};

void to_json(nlohmann::json& j, const PPOConfig& c);
void from_json(const nlohmann::json& j, PPOConfig& c);

/// Decision process seen by the trainer.
class RlEnv {
 public:
  virtual ~RlEnv() = default;
  /// Starts an episode that has at least one decision.
  virtual void reset(std::uint64_t seed) = 0;
  virtual const FeatureTensor& features() const = 0;
  virtual const ActionMask& mask() const = 0;
  virtual const nn::NodeGroups& groups() const = 0;
  virtual StepResult step(NodeId action) = 0;
  virtual bool done() const = 0;
  /// Raw objective values of the finished episode, (completion time, workload sd) for picking.
  virtual std::array<double, 2> episode_objectives() const { return {0.0, 0.0}; }
};

/// RlEnv over the picking environment.
class PickingRlEnv final : public RlEnv {
 public:
  explicit PickingRlEnv(EnvConfig config, std::shared_ptr<const Warehouse> warehouse = nullptr);
  void reset(std::uint64_t seed) override;
  const FeatureTensor& features() const override { return env_.observation().features; }
  const ActionMask& mask() const override { return env_.observation().mask; }
  const nn::NodeGroups& groups() const override { return groups_; }
  StepResult step(NodeId action) override { return env_.step(action); }
  bool done() const override { return env_.done(); }
  std::array<double, 2> episode_objectives() const override;
  const PickingEnv& env() const { return env_; }

 private:
  PickingEnv env_;
  nn::NodeGroups groups_;
};

using EnvFactory = std::function<std::unique_ptr<RlEnv>()>;

/// GAE over one trajectory segment; `done[t]` ends the episode after step t.
std::vector<double> compute_gae(const std::vector<double>& rewards, const std::vector<double>& values,
                                const std::vector<std::uint8_t>& done, double bootstrap, double gamma,
                                double lambda);

/// In-place normalization to zero mean and unit variance.
void normalize(std::vector<double>& x);

/// Clipped surrogate of one sample and its derivative with respect to the ratio.
struct ClipTerm {
  double value;
  double d_ratio;
};
ClipTerm clipped_surrogate(double ratio, double advantage, double clip);

/// Adam over a fixed list of layers.
class Adam {
 public:
  Adam(std::vector<nn::DenseLayer<float>*> layers, double lr, double beta1 = 0.9, double beta2 = 0.999,
       double eps = 1e-8);
  /// Applies the accumulated gradients; returns the pre-clip gradient norm.
  double step(double max_grad_norm);
  void zero_grad();

 private:
  std::vector<nn::DenseLayer<float>*> layers_;
  std::vector<nn::Mat<float>> mW_, vW_;
  std::vector<nn::Vec<float>> mb_, vb_;
  double lr_, b1_, b2_, eps_;
  long t_ = 0;
};

struct IterationStats {
  int iteration = 0;
  long steps = 0;                       // cumulative environment steps
  int episodes = 0;                     // finished during this rollout
  std::array<double, 2> mean_episode_reward{0.0, 0.0};  // raw, undiscounted
  double policy_loss = 0.0;
  double value_loss = 0.0;
  double entropy = 0.0;
  double approx_kl = 0.0;
  double clip_fraction = 0.0;
};

/// Weighted-sum PPO for one task.
class PPOTrainer {
 public:
  PPOTrainer(nn::PolicyModel model, PPOConfig config, Weights omega, EnvFactory factory, std::uint64_t seed,
             std::uint64_t task = 0);

  IterationStats iterate();
  const nn::PolicyModel& model() const { return model_; }
  nn::PolicyModel& model() { return model_; }
  const Weights& omega() const { return omega_; }
  long steps() const { return steps_; }
  int iteration() const { return iteration_; }

 private:
  struct Sample {
    nn::Mat<float> x;
    ActionMask mask;
    const nn::NodeGroups* groups;
    int action;
    double logp;
    std::array<double, 2> reward;
    std::array<double, 2> value;
    bool done;
    double advantage = 0.0;
    std::array<double, 2> ret{0.0, 0.0};
  };
  struct Worker {
    std::unique_ptr<RlEnv> env;
    RandomStream rs;
    std::uint64_t episodes = 0;
    std::array<double, 2> episode_reward{0.0, 0.0};
  };

  void start_episode(Worker& w, std::size_t index);

  nn::PolicyModel model_;
  PPOConfig config_;
  Weights omega_;
  std::uint64_t seed_;
  std::uint64_t task_;
  std::vector<Worker> workers_;
  Adam actor_opt_, critic_opt_;
  RandomStream shuffle_rs_;
  long steps_ = 0;
  int iteration_ = 0;
};

/// Action of a trained model: highest probability, or sampled.
NodeId model_action(const nn::PolicyModel& model, const FeatureTensor& features, const ActionMask& mask,
                    const nn::NodeGroups& groups, RandomStream* sample = nullptr);

/// Allocation policy backed by a model checkpoint.
class NeuralPolicy final : public AllocationPolicy {
 public:
  explicit NeuralPolicy(nn::PolicyModel model, std::string label = "checkpoint");
  std::string name() const override { return label_; }
  bool needs_features() const override { return true; }
  NodeId choose(const DecisionContext& ctx) override;

 private:
  nn::PolicyModel model_;
  std::string label_;
  const WarehouseLayout* layout_ = nullptr;
  nn::NodeGroups groups_;
};

struct EvaluationResult {
  int episodes = 0;
  std::array<double, 2> mean_reward{0.0, 0.0};  // (-C, -sd)
  double mean_completion = 0.0;
  double mean_workload_sd = 0.0;
  std::vector<double> completion;
  std::vector<double> workload_sd;
};

/// Runs `policy` on episodes seeded derive_seed(seed, {episode}).
EvaluationResult evaluate_policy(AllocationPolicy& policy, const EnvConfig& config, int episodes,
                                 std::uint64_t seed, std::shared_ptr<const Warehouse> warehouse = nullptr);

}  // namespace colpick
