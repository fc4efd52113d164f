#pragma once

#include "colpick/env.hpp"
#include "colpick/simulator.hpp"

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

namespace colpick {

/// What a policy sees at a decision point.
struct DecisionContext {
  const Simulator& sim;
  int picker;
  const ActionMask& mask;
  const FeatureTensor* features = nullptr;  // only when needs_features()
};

class AllocationPolicy {
 public:
  virtual ~AllocationPolicy() = default;
  virtual std::string name() const = 0;
  virtual bool needs_features() const { return false; }
  virtual void begin_episode(std::uint64_t /*seed*/) {}
  virtual NodeId choose(const DecisionContext& ctx) = 0;
};

/// Nearest valid node by picker distance; ties to the lowest id.
NodeId greedy_choice(const Simulator& sim, int picker, const ActionMask& mask);

class GreedyPolicy final : public AllocationPolicy {
 public:
  std::string name() const override { return "greedy"; }
  NodeId choose(const DecisionContext& ctx) override { return greedy_choice(ctx.sim, ctx.picker, ctx.mask); }
};

/// Uniform over valid nodes.
class RandomPolicy final : public AllocationPolicy {
 public:
  explicit RandomPolicy(std::uint64_t seed = 0) : rs_(seed) {}
  std::string name() const override { return "random"; }
  void begin_episode(std::uint64_t seed) override { rs_ = RandomStream(derive_seed(seed, {0x5241})); }
  NodeId choose(const DecisionContext& ctx) override;

 private:
  RandomStream rs_;
};

struct VIWalkerState {
  int aisle = -1;   // committed aisle, -1 before the first decision
  int cursor = 0;   // depth along AMR travel
};

/// Scan-and-walk business rule: look 10 depth positions around the walker
/// for waiting AMRs, step along the AMR direction, switch aisles by
/// (aisle distance - waiting AMRs) at the aisle end.
class VIPolicy final : public AllocationPolicy {
 public:
  explicit VIPolicy(int window = 10) : window_(window) {}
  std::string name() const override { return "vi"; }
  void begin_episode(std::uint64_t seed) override;
  NodeId choose(const DecisionContext& ctx) override;

  /// Aisle cost used at the end of an aisle.
  static int aisle_cost(int from_aisle, int to_aisle, int waiting_amrs);

  const std::vector<VIWalkerState>& walkers() const { return walkers_; }
  int fallbacks() const { return fallbacks_; }

 private:
  int window_;
  std::vector<VIWalkerState> walkers_;
  int fallbacks_ = 0;
};

/// "greedy" | "vi" | "random".
std::unique_ptr<AllocationPolicy> make_baseline_policy(const std::string& name, std::uint64_t seed = 0);

}  // namespace colpick
