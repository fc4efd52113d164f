#include "colpick/policies.hpp"

#include "colpick/errors.hpp"

#include <algorithm>
#include <limits>
#include <vector>

namespace colpick {

NodeId greedy_choice(const Simulator& sim, int picker, const ActionMask& mask) {
  const auto& d = sim.warehouse().distances(MoveMode::kPicker);
  const NodeId from = sim.pickers().at(picker).node;
  NodeId best = -1;
  double best_d = std::numeric_limits<double>::infinity();
  for (NodeId v = 0; v < static_cast<NodeId>(mask.size()); ++v) {
    if (!mask[v]) continue;
    if (d(from, v) < best_d) {
      best_d = d(from, v);
      best = v;
    }
  }
  if (best < 0) throw InvalidActionError("greedy policy: empty action mask");
  return best;
}

NodeId RandomPolicy::choose(const DecisionContext& ctx) {
  std::vector<NodeId> valid;
  for (NodeId v = 0; v < static_cast<NodeId>(ctx.mask.size()); ++v) {
    if (ctx.mask[v]) valid.push_back(v);
  }
  if (valid.empty()) throw InvalidActionError("random policy: empty action mask");
  return valid[rs_.uniform_int(0, static_cast<std::int64_t>(valid.size()) - 1)];
}

void VIPolicy::begin_episode(std::uint64_t) {
  walkers_.clear();
  fallbacks_ = 0;
}

int VIPolicy::aisle_cost(int from_aisle, int to_aisle, int waiting_amrs) {
  return std::abs(to_aisle - from_aisle) - waiting_amrs;
}

NodeId VIPolicy::choose(const DecisionContext& ctx) {
  const Simulator& sim = ctx.sim;
  const auto& lay = sim.layout();
  const int n_aisles = lay.n_aisles();
  const int depth = lay.depth();
  if (walkers_.size() < sim.pickers().size()) walkers_.resize(sim.pickers().size());
  VIWalkerState& w = walkers_[ctx.picker];

  const NodeId here = sim.pickers()[ctx.picker].node;
  if (lay.is_pick(here)) {
    w.aisle = lay.aisle_of(here);
    w.cursor = lay.depth_along_travel(here);
  } else if (w.aisle < 0) {
    w.aisle = lay.aisle_of(here);
    w.cursor = 0;
  }

  // Valid nodes with a waiting AMR, and waiting AMRs per aisle.
  std::vector<std::uint8_t> waiting(lay.pick_count(), 0);
  std::vector<int> waiting_in_aisle(n_aisles, 0);
  for (const auto& a : sim.amrs()) {
    if (a.status != AmrStatus::kWaitingForPicker || !lay.is_pick(a.node)) continue;
    ++waiting_in_aisle[lay.aisle_of(a.node)];
    if (ctx.mask[a.node]) waiting[a.node] = 1;
  }
  // Node at a depth position along travel, left face first.
  auto node_at = [&](int aisle, int pos, Side side) {
    const int d = lay.direction(aisle) == AisleDirection::kUp ? pos : depth - 1 - pos;
    return lay.pick_node(aisle, d, side);
  };
  auto scan_window = [&](int aisle, int pos) -> NodeId {
    // Outward from the walker, ahead before behind.
    for (int off = 0; off <= window_; ++off) {
      for (int p : {pos + off, pos - off}) {
        if (p < 0 || p >= depth) continue;
        for (Side s : {Side::kLeft, Side::kRight}) {
          const NodeId v = node_at(aisle, p, s);
          if (waiting[v]) return v;
        }
        if (off == 0) break;
      }
    }
    return -1;
  };
  auto next_aisle = [&](int from, const std::vector<char>& visited) {
    int best = -1, best_cost = std::numeric_limits<int>::max();
    for (int a = 0; a < n_aisles; ++a) {
      if (visited[a]) continue;
      const int c = aisle_cost(from, a, waiting_in_aisle[a]);
      if (c < best_cost) {
        best_cost = c;
        best = a;
      }
    }
    return best;
  };

  // Walk scanning for waiting AMRs.
  {
    std::vector<char> visited(n_aisles, 0);
    int aisle = w.aisle, pos = w.cursor;
    while (aisle >= 0) {
      visited[aisle] = 1;
      for (; pos < depth; ++pos) {
        const NodeId v = scan_window(aisle, pos);
        if (v >= 0) {
          w.aisle = aisle;
          w.cursor = lay.depth_along_travel(v);
          return v;
        }
      }
      aisle = next_aisle(aisle, visited);
      pos = 0;
    }
  }
  // Nothing waiting: settle on the first valid node along the same walk.
  {
    std::vector<char> visited(n_aisles, 0);
    int aisle = w.aisle, pos = w.cursor;
    bool wrapped = false;
    while (aisle >= 0) {
      for (; pos < depth; ++pos) {
        for (Side s : {Side::kLeft, Side::kRight}) {
          const NodeId v = node_at(aisle, pos, s);
          if (ctx.mask[v]) {
            w.aisle = aisle;
            w.cursor = pos;
            return v;
          }
        }
      }
      visited[aisle] = 1;
      const int nxt = next_aisle(aisle, visited);
      if (nxt < 0 && !wrapped) {
        // Back to the part of the starting aisle behind the walker.
        wrapped = true;
        aisle = w.aisle;
        pos = 0;
        continue;
      }
      aisle = nxt;
      pos = 0;
    }
  }
  ++fallbacks_;
  const NodeId v = greedy_choice(sim, ctx.picker, ctx.mask);
  w.aisle = lay.aisle_of(v);
  w.cursor = lay.depth_along_travel(v);
  return v;
}

std::unique_ptr<AllocationPolicy> make_baseline_policy(const std::string& name, std::uint64_t seed) {
  if (name == "greedy") return std::make_unique<GreedyPolicy>();
  if (name == "vi") return std::make_unique<VIPolicy>();
  if (name == "random") return std::make_unique<RandomPolicy>(seed);
  throw ConfigError("unknown policy '" + name + "' (expected greedy, vi or random)");
}

}  // namespace colpick
