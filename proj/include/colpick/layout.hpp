#pragma once

#include <Eigen/Core>
#include "json.hpp"

#include <cstdint>
#include <memory>
#include <span>
#include <vector>

namespace colpick {

using NodeId = std::int32_t;

enum class Side : std::uint8_t { kLeft = 0, kRight = 1 };
enum class AisleDirection : std::uint8_t { kUp = 0, kDown = 1 };
enum class MoveMode : std::uint8_t { kPicker = 0, kAmr = 1 };

const char* to_string(MoveMode mode);

/// Geometry of the parallel-aisle warehouse, in meters.
struct LayoutGeometry {
  double location_pitch = 1.4;  ///< between depth-adjacent locations
  double side_gap = 1.0;        ///< between the two rack faces at one depth
  double aisle_pitch = 6.0;     ///< between adjacent aisles on a cross-aisle
};

struct Arc {
  NodeId to;
  double length;
};

/// Undirected picker edge or directed AMR arc, used for serialization.
struct LayoutEdge {
  NodeId u;
  NodeId v;
  double length;
  MoveMode mode;
};

/// Single-block warehouse: `n_aisles` vertical aisles with racks on both
/// sides and cross-aisles at the bottom and top.
///
/// Pick nodes are numbered `(aisle * depth + d) * 2 + side` and come first;
/// the cross-aisle junctions (travel only) follow, bottom row then top row.
/// AMRs drive up even aisles and down odd aisles. A single-aisle layout has
/// no return path, so there the aisle is two-way for AMRs as well.
class WarehouseLayout {
 public:
  static WarehouseLayout build(int n_aisles, int depth, LayoutGeometry geometry = {});

  int n_aisles() const { return n_aisles_; }
  int depth() const { return depth_; }
  const LayoutGeometry& geometry() const { return geometry_; }

  int pick_count() const { return n_aisles_ * depth_ * 2; }
  int node_count() const { return pick_count() + 2 * n_aisles_; }
  bool is_pick(NodeId v) const { return v >= 0 && v < pick_count(); }
  bool contains(NodeId v) const { return v >= 0 && v < node_count(); }

  NodeId pick_node(int aisle, int depth_index, Side side) const;
  NodeId bottom_junction(int aisle) const { return pick_count() + aisle; }
  NodeId top_junction(int aisle) const { return pick_count() + n_aisles_ + aisle; }
  NodeId base_node() const { return bottom_junction(0); }

  int aisle_of(NodeId v) const;
  /// Position within the aisle; -1 for a bottom junction, depth() for a top one.
  int depth_of(NodeId v) const;
  Side side_of(NodeId v) const;
  AisleDirection direction(int aisle) const;

  /// Depth position counted from the AMR entry end of the aisle.
  int depth_along_travel(NodeId v) const;

  std::span<const Arc> out_arcs(NodeId v, MoveMode mode) const;
  std::span<const NodeId> aisle_nodes(int aisle) const;

  std::vector<LayoutEdge> edges() const;

 private:
  void add_edge(NodeId u, NodeId v, double length, bool picker, bool amr_forward, bool amr_backward);

  int n_aisles_ = 0;
  int depth_ = 0;
  LayoutGeometry geometry_{};
  std::vector<std::vector<Arc>> picker_arcs_;
  std::vector<std::vector<Arc>> amr_arcs_;
  std::vector<std::vector<NodeId>> aisle_members_;
};

void to_json(nlohmann::json& j, const WarehouseLayout& layout);

/// Exact shortest-path metric over one movement mode.
struct DistanceMatrix {
  MoveMode mode = MoveMode::kPicker;
  Eigen::MatrixXd dist;  // dist(from, to)

  double operator()(NodeId from, NodeId to) const { return dist(from, to); }
};

DistanceMatrix all_pairs_distance(const WarehouseLayout& layout, MoveMode mode);

/// Node sequence from `from` to `to` (both inclusive). Among shortest
/// continuations the lowest next-node id is taken.
std::vector<NodeId> shortest_path(const WarehouseLayout& layout, const DistanceMatrix& dist, NodeId from,
                                  NodeId to);

/// Layout plus both distance matrices; immutable and shared between
/// environment instances.
class Warehouse {
 public:
  explicit Warehouse(WarehouseLayout layout);

  static std::shared_ptr<const Warehouse> make(int n_aisles, int depth);

  const WarehouseLayout& layout() const { return layout_; }
  const DistanceMatrix& distances(MoveMode mode) const {
    return mode == MoveMode::kPicker ? picker_ : amr_;
  }
  double distance(MoveMode mode, NodeId from, NodeId to) const { return distances(mode)(from, to); }
  std::vector<NodeId> path(MoveMode mode, NodeId from, NodeId to) const {
    return shortest_path(layout_, distances(mode), from, to);
  }

 private:
  WarehouseLayout layout_;
  DistanceMatrix picker_;
  DistanceMatrix amr_;
};

}  // namespace colpick
