#include "colpick/layout.hpp"

#include <limits>
#include <queue>
#include <stdexcept>
#include <string>

namespace colpick {

const char* to_string(MoveMode mode) { return mode == MoveMode::kPicker ? "picker" : "amr"; }

WarehouseLayout WarehouseLayout::build(int n_aisles, int depth, LayoutGeometry geometry) {
  if (n_aisles < 1 || depth < 1) {
    throw std::invalid_argument("layout dimensions must be positive, got " + std::to_string(n_aisles) + "x" +
                                std::to_string(depth));
  }
  WarehouseLayout l;
  l.n_aisles_ = n_aisles;
  l.depth_ = depth;
  l.geometry_ = geometry;
  l.picker_arcs_.resize(l.node_count());
  l.amr_arcs_.resize(l.node_count());
  l.aisle_members_.resize(n_aisles);

  const bool one_way = n_aisles > 1;
  for (int a = 0; a < n_aisles; ++a) {
    const bool up = l.direction(a) == AisleDirection::kUp;
    for (int d = 0; d < depth; ++d) {
      const NodeId left = l.pick_node(a, d, Side::kLeft);
      const NodeId right = l.pick_node(a, d, Side::kRight);
      l.aisle_members_[a].push_back(left);
      l.aisle_members_[a].push_back(right);
      l.add_edge(left, right, geometry.side_gap, true, true, true);
      if (d + 1 < depth) {
        for (Side s : {Side::kLeft, Side::kRight}) {
          l.add_edge(l.pick_node(a, d, s), l.pick_node(a, d + 1, s), geometry.location_pitch, true,
                     up || !one_way, !up || !one_way);
        }
      }
    }
    for (Side s : {Side::kLeft, Side::kRight}) {
      // Aisle ends connect to the cross-aisle junctions; AMRs enter at the
      // bottom of up aisles and at the top of down aisles.
      l.add_edge(l.bottom_junction(a), l.pick_node(a, 0, s), geometry.location_pitch, true, up || !one_way,
                 !up || !one_way);
      l.add_edge(l.pick_node(a, depth - 1, s), l.top_junction(a), geometry.location_pitch, true,
                 up || !one_way, !up || !one_way);
    }
    if (a + 1 < n_aisles) {
      l.add_edge(l.bottom_junction(a), l.bottom_junction(a + 1), geometry.aisle_pitch, true, true, true);
      l.add_edge(l.top_junction(a), l.top_junction(a + 1), geometry.aisle_pitch, true, true, true);
    }
  }
  return l;
}

void WarehouseLayout::add_edge(NodeId u, NodeId v, double length, bool picker, bool amr_forward,
                               bool amr_backward) {
  if (picker) {
    picker_arcs_[u].push_back({v, length});
    picker_arcs_[v].push_back({u, length});
  }
  if (amr_forward) amr_arcs_[u].push_back({v, length});
  if (amr_backward) amr_arcs_[v].push_back({u, length});
}

NodeId WarehouseLayout::pick_node(int aisle, int depth_index, Side side) const {
  return (aisle * depth_ + depth_index) * 2 + static_cast<int>(side);
}

int WarehouseLayout::aisle_of(NodeId v) const {
  if (is_pick(v)) return v / (2 * depth_);
  const int j = v - pick_count();
  return j < n_aisles_ ? j : j - n_aisles_;
}

int WarehouseLayout::depth_of(NodeId v) const {
  if (is_pick(v)) return (v / 2) % depth_;
  return v - pick_count() < n_aisles_ ? -1 : depth_;
}

Side WarehouseLayout::side_of(NodeId v) const { return is_pick(v) ? static_cast<Side>(v % 2) : Side::kLeft; }

AisleDirection WarehouseLayout::direction(int aisle) const {
  return aisle % 2 == 0 ? AisleDirection::kUp : AisleDirection::kDown;
}

int WarehouseLayout::depth_along_travel(NodeId v) const {
  const int d = depth_of(v);
  return direction(aisle_of(v)) == AisleDirection::kUp ? d : depth_ - 1 - d;
}

std::span<const Arc> WarehouseLayout::out_arcs(NodeId v, MoveMode mode) const {
  return mode == MoveMode::kPicker ? std::span<const Arc>(picker_arcs_[v]) : std::span<const Arc>(amr_arcs_[v]);
}

std::span<const NodeId> WarehouseLayout::aisle_nodes(int aisle) const { return aisle_members_[aisle]; }

std::vector<LayoutEdge> WarehouseLayout::edges() const {
  std::vector<LayoutEdge> out;
  for (NodeId u = 0; u < node_count(); ++u) {
    for (const Arc& arc : picker_arcs_[u]) {
      if (u < arc.to) out.push_back({u, arc.to, arc.length, MoveMode::kPicker});
    }
  }
  for (NodeId u = 0; u < node_count(); ++u) {
    for (const Arc& arc : amr_arcs_[u]) out.push_back({u, arc.to, arc.length, MoveMode::kAmr});
  }
  return out;
}

void to_json(nlohmann::json& j, const WarehouseLayout& layout) {
  nlohmann::json edges = nlohmann::json::array();
  for (const LayoutEdge& e : layout.edges()) {
    edges.push_back({{"u", e.u}, {"v", e.v}, {"len", e.length}, {"mode", to_string(e.mode)}});
  }
  j = {{"n_aisles", layout.n_aisles()}, {"depth", layout.depth()}, {"edges", std::move(edges)}};
}

DistanceMatrix all_pairs_distance(const WarehouseLayout& layout, MoveMode mode) {
  const int n = layout.node_count();
  const double inf = std::numeric_limits<double>::infinity();
  DistanceMatrix out{mode, Eigen::MatrixXd::Constant(n, n, inf)};

  using Entry = std::pair<double, NodeId>;
  std::vector<double> dist(n);
  for (NodeId source = 0; source < n; ++source) {
    std::fill(dist.begin(), dist.end(), inf);
    std::priority_queue<Entry, std::vector<Entry>, std::greater<>> heap;
    dist[source] = 0.0;
    heap.push({0.0, source});
    while (!heap.empty()) {
      const auto [d, u] = heap.top();
      heap.pop();
      if (d > dist[u]) continue;
      for (const Arc& arc : layout.out_arcs(u, mode)) {
        const double nd = d + arc.length;
        if (nd < dist[arc.to]) {
          dist[arc.to] = nd;
          heap.push({nd, arc.to});
        }
      }
    }
    for (NodeId t = 0; t < n; ++t) out.dist(source, t) = dist[t];
  }
  return out;
}

std::vector<NodeId> shortest_path(const WarehouseLayout& layout, const DistanceMatrix& dist, NodeId from,
                                  NodeId to) {
  if (!layout.contains(from) || !layout.contains(to)) throw std::out_of_range("shortest_path: node not in layout");
  std::vector<NodeId> path{from};
  NodeId u = from;
  while (u != to) {
    const double remaining = dist(u, to);
    const double tol = 1e-9 * (1.0 + remaining);
    NodeId next = -1;
    for (const Arc& arc : layout.out_arcs(u, dist.mode)) {
      if (arc.length + dist(arc.to, to) <= remaining + tol && (next < 0 || arc.to < next)) next = arc.to;
    }
    if (next < 0) throw std::logic_error("shortest_path: no continuation, distance matrix inconsistent");
    path.push_back(next);
    u = next;
  }
  return path;
}

Warehouse::Warehouse(WarehouseLayout layout)
    : layout_(std::move(layout)),
      picker_(all_pairs_distance(layout_, MoveMode::kPicker)),
      amr_(all_pairs_distance(layout_, MoveMode::kAmr)) {}

std::shared_ptr<const Warehouse> Warehouse::make(int n_aisles, int depth) {
  return std::make_shared<const Warehouse>(WarehouseLayout::build(n_aisles, depth));
}

}  // namespace colpick
