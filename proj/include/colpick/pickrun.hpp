#pragma once

#include "colpick/layout.hpp"
#include "colpick/random.hpp"
#include "colpick/stochastic.hpp"

#include <cstdint>
#include <vector>

namespace colpick {

/// One order line: a location and the items to load there.
struct PickLine {
  NodeId node = 0;
  int n_items = 1;
  double mass = 0.0;           // kg, n_items * item weight
  double expected_time = 0.0;  // s
};

struct Pickrun {
  std::vector<PickLine> lines;

  int item_count() const;
  double mass() const;
};

struct PickrunBounds {
  int min_length = 15;
  int max_length = 25;
};

/// What the pick budget of an episode counts.
enum class PickBudget : std::uint8_t {
  kOrderLines,  // location visits
  kItems,       // individual items; the last line is shortened to fit
};

/// Builds an order line for `n_items` of the product stored at `node`.
PickLine make_pick_line(NodeId node, int n_items, const std::vector<Product>& products,
                        const PickTimeCoefficients& coef);

/// S-shape visiting order: aisles ascending, and inside an aisle along its
/// AMR travel direction (left face before right face at equal depth).
void sort_s_shape(const WarehouseLayout& layout, std::vector<PickLine>& lines);

/// Random pickruns whose order lines (or items) sum exactly to `total_picks`;
/// the last run is truncated to meet the budget.
std::vector<Pickrun> generate_pickruns(RandomStream& rs, const WarehouseLayout& layout,
                                       const std::vector<Product>& products, const ProductModel& model,
                                       int total_picks, PickrunBounds bounds = {},
                                       PickBudget unit = PickBudget::kOrderLines);

}  // namespace colpick
