#include "colpick/pickrun.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>
#include <tuple>

namespace colpick {

int Pickrun::item_count() const {
  int n = 0;
  for (const auto& l : lines) n += l.n_items;
  return n;
}

double Pickrun::mass() const {
  double m = 0.0;
  for (const auto& l : lines) m += l.mass;
  return m;
}

PickLine make_pick_line(NodeId node, int n_items, const std::vector<Product>& products,
                        const PickTimeCoefficients& coef) {
  const Product& p = products.at(node);
  return {node, n_items, n_items * p.weight, expected_pick_time(p, n_items, coef)};
}

void sort_s_shape(const WarehouseLayout& layout, std::vector<PickLine>& lines) {
  auto key = [&](const PickLine& l) {
    return std::make_tuple(layout.aisle_of(l.node), layout.depth_along_travel(l.node),
                           static_cast<int>(layout.side_of(l.node)));
  };
  std::stable_sort(lines.begin(), lines.end(), [&](const PickLine& a, const PickLine& b) { return key(a) < key(b); });
}

std::vector<Pickrun> generate_pickruns(RandomStream& rs, const WarehouseLayout& layout,
                                       const std::vector<Product>& products, const ProductModel& model,
                                       int total_picks, PickrunBounds bounds, PickBudget unit) {
  if (total_picks < 1) throw std::invalid_argument("generate_pickruns: total_picks must be >= 1");
  if (bounds.min_length < 1 || bounds.max_length < bounds.min_length) {
    throw std::invalid_argument("generate_pickruns: invalid length bounds");
  }
  const int n_locations = layout.pick_count();
  std::vector<NodeId> pool(n_locations);
  std::iota(pool.begin(), pool.end(), 0);

  std::vector<Pickrun> runs;
  int remaining = total_picks;
  while (remaining > 0) {
    const int length = static_cast<int>(
        std::min<std::int64_t>(rs.uniform_int(bounds.min_length, bounds.max_length), n_locations));
    // Partial Fisher-Yates: the first `length` entries become a uniform sample.
    for (int i = 0; i < length; ++i) {
      const auto j = rs.uniform_int(i, n_locations - 1);
      std::swap(pool[i], pool[j]);
    }
    Pickrun run;
    for (int i = 0; i < length; ++i) {
      run.lines.push_back(make_pick_line(pool[i], model.item_counts.sample(rs), products, model.pick_time));
    }
    sort_s_shape(layout, run.lines);

    int used = 0;
    std::size_t keep = 0;
    for (; keep < run.lines.size() && used < remaining; ++keep) {
      PickLine& line = run.lines[keep];
      if (unit == PickBudget::kOrderLines) {
        ++used;
        continue;
      }
      if (used + line.n_items > remaining) {
        line = make_pick_line(line.node, remaining - used, products, model.pick_time);
      }
      used += line.n_items;
    }
    run.lines.resize(keep);
    remaining -= used;
    runs.push_back(std::move(run));
  }
  return runs;
}

}  // namespace colpick
