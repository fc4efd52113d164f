#include "colpick/pickrun.hpp"

#include "doctest.h"

#include <set>

using namespace colpick;

TEST_SUITE("pickrun") {
  TEST_CASE("order-line budget is met exactly") {
    const auto lay = WarehouseLayout::build(10, 10);
    const auto model = ProductModel::defaults();
    RandomStream rs(10);
    const auto pl = generate_product_placement(rs, lay, model);
    const auto runs = generate_pickruns(rs, lay, pl.products, model, 5000);
    std::size_t lines = 0;
    for (const auto& r : runs) lines += r.lines.size();
    CHECK(lines == 5000u);
  }

  TEST_CASE("item budget is met exactly") {
    const auto lay = WarehouseLayout::build(10, 10);
    const auto model = ProductModel::defaults();
    RandomStream rs(11);
    const auto pl = generate_product_placement(rs, lay, model);
    const auto runs = generate_pickruns(rs, lay, pl.products, model, 5000, {}, PickBudget::kItems);
    int items = 0;
    for (std::size_t i = 0; i < runs.size(); ++i) {
      items += runs[i].item_count();
      if (i + 1 < runs.size()) {
        CHECK(runs[i].lines.size() >= 15u);
        CHECK(runs[i].lines.size() <= 25u);
      }
    }
    CHECK(items == 5000);
    CHECK_THROWS(generate_pickruns(rs, lay, pl.products, model, 0));
  }

  TEST_CASE("custom bounds and S-shape order") {
    const auto lay = WarehouseLayout::build(7, 7);
    const auto model = ProductModel::defaults();
    RandomStream rs(12);
    const auto pl = generate_product_placement(rs, lay, model);
    const auto runs = generate_pickruns(rs, lay, pl.products, model, 2000, {9, 14});
    for (std::size_t i = 0; i + 1 < runs.size(); ++i) {
      CHECK(runs[i].lines.size() >= 9u);
      CHECK(runs[i].lines.size() <= 14u);
    }
    for (const auto& r : runs) {
      std::set<NodeId> distinct;
      for (std::size_t j = 0; j < r.lines.size(); ++j) {
        const auto& l = r.lines[j];
        distinct.insert(l.node);
        CHECK(l.mass == doctest::Approx(l.n_items * pl.products[l.node].weight));
        if (j == 0) continue;
        const auto& prev = r.lines[j - 1];
        const int a0 = lay.aisle_of(prev.node), a1 = lay.aisle_of(l.node);
        CHECK(a0 <= a1);
        if (a0 == a1) {
          // Up aisles by increasing depth, down aisles by decreasing depth.
          if (a1 % 2 == 0) {
            CHECK(lay.depth_of(prev.node) <= lay.depth_of(l.node));
          } else {
            CHECK(lay.depth_of(prev.node) >= lay.depth_of(l.node));
          }
        }
      }
      CHECK(distinct.size() == r.lines.size());
    }
  }
}
