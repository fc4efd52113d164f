#include "colpick/pickrun.hpp"
#include "colpick/stochastic.hpp"

#include "doctest.h"

#include <cmath>
#include <map>
#include <vector>

using namespace colpick;

namespace {

struct Moments {
  double mean;
  double sd;
  double min;
};

template <class F>
Moments moments(int n, F&& draw) {
  double s = 0, s2 = 0, mn = 1e300;
  for (int i = 0; i < n; ++i) {
    const double x = draw();
    s += x;
    s2 += x * x;
    mn = std::min(mn, x);
  }
  const double m = s / n;
  return {m, std::sqrt(s2 / n - m * m), mn};
}

}  // namespace

TEST_SUITE("stochastic") {
  TEST_CASE("same seed, same stream") {
    RandomStream a(42), b(42);
    for (int i = 0; i < 100; ++i) CHECK(sample_picker_speed(a) == sample_picker_speed(b));
    RandomStream c(7), d(7);
    for (int i = 0; i < 100; ++i) CHECK(sample_overtake_delay(c) == sample_overtake_delay(d));
  }

  TEST_CASE("speed moments") {
    RandomStream rs(1);
    const auto p = moments(100000, [&] { return sample_picker_speed(rs); });
    CHECK(std::abs(p.mean - 1.25) < 0.01);
    CHECK(std::abs(p.sd - 0.15) < 0.01);
    CHECK(p.min >= 0.3);
    const auto a = moments(100000, [&] { return sample_amr_speed(rs); });
    CHECK(std::abs(a.mean - 1.5) < 0.01);
    CHECK(a.min >= 0.3);
  }

  TEST_CASE("pick time noise") {
    RandomStream rs(2);
    const auto m = moments(100000, [&] { return sample_pick_time(rs, 10.0); });
    CHECK(std::abs(m.mean - 10.0) < 0.05);
    CHECK(std::abs(m.sd - 1.0) < 0.05);
    CHECK(m.min >= 0.5);
    CHECK_THROWS(sample_pick_time(rs, 0.0));
  }

  TEST_CASE("disruptions") {
    RandomStream rs(3);
    double total = 0;
    const int seeds = 200;
    for (int s = 0; s < seeds; ++s) total += static_cast<double>(sample_disruption_schedule(rs, 5000).size());
    CHECK(std::abs(total / seeds - 100.0) < 5.0);
    CHECK(sample_disruption_schedule(rs, 0).empty());
    NoiseModel always;
    always.disruption_probability = 1.0;
    const auto d = moments(10000, [&] { return *sample_disruption(rs, always); });
    CHECK(std::abs(d.mean - 60.0) < 1.0);
    CHECK(d.min >= 5.0);
  }

  TEST_CASE("overtake delay") {
    RandomStream rs(4);
    const auto m = moments(10000, [&] { return sample_overtake_delay(rs); });
    CHECK(std::abs(m.mean - 15.0) < 0.2);
    CHECK(m.min >= 1.0);
  }

  TEST_CASE("expected pick time surrogate") {
    Product p{0, 1.0, 1.0, 0};
    CHECK(expected_pick_time(p, 1) == doctest::Approx(6.43));
    Product heavy = p;
    heavy.weight = 2.0;
    CHECK(expected_pick_time(heavy, 1) > expected_pick_time(p, 1));
    CHECK_THROWS(expected_pick_time(p, 0));
  }

  TEST_CASE("order-line pick time population") {
    const auto lay = WarehouseLayout::build(10, 10);
    const auto model = ProductModel::defaults();
    RandomStream rs(5);
    std::vector<double> t;
    while (t.size() < 100000) {
      const auto placement = generate_product_placement(rs, lay, model);
      const auto runs = generate_pickruns(rs, lay, placement.products, model, 5000);
      for (const auto& r : runs) {
        for (const auto& l : r.lines) t.push_back(l.expected_time);
      }
    }
    t.resize(100000);
    double s = 0, s2 = 0;
    for (double x : t) {
      s += x;
      s2 += x * x;
    }
    const double mean = s / t.size();
    const double sd = std::sqrt(s2 / t.size() - mean * mean);
    CHECK(mean >= 10.3);
    CHECK(mean <= 13.3);
    CHECK(sd >= 8.0);
    CHECK(sd <= 13.0);
  }

  TEST_CASE("product placement") {
    const auto lay = WarehouseLayout::build(10, 10);
    const auto model = ProductModel::defaults();
    RandomStream rs(6);
    double placed = 0, blocks = 0, configured = 0;
    for (int i = 0; i < 100; ++i) {
      const auto pl = generate_product_placement(rs, lay, model);
      REQUIRE(pl.products.size() == 200u);
      for (const auto& p : pl.products) {
        CHECK(p.weight > 0.0);
        CHECK(p.volume > 0.0);
      }
      // The final block is cut at the end of the rack; only complete ones count.
      for (std::size_t b = 0; b + 1 < pl.runs.size(); ++b) {
        placed += pl.runs[b].placed_length;
        blocks += 1;
      }
    }
    // Expected block length under category-frequency mixing, computed directly.
    double wsum = 0;
    for (const auto& c : model.categories) {
      configured += c.frequency * c.run_lengths.mean();
      wsum += c.frequency;
    }
    configured /= wsum;
    CHECK(std::abs(placed / blocks - configured) / configured < 0.1);
  }

  TEST_CASE("product model json round trip") {
    const auto m = ProductModel::defaults();
    nlohmann::json j = m;
    const auto back = j.get<ProductModel>();
    CHECK(back.categories.size() == m.categories.size());
    CHECK(back.item_counts.mean() == doctest::Approx(m.item_counts.mean()));
    nlohmann::json bad = j;
    bad["categories"] = nlohmann::json::array();
    CHECK_THROWS(bad.get<ProductModel>());
  }
}
