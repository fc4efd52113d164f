#include "colpick/stochastic.hpp"

#include "colpick/errors.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace colpick {

namespace {

double draw(RandomStream& rs, const TruncatedGaussian& g) { return rs.truncated_normal(g.mean, g.sd, g.floor); }

}  // namespace

double sample_picker_speed(RandomStream& rs, const NoiseModel& noise) { return draw(rs, noise.picker_speed); }

double sample_amr_speed(RandomStream& rs, const NoiseModel& noise) { return draw(rs, noise.amr_speed); }

double sample_pick_time(RandomStream& rs, double expected_seconds, const NoiseModel& noise) {
  if (!(expected_seconds > 0.0)) throw std::invalid_argument("sample_pick_time: expected time must be positive");
  return rs.truncated_normal(expected_seconds, noise.pick_time_relative_sd * expected_seconds,
                             noise.pick_time_floor);
}

double sample_overtake_delay(RandomStream& rs, const NoiseModel& noise) { return draw(rs, noise.overtake); }

std::optional<double> sample_disruption(RandomStream& rs, const NoiseModel& noise) {
  if (!rs.bernoulli(noise.disruption_probability)) return std::nullopt;
  return draw(rs, noise.disruption);
}

std::vector<Disruption> sample_disruption_schedule(RandomStream& rs, int n_picks, const NoiseModel& noise) {
  if (n_picks < 0) throw std::invalid_argument("sample_disruption_schedule: negative pick count");
  std::vector<Disruption> out;
  for (int i = 0; i < n_picks; ++i) {
    if (auto d = sample_disruption(rs, noise)) out.push_back({i, *d});
  }
  return out;
}

double expected_pick_time(const Product& product, int n_items, const PickTimeCoefficients& c) {
  if (n_items < 1) throw std::invalid_argument("expected_pick_time: at least one item required");
  const int pairs = (n_items + 1) / 2;
  const int singles = n_items % 2;
  return c.a0 + c.a1 * pairs + c.a2 * singles + c.a3 * product.weight + c.a4 * product.volume;
}

int DiscreteTable::sample(RandomStream& rs) const {
  std::vector<double> w;
  w.reserve(entries.size());
  for (const auto& e : entries) w.push_back(e.second);
  return entries[rs.discrete(w)].first;
}

double DiscreteTable::mean() const {
  double num = 0.0;
  double den = 0.0;
  for (const auto& [value, weight] : entries) {
    num += value * weight;
    den += weight;
  }
  return den > 0.0 ? num / den : 0.0;
}

ProductModel ProductModel::defaults() {
  ProductModel m;
  // Loosely a grocery assortment: light snacks up to heavy drink packs.
  m.categories = {
      {"snacks", 0.20, 0.6, 0.4, 5.0, {{{2, 1.0}, {4, 2.0}, {6, 1.0}}}},
      {"dry_goods", 0.30, 1.5, 0.5, 1.5, {{{3, 1.0}, {5, 2.0}, {8, 1.0}}}},
      {"canned", 0.20, 3.0, 0.4, 1.0, {{{2, 1.0}, {4, 1.0}, {6, 1.0}}}},
      {"household", 0.15, 4.0, 0.5, 2.0, {{{2, 2.0}, {3, 1.0}, {4, 1.0}}}},
      {"beverages", 0.15, 9.0, 0.3, 1.0, {{{4, 1.0}, {6, 2.0}, {10, 1.0}}}},
  };
  m.item_counts.entries = {{1, 34}, {2, 18}, {3, 10}, {4, 7},  {5, 5},  {6, 5},  {8, 4}, {10, 4},
                           {12, 3}, {16, 3}, {20, 2}, {24, 2}, {30, 2}, {40, 1}, {48, 1}};
  return m;
}

namespace {

nlohmann::json table_to_json(const DiscreteTable& t) {
  nlohmann::json out = nlohmann::json::array();
  for (const auto& [value, weight] : t.entries) out.push_back({value, weight});
  return out;
}

DiscreteTable table_from_json(const nlohmann::json& j) {
  DiscreteTable t;
  for (const auto& e : j) t.entries.emplace_back(e.at(0).get<int>(), e.at(1).get<double>());
  if (t.entries.empty()) throw ConfigError("discrete table must not be empty");
  return t;
}

}  // namespace

void to_json(nlohmann::json& j, const ProductModel& m) {
  nlohmann::json cats = nlohmann::json::array();
  for (const auto& c : m.categories) {
    cats.push_back({{"name", c.name},
                    {"frequency", c.frequency},
                    {"weight_median", c.weight_median},
                    {"weight_sigma", c.weight_sigma},
                    {"volume_per_kg", c.volume_per_kg},
                    {"run_lengths", table_to_json(c.run_lengths)}});
  }
  j = {{"categories", cats},
       {"min_weight", m.min_weight},
       {"max_weight", m.max_weight},
       {"item_counts", table_to_json(m.item_counts)},
       {"pick_time",
        {{"a0", m.pick_time.a0}, {"a1", m.pick_time.a1}, {"a2", m.pick_time.a2}, {"a3", m.pick_time.a3},
         {"a4", m.pick_time.a4}}}};
}

void from_json(const nlohmann::json& j, ProductModel& m) {
  m = ProductModel::defaults();
  if (j.contains("categories")) {
    m.categories.clear();
    for (const auto& c : j.at("categories")) {
      CategorySpec spec;
      spec.name = c.value("name", std::string("category") + std::to_string(m.categories.size()));
      spec.frequency = c.at("frequency").get<double>();
      spec.weight_median = c.at("weight_median").get<double>();
      spec.weight_sigma = c.value("weight_sigma", 0.4);
      spec.volume_per_kg = c.value("volume_per_kg", 1.0);
      spec.run_lengths = table_from_json(c.at("run_lengths"));
      if (!(spec.frequency >= 0.0) || !(spec.weight_median > 0.0)) throw ConfigError("invalid category " + spec.name);
      m.categories.push_back(std::move(spec));
    }
    if (m.categories.empty()) throw ConfigError("product model needs at least one category");
  }
  m.min_weight = j.value("min_weight", m.min_weight);
  m.max_weight = j.value("max_weight", m.max_weight);
  if (!(m.min_weight > 0.0) || m.max_weight < m.min_weight) throw ConfigError("invalid weight bounds");
  if (j.contains("item_counts")) m.item_counts = table_from_json(j.at("item_counts"));
  for (const auto& [value, weight] : m.item_counts.entries) {
    if (value < 1 || weight < 0.0) throw ConfigError("item counts must be >= 1 with non-negative weights");
  }
  if (j.contains("pick_time")) {
    const auto& p = j.at("pick_time");
    m.pick_time.a0 = p.value("a0", m.pick_time.a0);
    m.pick_time.a1 = p.value("a1", m.pick_time.a1);
    m.pick_time.a2 = p.value("a2", m.pick_time.a2);
    m.pick_time.a3 = p.value("a3", m.pick_time.a3);
    m.pick_time.a4 = p.value("a4", m.pick_time.a4);
  }
}

ProductPlacement generate_product_placement(RandomStream& rs, const WarehouseLayout& layout,
                                            const ProductModel& model) {
  std::vector<NodeId> fill_order;
  fill_order.reserve(layout.pick_count());
  for (int a = 0; a < layout.n_aisles(); ++a) {
    for (Side s : {Side::kLeft, Side::kRight}) {
      for (int d = 0; d < layout.depth(); ++d) fill_order.push_back(layout.pick_node(a, d, s));
    }
  }

  std::vector<double> freq;
  for (const auto& c : model.categories) freq.push_back(c.frequency);

  ProductPlacement out;
  out.products.resize(layout.pick_count());
  std::size_t next = 0;
  while (next < fill_order.size()) {
    const int cat = static_cast<int>(rs.discrete(freq));
    const CategorySpec& spec = model.categories[cat];
    const int requested = spec.run_lengths.sample(rs);
    const int placed = static_cast<int>(std::min<std::size_t>(requested, fill_order.size() - next));
    for (int k = 0; k < placed; ++k) {
      const NodeId v = fill_order[next++];
      Product& p = out.products[v];
      p.id = v;
      p.category = cat;
      p.weight = std::clamp(rs.lognormal(spec.weight_median, spec.weight_sigma), model.min_weight, model.max_weight);
      p.volume = p.weight * spec.volume_per_kg;
    }
    out.runs.push_back({cat, requested, placed});
  }
  return out;
}

}  // namespace colpick
