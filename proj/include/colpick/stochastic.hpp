#pragma once

#include "colpick/layout.hpp"
#include "colpick/random.hpp"

#include "json.hpp"

#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace colpick {

/// Gaussian with a lower truncation floor.
struct TruncatedGaussian {
  double mean;
  double sd;
  double floor;
};

/// All noise parameters of the simulator.
struct NoiseModel {
  TruncatedGaussian picker_speed{1.25, 0.15, 0.3};  // m/s
  TruncatedGaussian amr_speed{1.5, 0.15, 0.3};      // m/s
  double pick_time_relative_sd = 0.1;               // sd = 0.1 * expected pick time
  double pick_time_floor = 0.5;                     // s
  double disruption_probability = 1.0 / 50.0;       // per pick
  TruncatedGaussian disruption{60.0, 7.5, 5.0};     // s
  TruncatedGaussian overtake{15.0, 2.5, 1.0};       // s
};

double sample_picker_speed(RandomStream& rs, const NoiseModel& noise = {});
double sample_amr_speed(RandomStream& rs, const NoiseModel& noise = {});
double sample_pick_time(RandomStream& rs, double expected_seconds, const NoiseModel& noise = {});
double sample_overtake_delay(RandomStream& rs, const NoiseModel& noise = {});

/// Duration of the disruption hitting one pick, if any.
std::optional<double> sample_disruption(RandomStream& rs, const NoiseModel& noise = {});

struct Disruption {
  int pick_index;
  double duration;
};

/// Disruptions over `n_picks` consecutive picks (one Bernoulli draw per pick).
std::vector<Disruption> sample_disruption_schedule(RandomStream& rs, int n_picks, const NoiseModel& noise = {});

struct Product {
  int id = 0;
  double weight = 1.0;  // kg per item
  double volume = 1.0;  // liters per item
  int category = 0;
};

/// t = a0 + a1 * item pairs + a2 * single items + a3 * weight + a4 * volume.
struct PickTimeCoefficients {
  double a0 = 2.0;
  double a1 = 2.5;
  double a2 = 1.5;
  double a3 = 0.35;
  double a4 = 0.08;
};

double expected_pick_time(const Product& product, int n_items, const PickTimeCoefficients& coef = {});

/// Discrete distribution over integer values with relative weights.
struct DiscreteTable {
  std::vector<std::pair<int, double>> entries;

  int sample(RandomStream& rs) const;
  double mean() const;
};

struct CategorySpec {
  std::string name;
  double frequency = 1.0;       // relative share of category runs
  double weight_median = 1.0;   // kg, lognormal median
  double weight_sigma = 0.4;    // lognormal shape
  double volume_per_kg = 1.0;   // liters per kg
  DiscreteTable run_lengths;    // locations per contiguous block
};

/// Synthetic product assortment and order-line model.
struct ProductModel {
  std::vector<CategorySpec> categories;
  double min_weight = 0.2;
  double max_weight = 15.0;
  DiscreteTable item_counts;  // items per order line
  PickTimeCoefficients pick_time;

  static ProductModel defaults();
};

void to_json(nlohmann::json& j, const ProductModel& m);
void from_json(const nlohmann::json& j, ProductModel& m);

struct CategoryRun {
  int category;
  int requested_length;
  int placed_length;
};

struct ProductPlacement {
  std::vector<Product> products;  // indexed by pick node
  std::vector<CategoryRun> runs;  // in fill order
};

/// Fills every pick location along the rack faces (aisle by aisle, left face
/// then right face, bottom to top) with blocks of same-category products.
ProductPlacement generate_product_placement(RandomStream& rs, const WarehouseLayout& layout,
                                            const ProductModel& model);

}  // namespace colpick
