#pragma once

#include "colpick/env.hpp"

#include "json.hpp"

#include <string>
#include <vector>

namespace colpick {

/// Warehouse type S, M, L or XL; throws ConfigError otherwise.
ScenarioConfig preset(const std::string& name);
std::vector<std::string> preset_names();

void to_json(nlohmann::json& j, const ScenarioConfig& s);
void from_json(const nlohmann::json& j, ScenarioConfig& s);
void to_json(nlohmann::json& j, const NoiseModel& n);
void from_json(const nlohmann::json& j, NoiseModel& n);
void to_json(nlohmann::json& j, const SimOptions& o);
void from_json(const nlohmann::json& j, SimOptions& o);
/// Accepts {"preset": "S"} plus overrides in "scenario".
void to_json(nlohmann::json& j, const EnvConfig& c);
void from_json(const nlohmann::json& j, EnvConfig& c);

}  // namespace colpick
