#pragma once

#include "json.hpp"

#include <cstdint>
#include <string>

namespace colpick {

inline constexpr const char* kVersion = "0.1.0";

/// FNV-1a over the compact JSON dump; object keys are sorted, so the hash is canonical.
std::uint64_t config_hash(const nlohmann::json& config);
std::string hex64(std::uint64_t h);

/// First line of every CSV written by the tools.
std::string csv_preamble(const nlohmann::json& config);

}  // namespace colpick
