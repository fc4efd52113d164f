#include "colpick/report.hpp"

#include <cstdio>

namespace colpick {

std::uint64_t config_hash(const nlohmann::json& config) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : config.dump()) h = (h ^ c) * 1099511628211ULL;
  return h;
}

std::string hex64(std::uint64_t h) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::string csv_preamble(const nlohmann::json& config) {
  return std::string("# colpick ") + kVersion + " config_hash=" + hex64(config_hash(config));
}

}  // namespace colpick
