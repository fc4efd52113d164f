#pragma once

#include "colpick/config.hpp"
#include "colpick/morl.hpp"
#include "colpick/oracle.hpp"

#include "json.hpp"

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace colpick {

/// Flags shared by all subcommands; unset values fall back to the config file, then to defaults.
struct CommonOptions {
  std::optional<std::filesystem::path> config;
  std::optional<std::uint64_t> seed;
  std::optional<int> episodes;
  std::optional<std::string> preset;
  std::optional<std::string> policy;
  std::optional<std::filesystem::path> out;
};

nlohmann::json read_json_file(const std::filesystem::path& path);

/// Environment from the config ("env" object or top level), with the preset flag applied.
EnvConfig resolve_env(const nlohmann::json& config, const std::optional<std::string>& preset);

/// "greedy", "vi", "random" or "checkpoint:PATH".
std::unique_ptr<AllocationPolicy> make_policy(const std::string& spec, std::uint64_t seed);

/// Mean and 95% confidence half-width 1.96 sd / sqrt(n), sample sd.
struct MeanCi {
  double mean = 0.0;
  double half_width = 0.0;
};
MeanCi mean_ci(const std::vector<double>& x);

void to_json(nlohmann::json& j, const InstanceSpec& s);
void from_json(const nlohmann::json& j, InstanceSpec& s);

/// Each command writes its CSV to `os`, or into --out when given, and returns a process exit code.
int cmd_simulate(const CommonOptions& opt, std::ostream& os);
int cmd_train(const CommonOptions& opt, std::ostream& log);
int cmd_pareto(const CommonOptions& opt, const std::filesystem::path& run_dir, std::ostream& os);
int cmd_oracle_compare(const CommonOptions& opt, const std::filesystem::path& instances, std::ostream& os);
int cmd_gen_instances(const CommonOptions& opt, std::ostream& log);

}  // namespace colpick
