#include "colpick/commands.hpp"
#include "colpick/errors.hpp"
#include "colpick/report.hpp"

#include "CLI11.hpp"

#include <iostream>

using namespace colpick;

namespace {

void add_common(CLI::App* cmd, CommonOptions& o, bool policy) {
  cmd->add_option_function<std::string>("--config", [&o](const std::string& v) { o.config = v; }, "JSON config file");
  cmd->add_option_function<std::uint64_t>("--seed", [&o](std::uint64_t v) { o.seed = v; }, "Base seed");
  cmd->add_option_function<int>("--episodes", [&o](int v) { o.episodes = v; }, "Episode count");
  cmd->add_option_function<std::string>("--preset", [&o](const std::string& v) { o.preset = v; }, "Warehouse type")
      ->check(CLI::IsMember({"S", "M", "L", "XL"}));
  if (policy) {
    cmd->add_option_function<std::string>("--policy", [&o](const std::string& v) { o.policy = v; },
                                          "greedy, vi, random or checkpoint:PATH");
  }
  cmd->add_option_function<std::string>("--out", [&o](const std::string& v) { o.out = v; }, "Output directory");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Collaborative picker allocation: simulation, training and evaluation"};
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(1);
  CommonOptions opt;
  std::string run_dir, instances;

  auto* sim = app.add_subcommand("simulate", "Evaluate a policy over seeded episodes");
  add_common(sim, opt, true);
  auto* train = app.add_subcommand("train", "Train with PPO or the multi-objective loop");
  add_common(train, opt, false);
  auto* pareto = app.add_subcommand("pareto", "Evaluate the checkpoints of a training run");
  add_common(pareto, opt, false);
  pareto->add_option("--run", run_dir, "Training run directory")->required();
  auto* oracle = app.add_subcommand("oracle-compare", "Compare heuristics with exact optima");
  add_common(oracle, opt, true);
  oracle->add_option("--instances", instances, "Directory of instance JSON files")->required();
  auto* gen = app.add_subcommand("gen-instances", "Write random exact-solvable instances");
  add_common(gen, opt, false);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*sim) return cmd_simulate(opt, std::cout);
    if (*train) return cmd_train(opt, std::cerr);
    if (*pareto) return cmd_pareto(opt, run_dir, std::cout);
    if (*oracle) return cmd_oracle_compare(opt, instances, std::cout);
    if (*gen) return cmd_gen_instances(opt, std::cerr);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const SimulationIntegrityError& e) {
    std::cerr << "simulation integrity error: " << e.what() << '\n';
    return 3;
  } catch (const InvalidActionError& e) {
    std::cerr << "simulation integrity error: " << e.what() << '\n';
    return 3;
  } catch (const TrainingFault& e) {
    std::cerr << "training fault: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
