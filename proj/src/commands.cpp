#include "colpick/commands.hpp"

#include "colpick/errors.hpp"
#include "colpick/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <numeric>

namespace colpick {

namespace {

std::string fmt(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", x);
  return buf;
}

/// Writes to <out>/<name> when --out is set, else to the fallback stream.
class Sink {
 public:
  Sink(const std::optional<std::filesystem::path>& out, const std::string& name, std::ostream& fallback) {
    if (out) {
      std::filesystem::create_directories(*out);
      file_.open(*out / name);
      if (!file_) throw ConfigError("cannot write " + (*out / name).string());
    }
    os_ = file_.is_open() ? static_cast<std::ostream*>(&file_) : &fallback;
  }
  std::ostream& operator*() { return *os_; }

 private:
  std::ofstream file_;
  std::ostream* os_;
};

std::filesystem::path require_out(const CommonOptions& opt, const char* cmd) {
  if (!opt.out) throw ConfigError(std::string(cmd) + " needs --out DIR");
  std::filesystem::create_directories(*opt.out);
  return *opt.out;
}

nlohmann::json load_config(const CommonOptions& opt) {
  return opt.config ? read_json_file(*opt.config) : nlohmann::json::object();
}

std::uint64_t resolve_seed(const CommonOptions& opt, const nlohmann::json& config) {
  if (opt.seed) return *opt.seed;
  return config.value("seed", std::uint64_t{0});
}

int resolve_episodes(const CommonOptions& opt, const nlohmann::json& config, const char* key, int fallback) {
  const int n = opt.episodes ? *opt.episodes : config.value(key, fallback);
  if (n < 1) throw ConfigError("episode count must be positive");
  return n;
}

std::vector<std::filesystem::path> json_files(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir)) throw ConfigError("not a directory: " + dir.string());
  std::vector<std::filesystem::path> out;
  for (const auto& e : std::filesystem::directory_iterator(dir)) {
    if (e.is_regular_file() && e.path().extension() == ".json") out.push_back(e.path());
  }
  std::sort(out.begin(), out.end());
  return out;
}

struct EpisodeRow {
  std::uint64_t seed;
  EpisodeMetrics metrics;
};

std::vector<EpisodeRow> run_episodes(AllocationPolicy& policy, const EnvConfig& env_cfg, int episodes,
                                     std::uint64_t seed) {
  PickingEnv env(env_cfg);
  env.set_compute_features(policy.needs_features());
  std::vector<EpisodeRow> rows;
  for (int e = 0; e < episodes; ++e) {
    const std::uint64_t s = derive_seed(seed, {static_cast<std::uint64_t>(e)});
    env.reset(s);
    policy.begin_episode(s);
    while (!env.done()) {
      const auto& obs = env.observation();
      const DecisionContext ctx{env.sim(), obs.picker, obs.mask, policy.needs_features() ? &obs.features : nullptr};
      env.step(policy.choose(ctx));
    }
    rows.push_back({s, env.metrics()});
  }
  return rows;
}

nn::ActorKind actor_kind(const std::string& name) {
  if (name == "aemo") return nn::ActorKind::kAemo;
  if (name == "invff") return nn::ActorKind::kInvFF;
  throw ConfigError("actor must be aemo or invff");
}

}  // namespace

nlohmann::json read_json_file(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("cannot read " + path.string());
  try {
    nlohmann::json j;
    is >> j;
    return j;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

EnvConfig resolve_env(const nlohmann::json& config, const std::optional<std::string>& preset_name) {
  nlohmann::json env = config.contains("env") ? config.at("env") : config;
  if (preset_name) {
    env["preset"] = *preset_name;
    if (env.contains("scenario")) {
      for (const char* k : {"n_aisles", "depth", "n_pickers", "n_amrs", "total_picks"}) env["scenario"].erase(k);
    }
  }
  return env.get<EnvConfig>();
}

std::unique_ptr<AllocationPolicy> make_policy(const std::string& spec, std::uint64_t seed) {
  const std::string prefix = "checkpoint:";
  if (spec.rfind(prefix, 0) == 0) {
    const std::filesystem::path path = spec.substr(prefix.size());
    return std::make_unique<NeuralPolicy>(nn::load_checkpoint(path), "checkpoint:" + path.filename().string());
  }
  if (spec == "greedy" || spec == "vi" || spec == "random") return make_baseline_policy(spec, seed);
  throw ConfigError("unknown policy '" + spec + "' (expected greedy, vi, random or checkpoint:PATH)");
}

MeanCi mean_ci(const std::vector<double>& x) {
  MeanCi r;
  if (x.empty()) return r;
  const double n = static_cast<double>(x.size());
  r.mean = std::accumulate(x.begin(), x.end(), 0.0) / n;
  if (x.size() < 2) return r;
  double ss = 0.0;
  for (double v : x) ss += (v - r.mean) * (v - r.mean);
  r.half_width = 1.96 * std::sqrt(ss / (n - 1.0)) / std::sqrt(n);
  return r;
}

void to_json(nlohmann::json& j, const InstanceSpec& s) {
  j = {{"n_aisles", s.n_aisles},       {"depth", s.depth},         {"min_items", s.min_items},
       {"max_items", s.max_items},     {"min_pickers", s.min_pickers}, {"max_pickers", s.max_pickers},
       {"min_amrs", s.min_amrs},       {"max_amrs", s.max_amrs},   {"diverse_start", s.diverse_start},
       {"load_time", s.load_time}};
}

void from_json(const nlohmann::json& j, InstanceSpec& s) {
  s.n_aisles = j.value("n_aisles", s.n_aisles);
  s.depth = j.value("depth", s.depth);
  s.min_items = j.value("min_items", s.min_items);
  s.max_items = j.value("max_items", s.max_items);
  s.min_pickers = j.value("min_pickers", s.min_pickers);
  s.max_pickers = j.value("max_pickers", s.max_pickers);
  s.min_amrs = j.value("min_amrs", s.min_amrs);
  s.max_amrs = j.value("max_amrs", s.max_amrs);
  s.diverse_start = j.value("diverse_start", s.diverse_start);
  s.load_time = j.value("load_time", s.load_time);
}

// ---------------------------------------------------------------------------

int cmd_simulate(const CommonOptions& opt, std::ostream& os) {
  const nlohmann::json config = load_config(opt);
  const EnvConfig env = resolve_env(config, opt.preset);
  const std::uint64_t seed = resolve_seed(opt, config);
  const int episodes = resolve_episodes(opt, config, "episodes", 100);
  const std::string spec = opt.policy ? *opt.policy : config.value("policy", std::string("greedy"));
  auto policy = make_policy(spec, derive_seed(seed, {0x5241}));
  const nlohmann::json effective = {
      {"command", "simulate"}, {"env", env}, {"policy", spec}, {"seed", seed}, {"episodes", episodes}};

  const auto rows = run_episodes(*policy, env, episodes, seed);
  Sink out(opt.out, "simulate.csv", os);
  *out << csv_preamble(effective) << '\n' << "episode,seed,completion_time_s,workload_sd_kg";
  for (int k = 0; k < env.scenario.n_pickers; ++k) *out << ",workload_" << k << "_kg";
  *out << '\n';
  std::vector<double> c, sd;
  std::vector<std::vector<double>> w(env.scenario.n_pickers);
  for (std::size_t e = 0; e < rows.size(); ++e) {
    const auto& m = rows[e].metrics;
    *out << e << ',' << rows[e].seed << ',' << fmt(m.completion_time) << ',' << fmt(m.workload_sd);
    for (std::size_t k = 0; k < m.workloads.size(); ++k) {
      *out << ',' << fmt(m.workloads[k]);
      w[k].push_back(m.workloads[k]);
    }
    *out << '\n';
    c.push_back(m.completion_time);
    sd.push_back(m.workload_sd);
  }
  *out << "mean,," << fmt(mean_ci(c).mean) << ',' << fmt(mean_ci(sd).mean);
  for (const auto& v : w) *out << ',' << fmt(mean_ci(v).mean);
  *out << "\nci95,," << fmt(mean_ci(c).half_width) << ',' << fmt(mean_ci(sd).half_width);
  for (const auto& v : w) *out << ',' << fmt(mean_ci(v).half_width);
  *out << '\n';
  return 0;
}

int cmd_train(const CommonOptions& opt, std::ostream& log) {
  nlohmann::json config = load_config(opt);
  const auto dir = require_out(opt, "train");
  const std::string mode = config.value("mode", std::string("ppo"));
  const EnvConfig env = resolve_env(config, opt.preset);
  const std::uint64_t seed = resolve_seed(opt, config);
  config["env"] = env;
  config["seed"] = seed;
  if (opt.episodes) config["eval_episodes"] = *opt.episodes;

  if (mode == "morl") {
    MorlConfig mc = morl_config_from_json(config);
    mc.run_dir = dir;
    const auto res = run_morl(mc, [&](const std::string& phase, int g, int task, const IterationStats& s) {
      log << phase << " generation " << g << " task " << task << " iteration " << s.iteration << " steps "
          << s.steps << " reward " << s.mean_episode_reward[0] << ',' << s.mean_episode_reward[1] << '\n';
    });
    log << "archive " << res.archive.size() << " policies, hypervolume " << res.hv_history.back() << '\n';
    return 0;
  }
  if (mode != "ppo" && mode != "efficiency") throw ConfigError("train mode must be ppo, efficiency or morl");

  const bool efficiency = mode == "efficiency";
  PPOConfig pc = config.contains("ppo") ? config.at("ppo").get<PPOConfig>() : PPOConfig{};
  Weights omega = efficiency ? Weights{1.0, 0.0} : config.value("omega", Weights{1.0, 0.0});
  const int iterations = config.value("iterations", 10);
  const int every = config.value("checkpoint_every", 0);
  const int eval_episodes = config.value("eval_episodes", 20);
  if (iterations < 1) throw ConfigError("iterations must be positive");
  const std::string actor = config.value("actor", std::string("aemo"));
  config["mode"] = mode;
  config["omega"] = omega;
  config["ppo"] = pc;
  config["iterations"] = iterations;

  nn::PolicyModel model(actor_kind(actor), efficiency);
  if (config.contains("init_checkpoint")) {
    model = nn::load_checkpoint(config.at("init_checkpoint").get<std::string>());
    model.efficiency_only = efficiency;
  } else {
    model.init(derive_seed(seed, {1}));
  }
  std::filesystem::create_directories(dir / "checkpoints");
  std::ofstream(dir / "config.json") << config.dump(2) << '\n';
  const std::string preamble = csv_preamble(config);
  const nlohmann::json meta = {{"version", kVersion}, {"config_hash", hex64(config_hash(config))}, {"omega", omega}};

  std::ofstream csv(dir / "iterations.csv");
  csv << preamble << '\n'
      << "iteration,steps,episodes,efficiency_reward,fairness_reward,policy_loss,value_loss,entropy,approx_kl,"
         "clip_fraction\n";
  PPOTrainer tr(model, pc, omega, [env] { return std::make_unique<PickingRlEnv>(env); }, seed);
  for (int it = 1; it <= iterations; ++it) {
    const auto s = tr.iterate();
    csv << s.iteration << ',' << s.steps << ',' << s.episodes << ',' << fmt(s.mean_episode_reward[0]) << ','
        << fmt(s.mean_episode_reward[1]) << ',' << fmt(s.policy_loss) << ',' << fmt(s.value_loss) << ','
        << fmt(s.entropy) << ',' << fmt(s.approx_kl) << ',' << fmt(s.clip_fraction) << '\n';
    log << "iteration " << s.iteration << " steps " << s.steps << " reward " << s.mean_episode_reward[0] << ','
        << s.mean_episode_reward[1] << " entropy " << s.entropy << '\n';
    if (every > 0 && it % every == 0) {
      nn::save_checkpoint(dir / "checkpoints" / ("iter_" + std::to_string(it) + ".json"), tr.model(), meta);
    }
  }
  nn::save_checkpoint(dir / "final.json", tr.model(), meta);

  NeuralPolicy p(tr.model());
  const auto ev = evaluate_policy(p, env, eval_episodes, derive_seed(seed, {0xE7A1}));
  std::ofstream eval(dir / "evaluation.csv");
  eval << preamble << '\n'
       << "episodes,completion_time_s,completion_ci95,workload_sd_kg,workload_sd_ci95\n"
       << ev.episodes << ',' << fmt(ev.mean_completion) << ',' << fmt(mean_ci(ev.completion).half_width) << ','
       << fmt(ev.mean_workload_sd) << ',' << fmt(mean_ci(ev.workload_sd).half_width) << '\n';
  log << "final completion " << ev.mean_completion << " s, workload sd " << ev.mean_workload_sd << " kg\n";
  return 0;
}

int cmd_pareto(const CommonOptions& opt, const std::filesystem::path& run_dir, std::ostream& os) {
  const nlohmann::json run_config = read_json_file(run_dir / "config.json");
  const nlohmann::json config = opt.config ? read_json_file(*opt.config) : run_config;
  const EnvConfig env = resolve_env(config, opt.preset);
  const std::uint64_t seed = resolve_seed(opt, config);
  const int episodes = resolve_episodes(opt, config, "eval_episodes", 20);
  const std::uint64_t eval_seed = derive_seed(seed, {0xE7A1});

  std::vector<std::filesystem::path> ckpts;
  if (std::filesystem::is_directory(run_dir / "checkpoints")) ckpts = json_files(run_dir / "checkpoints");
  if (std::filesystem::exists(run_dir / "final.json")) ckpts.push_back(run_dir / "final.json");
  if (ckpts.empty()) throw ConfigError("no checkpoints in " + run_dir.string());

  Point2 reference;
  const auto archive_path = run_dir / "archive.json";
  if (std::filesystem::exists(archive_path) && read_json_file(archive_path).contains("reference")) {
    reference = read_json_file(archive_path).at("reference").get<Point2>();
  } else {
    auto random = make_baseline_policy("random", derive_seed(seed, {0x5241}));
    const auto base = evaluate_policy(*random, env, episodes, eval_seed);
    for (int o = 0; o < 2; ++o) reference[o] = std::min(1.5 * base.mean_reward[o], base.mean_reward[o] - 1.0);
  }

  struct Row {
    std::string name;
    Weights omega;
    MeanCi c, sd;
    Point2 point;
  };
  std::vector<Row> rows;
  for (const auto& path : ckpts) {
    nlohmann::json meta;
    NeuralPolicy p(nn::load_checkpoint(path, &meta));
    const auto ev = evaluate_policy(p, env, episodes, eval_seed);
    rows.push_back({path.filename().string(), meta.value("omega", Weights{0.0, 0.0}), mean_ci(ev.completion),
                    mean_ci(ev.workload_sd), ev.mean_reward});
  }
  std::vector<Point2> pts;
  for (const auto& r : rows) pts.push_back(r.point);
  const double hv = hypervolume_2d(pts, reference);

  const nlohmann::json effective = {{"command", "pareto"},
                                    {"run", run_dir.filename().string()},
                                    {"env", env},
                                    {"seed", seed},
                                    {"episodes", episodes}};
  const std::string preamble = csv_preamble(effective);
  Sink out(opt.out, "front.csv", os);
  *out << preamble << '\n'
       << "policy,omega_efficiency,completion_time_s,completion_ci95,workload_sd_kg,workload_sd_ci95,"
          "efficiency_reward,fairness_reward,non_dominated\n";
  for (const auto& r : rows) {
    bool nd = true;
    for (const auto& q : pts) nd = nd && !dominates(q, r.point);
    *out << r.name << ',' << fmt(r.omega[0]) << ',' << fmt(r.c.mean) << ',' << fmt(r.c.half_width) << ','
         << fmt(r.sd.mean) << ',' << fmt(r.sd.half_width) << ',' << fmt(r.point[0]) << ',' << fmt(r.point[1]) << ','
         << (nd ? "true" : "false") << '\n';
  }
  if (opt.out) {
    std::ofstream plot(*opt.out / "front_plot.dat");
    plot << preamble << '\n' << "# completion_time_s workload_sd_kg non_dominated\n";
    for (const auto& r : rows) {
      bool nd = true;
      for (const auto& q : pts) nd = nd && !dominates(q, r.point);
      plot << fmt(r.c.mean) << ' ' << fmt(r.sd.mean) << ' ' << (nd ? 1 : 0) << '\n';
    }
    std::ofstream summary(*opt.out / "summary.csv");
    summary << preamble << '\n'
            << "reference_efficiency,reference_fairness,hypervolume\n"
            << fmt(reference[0]) << ',' << fmt(reference[1]) << ',' << fmt(hv) << '\n';
  } else {
    *out << "# hypervolume=" << fmt(hv) << " reference=" << fmt(reference[0]) << ';' << fmt(reference[1]) << '\n';
  }
  return 0;
}

int cmd_oracle_compare(const CommonOptions& opt, const std::filesystem::path& instances, std::ostream& os) {
  const auto files = json_files(instances);
  if (files.empty()) throw ConfigError("no instance files in " + instances.string());
  const std::uint64_t seed = opt.seed.value_or(0);
  std::unique_ptr<AllocationPolicy> extra;
  if (opt.policy) extra = make_policy(*opt.policy, seed);

  const nlohmann::json effective = {{"command", "oracle-compare"},
                                    {"instances", files.size()},
                                    {"policy", opt.policy.value_or("")},
                                    {"seed", seed}};
  Sink out(opt.out, "oracle_compare.csv", os);
  *out << csv_preamble(effective) << '\n' << "instance,optimum,greedy,vi";
  if (extra) *out << ",policy";
  *out << ",greedy_gap_pct,vi_gap_pct";
  if (extra) *out << ",policy_gap_pct";
  *out << '\n';
  auto greedy = make_baseline_policy("greedy");
  auto vi = make_baseline_policy("vi");
  for (const auto& f : files) {
    const auto inst = read_json_file(f).get<DeterministicInstance>();
    const double opt_c = solve_exact(inst, Objective::efficiency()).schedule.completion;
    const double g = simulate_deterministic(inst, *greedy).metrics.completion_time;
    const double v = simulate_deterministic(inst, *vi).metrics.completion_time;
    const double p = extra ? simulate_deterministic(inst, *extra).metrics.completion_time : 0.0;
    auto gap = [&](double x) { return opt_c > 0.0 ? 100.0 * (x - opt_c) / opt_c : 0.0; };
    *out << (inst.id.empty() ? f.stem().string() : inst.id) << ',' << fmt(opt_c) << ',' << fmt(g) << ',' << fmt(v);
    if (extra) *out << ',' << fmt(p);
    *out << ',' << fmt(gap(g)) << ',' << fmt(gap(v));
    if (extra) *out << ',' << fmt(gap(p));
    *out << '\n';
  }
  return 0;
}

int cmd_gen_instances(const CommonOptions& opt, std::ostream& log) {
  const nlohmann::json config = load_config(opt);
  const auto dir = require_out(opt, "gen-instances");
  InstanceSpec spec = config.contains("spec") ? config.at("spec").get<InstanceSpec>() : InstanceSpec{};
  if (opt.preset) throw ConfigError("gen-instances takes its dimensions from the config, not a preset");
  if (spec.max_items > kMaxExactItems || spec.max_pickers > kMaxExactPickers || spec.min_items < 1 ||
      spec.min_items > spec.max_items || spec.min_pickers < 1 || spec.min_pickers > spec.max_pickers ||
      spec.min_amrs < 1 || spec.min_amrs > spec.max_amrs) {
    throw ConfigError("instance spec outside the exact-solver bounds");
  }
  const std::uint64_t seed = resolve_seed(opt, config);
  const int count = resolve_episodes(opt, config, "count", 20);
  const nlohmann::json effective = {{"command", "gen-instances"}, {"spec", spec}, {"seed", seed}, {"count", count}};
  const std::string hash = hex64(config_hash(effective));

  std::ofstream index(dir / "index.csv");
  index << csv_preamble(effective) << '\n' << "instance,file,items,pickers,amrs\n";
  for (int i = 0; i < count; ++i) {
    char name[32];
    std::snprintf(name, sizeof name, "instance_%03d", i);
    RandomStream rs(derive_seed(seed, {static_cast<std::uint64_t>(i)}));
    const auto inst = random_instance(rs, spec, name);
    nlohmann::json j = inst;
    j["generator"] = {{"version", kVersion}, {"config_hash", hash}};
    std::ofstream(dir / (std::string(name) + ".json")) << j.dump(2) << '\n';
    index << name << ',' << name << ".json," << inst.n_items() << ',' << inst.n_pickers() << ',' << inst.n_amrs()
          << '\n';
  }
  log << "wrote " << count << " instances to " << dir.string() << '\n';
  return 0;
}

}  // namespace colpick
