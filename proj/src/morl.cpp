#include "colpick/morl.hpp"

#include "colpick/config.hpp"
#include "colpick/errors.hpp"
#include "colpick/report.hpp"

#include <unsupported/Eigen/LevenbergMarquardt>
#include <unsupported/Eigen/NumericalDiff>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <set>

namespace colpick {

bool dominates(const Point2& a, const Point2& b) {
  return a[0] >= b[0] && a[1] >= b[1] && (a[0] > b[0] || a[1] > b[1]);
}

std::vector<Point2> non_dominated(std::vector<Point2> points) {
  std::sort(points.begin(), points.end(), [](const Point2& a, const Point2& b) {
    return a[0] != b[0] ? a[0] > b[0] : a[1] > b[1];
  });
  std::vector<Point2> out;
  for (const auto& p : points) {
    if (out.empty() || p[1] > out.back()[1]) out.push_back(p);
  }
  return out;
}

double hypervolume_2d(std::vector<Point2> points, const Point2& reference) {
  std::erase_if(points, [&](const Point2& p) { return !(p[0] > reference[0] && p[1] > reference[1]); });
  double area = 0.0;
  double prev = reference[1];
  for (const auto& p : non_dominated(std::move(points))) {
    area += (p[0] - reference[0]) * (p[1] - prev);
    prev = p[1];
  }
  return area;
}

double sparsity(std::vector<Point2> points) {
  if (points.size() < 2) return 0.0;
  std::sort(points.begin(), points.end());
  double total = 0.0;
  for (int o = 0; o < 2; ++o) {
    double sq = 0.0;
    for (std::size_t i = 1; i < points.size(); ++i) sq += std::pow(points[i][o] - points[i - 1][o], 2);
    total += sq / static_cast<double>(points.size() - 1);
  }
  return total / 2.0;
}

// ---------------------------------------------------------------------------

bool ParetoArchive::insert(const ArchiveEntry& e) {
  for (const auto& x : entries_) {
    if (dominates(x.point, e.point) || x.point == e.point) return false;
  }
  std::erase_if(entries_, [&](const ArchiveEntry& x) { return dominates(e.point, x.point); });
  entries_.push_back(e);
  std::sort(entries_.begin(), entries_.end(),
            [](const ArchiveEntry& a, const ArchiveEntry& b) { return a.point[0] > b.point[0]; });
  return true;
}

std::vector<Point2> ParetoArchive::points() const {
  std::vector<Point2> out;
  for (const auto& e : entries_) out.push_back(e.point);
  return out;
}

bool ParetoArchive::is_non_dominated() const {
  for (const auto& a : entries_) {
    for (const auto& b : entries_) {
      if (dominates(a.point, b.point)) return false;
    }
  }
  return true;
}

nlohmann::json ParetoArchive::to_json() const {
  nlohmann::json pts = nlohmann::json::array();
  for (const auto& e : entries_) {
    pts.push_back({{"efficiency", e.point[0]},
                   {"fairness", e.point[1]},
                   {"policy", e.policy},
                   {"omega", e.omega},
                   {"checkpoint", e.checkpoint}});
  }
  return {{"points", pts}};
}

Point2 ObjectiveScale::normalize(const Point2& p) const {
  Point2 out;
  for (int o = 0; o < 2; ++o) {
    const double span = ideal[o] - reference[o];
    out[o] = span > 0.0 ? (p[o] - reference[o]) / span : 0.0;
  }
  return out;
}

// ---------------------------------------------------------------------------

double Sigmoid::operator()(double w) const { return A / (1.0 + std::exp(-a * (w - b))) + c; }

namespace {

struct SigmoidResidual : Eigen::DenseFunctor<double> {
  const std::vector<double>* w;
  const std::vector<double>* y;
  SigmoidResidual(const std::vector<double>& w_, const std::vector<double>& y_)
      : Eigen::DenseFunctor<double>(4, static_cast<int>(w_.size())), w(&w_), y(&y_) {}
  int operator()(const InputType& p, ValueType& r) const {
    const Sigmoid f{p[0], p[1], p[2], p[3]};
    for (std::size_t i = 0; i < w->size(); ++i) r[static_cast<Eigen::Index>(i)] = f((*w)[i]) - (*y)[i];
    return 0;
  }
};

double sse(const Sigmoid& f, const std::vector<double>& w, const std::vector<double>& y) {
  double s = 0.0;
  for (std::size_t i = 0; i < w.size(); ++i) s += std::pow(f(w[i]) - y[i], 2);
  return s;
}

bool finite(const Sigmoid& f) {
  return std::isfinite(f.A) && std::isfinite(f.a) && std::isfinite(f.b) && std::isfinite(f.c);
}

}  // namespace

Sigmoid fit_sigmoid(const std::vector<double>& w, const std::vector<double>& y) {
  if (w.size() != y.size() || w.empty()) throw std::invalid_argument("fit_sigmoid: need matching non-empty data");
  const double mean = std::accumulate(y.begin(), y.end(), 0.0) / static_cast<double>(y.size());
  Sigmoid best{0.0, 1.0, 0.5, mean};
  double best_sse = sse(best, w, y);
  if (w.size() < 4) return best;
  const auto [lo, hi] = std::minmax_element(y.begin(), y.end());
  const double range = std::max(*hi - *lo, 1e-9);
  // Sign of the trend from the covariance with w.
  const double wm = std::accumulate(w.begin(), w.end(), 0.0) / static_cast<double>(w.size());
  double cov = 0.0;
  for (std::size_t i = 0; i < w.size(); ++i) cov += (w[i] - wm) * (y[i] - mean);
  for (double slope : {2.0, 6.0, 15.0}) {
    for (double mid : {0.25, 0.5, 0.75}) {
      Eigen::VectorXd p(4);
      p << (cov >= 0.0 ? range : -range), slope, mid, (cov >= 0.0 ? *lo : *hi);
      SigmoidResidual fn(w, y);
      Eigen::NumericalDiff<SigmoidResidual> diff(fn);
      Eigen::LevenbergMarquardt<Eigen::NumericalDiff<SigmoidResidual>> lm(diff);
      lm.setMaxfev(400);
      lm.minimize(p);
      const Sigmoid f{p[0], p[1], p[2], p[3]};
      const double s = sse(f, w, y);
      if (finite(f) && std::isfinite(s) && s < best_sse) {
        best = f;
        best_sse = s;
      }
    }
  }
  return best;
}

Point2 HyperbolicModel::predict_delta(const Weights& omega) const {
  if (!fitted) return fallback;
  return {f[0](omega[0]), f[1](omega[1])};
}

HyperbolicModel fit_hyperbolic(const std::vector<TrainingRecord>& records, const Point2& point,
                               const ObjectiveScale& scale, double radius) {
  HyperbolicModel m;
  if (records.empty()) return m;
  const Point2 q = scale.normalize(point);
  auto dist = [&](const TrainingRecord& r) {
    const Point2 b = scale.normalize(r.before);
    return std::hypot(b[0] - q[0], b[1] - q[1]);
  };
  std::vector<const TrainingRecord*> near;
  for (const auto& r : records) {
    if (dist(r) <= radius) near.push_back(&r);
  }
  std::set<double> distinct;
  for (const auto* r : near) distinct.insert(r->omega[0]);
  if (near.size() < 4 || distinct.size() < 2) {
    const auto& nearest = *std::min_element(records.begin(), records.end(),
                                            [&](const auto& a, const auto& b) { return dist(a) < dist(b); });
    m.fallback = {nearest.after[0] - nearest.before[0], nearest.after[1] - nearest.before[1]};
    return m;
  }
  for (int o = 0; o < 2; ++o) {
    std::vector<double> w, y;
    for (const auto* r : near) {
      w.push_back(r->omega[o]);
      y.push_back(r->after[o] - r->before[o]);
    }
    m.f[o] = fit_sigmoid(w, y);
  }
  m.fitted = true;
  return m;
}

// ---------------------------------------------------------------------------

std::vector<Weights> even_weights(int n) {
  if (n < 1) throw ConfigError("need at least one task");
  if (n == 1) return {{1.0, 0.0}};
  std::vector<Weights> out;
  for (int k = 0; k < n; ++k) {
    const double f = static_cast<double>(k) / (n - 1);
    out.push_back({1.0 - f, f});
  }
  return out;
}

std::vector<Candidate> select_tasks(const std::vector<Point2>& population, const std::vector<HyperbolicModel>& models,
                                    const std::vector<Point2>& archive, int n, const ObjectiveScale& scale,
                                    double beta, double grid_step) {
  if (population.size() != models.size()) throw std::invalid_argument("select_tasks: one model per policy");
  if (!(grid_step > 0.0 && grid_step <= 1.0)) throw ConfigError("select_tasks: grid step must lie in (0, 1]");
  const int steps = static_cast<int>(std::lround(1.0 / grid_step));
  std::vector<Candidate> pool;
  for (std::size_t j = 0; j < population.size(); ++j) {
    for (int s = 0; s <= steps; ++s) {
      const double w = std::min(1.0, s * grid_step);
      Candidate c{static_cast<int>(j), {w, 1.0 - w}, {}};
      const Point2 d = models[j].predict_delta(c.omega);
      c.predicted = {population[j][0] + d[0], population[j][1] + d[1]};
      pool.push_back(c);
    }
  }
  std::vector<Point2> set;
  for (const auto& p : archive) set.push_back(scale.normalize(p));
  std::vector<Candidate> chosen;
  const Point2 origin{0.0, 0.0};
  while (static_cast<int>(chosen.size()) < n && !pool.empty()) {
    std::size_t best = 0;
    double best_score = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < pool.size(); ++i) {
      auto trial = set;
      trial.push_back(scale.normalize(pool[i].predicted));
      const double score = hypervolume_2d(trial, origin) - beta * sparsity(non_dominated(trial));
      const bool better = score > best_score + 1e-12 ||
                          (std::abs(score - best_score) <= 1e-12 && pool[i].predicted[0] > pool[best].predicted[0]);
      if (better) {
        best = i;
        best_score = score;
      }
    }
    set.push_back(scale.normalize(pool[best].predicted));
    chosen.push_back(pool[best]);
    pool.erase(pool.begin() + static_cast<std::ptrdiff_t>(best));
  }
  return chosen;
}

// ---------------------------------------------------------------------------

void MorlConfig::validate() const {
  ppo.validate();
  env.scenario.validate();
  if (n_tasks < 1 || warmup_iterations < 1 || task_iterations < 1 || generations < 0 || eval_episodes < 1) {
    throw ConfigError("morl: tasks, iterations and evaluation episodes must be positive");
  }
  if (!(grid_step > 0.0 && grid_step <= 1.0)) throw ConfigError("morl: grid step must lie in (0, 1]");
  if (!(neighborhood_radius > 0.0)) throw ConfigError("morl: neighborhood radius must be positive");
  if (!(reference_factor >= 1.0)) throw ConfigError("morl: reference factor must be at least 1");
}

nlohmann::json to_json(const MorlConfig& c) {
  return {{"env", c.env},
          {"ppo", c.ppo},
          {"actor", nn::to_string(c.actor)},
          {"n_tasks", c.n_tasks},
          {"warmup_iterations", c.warmup_iterations},
          {"task_iterations", c.task_iterations},
          {"generations", c.generations},
          {"eval_episodes", c.eval_episodes},
          {"beta", c.beta},
          {"grid_step", c.grid_step},
          {"neighborhood_radius", c.neighborhood_radius},
          {"reference_factor", c.reference_factor},
          {"seed", c.seed}};
}

MorlConfig morl_config_from_json(const nlohmann::json& j) {
  MorlConfig c;
  try {
    if (j.contains("env")) c.env = j.at("env").get<EnvConfig>();
    if (j.contains("ppo")) c.ppo = j.at("ppo").get<PPOConfig>();
    const auto actor = j.value("actor", std::string("aemo"));
    if (actor != "aemo" && actor != "invff") throw ConfigError("morl: actor must be aemo or invff");
    c.actor = actor == "aemo" ? nn::ActorKind::kAemo : nn::ActorKind::kInvFF;
    c.n_tasks = j.value("n_tasks", c.n_tasks);
    c.warmup_iterations = j.value("warmup_iterations", c.warmup_iterations);
    c.task_iterations = j.value("task_iterations", c.task_iterations);
    c.generations = j.value("generations", c.generations);
    c.eval_episodes = j.value("eval_episodes", c.eval_episodes);
    c.beta = j.value("beta", c.beta);
    c.grid_step = j.value("grid_step", c.grid_step);
    c.neighborhood_radius = j.value("neighborhood_radius", c.neighborhood_radius);
    c.reference_factor = j.value("reference_factor", c.reference_factor);
    c.seed = j.value("seed", c.seed);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("morl config: ") + e.what());
  }
  c.validate();
  return c;
}

// ---------------------------------------------------------------------------

namespace {

class MorlRun {
 public:
  MorlRun(const MorlConfig& c, const IterationLog& log) : c_(c), log_(log) {
    c_.validate();
    eval_seed_ = derive_seed(c_.seed, {0xE7A1});
    if (c_.run_dir) {
      std::filesystem::create_directories(*c_.run_dir / "checkpoints");
      const nlohmann::json snap = to_json(c_);
      std::ofstream(*c_.run_dir / "config.json") << snap.dump(2) << '\n';
      csv_.open(*c_.run_dir / "iterations.csv");
      if (!csv_) throw ConfigError("cannot write " + (*c_.run_dir / "iterations.csv").string());
      csv_ << csv_preamble(snap) << '\n'
           << "phase,generation,task,iteration,steps,episodes,efficiency_reward,fairness_reward,policy_loss,"
              "value_loss,entropy,approx_kl,clip_fraction\n";
    }
  }

  MorlResult run() {
    auto random = make_baseline_policy("random", derive_seed(c_.seed, {0x5241}));
    const auto base = evaluate_policy(*random, c_.env, c_.eval_episodes, eval_seed_);
    for (int o = 0; o < 2; ++o) {
      const double m = base.mean_reward[o];
      res_.reference[o] = std::min(c_.reference_factor * m, m - 1.0);
    }
    warmup();
    res_.warmup_archive = res_.archive;
    Point2 ideal = res_.reference;
    for (const auto& p : res_.population) {
      for (int o = 0; o < 2; ++o) ideal[o] = std::max(ideal[o], p.point[o]);
    }
    for (int o = 0; o < 2; ++o) {
      if (ideal[o] <= res_.reference[o]) ideal[o] = res_.reference[o] + 1.0;
    }
    res_.scale = {res_.reference, ideal};
    res_.hv_history.push_back(res_.archive.hypervolume(res_.reference));
    for (int g = 0; g < c_.generations; ++g) {
      generation(g);
      res_.hv_history.push_back(res_.archive.hypervolume(res_.reference));
    }
    if (c_.run_dir) {
      nlohmann::json a = res_.archive.to_json();
      a["reference"] = res_.reference;
      a["hypervolume_history"] = res_.hv_history;
      a["warmup_points"] = res_.warmup_archive.to_json().at("points");
      nlohmann::json recs = nlohmann::json::array();
      for (const auto& r : res_.records) recs.push_back({{"omega", r.omega}, {"before", r.before}, {"after", r.after}});
      a["records"] = recs;
      std::ofstream(*c_.run_dir / "archive.json") << a.dump(2) << '\n';
    }
    return std::move(res_);
  }

 private:
  EnvFactory factory() const {
    const EnvConfig env = c_.env;
    return [env] { return std::make_unique<PickingRlEnv>(env); };
  }

  Point2 evaluate(const nn::PolicyModel& m) const {
    NeuralPolicy p(m);
    return evaluate_policy(p, c_.env, c_.eval_episodes, eval_seed_).mean_reward;
  }

  int add(const nn::PolicyModel& m, const Point2& point, const Weights& omega, int parent, int generation) {
    PopulationEntry e{point, omega, parent, generation, {}, m};
    const int id = static_cast<int>(res_.population.size());
    if (c_.run_dir) {
      const auto path = *c_.run_dir / "checkpoints" / ("policy_" + std::to_string(id) + ".json");
      save_checkpoint(path, e.model,
                      {{"omega", omega}, {"generation", generation}, {"parent", parent}, {"point", point}});
      e.checkpoint = path.string();
    }
    res_.archive.insert({point, id, omega, e.checkpoint});
    res_.population.push_back(std::move(e));
    return id;
  }

  void log(const std::string& phase, int generation, int task, const IterationStats& s) {
    if (log_) log_(phase, generation, task, s);
    if (csv_.is_open()) {
      csv_ << phase << ',' << generation << ',' << task << ',' << s.iteration << ',' << s.steps << ','
           << s.episodes << ',' << s.mean_episode_reward[0] << ',' << s.mean_episode_reward[1] << ','
           << s.policy_loss << ',' << s.value_loss << ',' << s.entropy << ',' << s.approx_kl << ','
           << s.clip_fraction << '\n';
    }
  }

  void warmup() {
    const auto weights = even_weights(c_.n_tasks);
    const int every = std::max(1, c_.warmup_iterations / 4);
    for (int k = 0; k < c_.n_tasks; ++k) {
      nn::PolicyModel m(c_.actor);
      m.init(derive_seed(c_.seed, {1, static_cast<std::uint64_t>(k)}));
      Point2 before = evaluate(m);
      int parent = -1;
      PPOTrainer tr(m, c_.ppo, weights[k], factory(), c_.seed, static_cast<std::uint64_t>(k));
      for (int it = 1; it <= c_.warmup_iterations; ++it) {
        log("warmup", -1, k, tr.iterate());
        if (it % every == 0 || it == c_.warmup_iterations) {
          const Point2 after = evaluate(tr.model());
          res_.records.push_back({weights[k], before, after});
          parent = add(tr.model(), after, weights[k], parent, -1);
          before = after;
        }
      }
      res_.total_steps += tr.steps();
    }
  }

  void generation(int g) {
    std::vector<Point2> pts;
    std::vector<HyperbolicModel> models;
    for (const auto& p : res_.population) {
      pts.push_back(p.point);
      models.push_back(fit_hyperbolic(res_.records, p.point, res_.scale, c_.neighborhood_radius));
    }
    const auto tasks = select_tasks(pts, models, res_.archive.points(), c_.n_tasks, res_.scale, c_.beta, c_.grid_step);
    for (std::size_t k = 0; k < tasks.size(); ++k) {
      const auto& t = tasks[k];
      const PopulationEntry& parent = res_.population[t.policy];
      const Point2 before = parent.point;
      const std::uint64_t task_id = 1000 * static_cast<std::uint64_t>(g + 1) + k;
      PPOTrainer tr(parent.model, c_.ppo, t.omega, factory(), c_.seed, task_id);
      for (int it = 0; it < c_.task_iterations; ++it) log("generation", g, static_cast<int>(k), tr.iterate());
      const Point2 after = evaluate(tr.model());
      res_.records.push_back({t.omega, before, after});
      add(tr.model(), after, t.omega, t.policy, g);
      res_.total_steps += tr.steps();
    }
  }

  MorlConfig c_;
  IterationLog log_;
  std::uint64_t eval_seed_ = 0;
  std::ofstream csv_;
  MorlResult res_;
};

}  // namespace

MorlResult run_morl(const MorlConfig& config, const IterationLog& log) { return MorlRun(config, log).run(); }

}  // namespace colpick
