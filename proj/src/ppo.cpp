#include "colpick/ppo.hpp"

#include "colpick/errors.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

namespace colpick {

void PPOConfig::validate() const {
  if (!(clip > 0.0 && clip < 1.0)) throw ConfigError("ppo: clip must lie in (0, 1)");
  if (!(entropy_coef >= 0.0)) throw ConfigError("ppo: entropy coefficient must be non-negative");
  if (!(learning_rate > 0.0)) throw ConfigError("ppo: learning rate must be positive");
  if (epochs < 1 || minibatch < 1 || workers < 1 || steps_per_worker < 1) {
    throw ConfigError("ppo: epochs, minibatch, workers and steps per worker must be positive");
  }
  if (!(gamma > 0.0 && gamma < 1.0)) throw ConfigError("ppo: gamma must lie in (0, 1)");
  if (!(lambda > 0.0 && lambda <= 1.0)) throw ConfigError("ppo: lambda must lie in (0, 1]");
  if (max_grad_norm < 0.0) throw ConfigError("ppo: max_grad_norm must be non-negative");
  if (!(reward_scale.efficiency > 0.0) || !(reward_scale.fairness > 0.0)) {
    throw ConfigError("ppo: reward scales must be positive");
  }
}

void to_json(nlohmann::json& j, const PPOConfig& c) {
  j = {{"clip", c.clip},
       {"entropy_coef", c.entropy_coef},
       {"learning_rate", c.learning_rate},
       {"epochs", c.epochs},
       {"minibatch", c.minibatch},
       {"gamma", c.gamma},
       {"lambda", c.lambda},
       {"workers", c.workers},
       {"steps_per_worker", c.steps_per_worker},
       {"max_grad_norm", c.max_grad_norm},
       {"normalize_advantages", c.normalize_advantages},
       {"reward_scale", {c.reward_scale.efficiency, c.reward_scale.fairness}}};
}

void from_json(const nlohmann::json& j, PPOConfig& c) {
  c = {};
  c.clip = j.value("clip", c.clip);
  c.entropy_coef = j.value("entropy_coef", c.entropy_coef);
  c.learning_rate = j.value("learning_rate", c.learning_rate);
  c.epochs = j.value("epochs", c.epochs);
  c.minibatch = j.value("minibatch", c.minibatch);
  c.gamma = j.value("gamma", c.gamma);
  c.lambda = j.value("lambda", c.lambda);
  c.workers = j.value("workers", c.workers);
  c.steps_per_worker = j.value("steps_per_worker", c.steps_per_worker);
  c.max_grad_norm = j.value("max_grad_norm", c.max_grad_norm);
  c.normalize_advantages = j.value("normalize_advantages", c.normalize_advantages);
  if (j.contains("reward_scale")) {
    const auto s = j.at("reward_scale").get<std::array<double, 2>>();
    c.reward_scale = {s[0], s[1]};
  }
  c.validate();
}

// ---------------------------------------------------------------------------

PickingRlEnv::PickingRlEnv(EnvConfig config, std::shared_ptr<const Warehouse> warehouse)
    : env_(std::move(config), std::move(warehouse)), groups_(nn::aisle_groups(env_.warehouse()->layout())) {}

void PickingRlEnv::reset(std::uint64_t seed) {
  for (std::uint64_t attempt = 0; attempt < 100; ++attempt) {
    if (env_.reset(attempt == 0 ? seed : derive_seed(seed, {attempt}))) return;
  }
  throw SimulationIntegrityError("no episode with a decision point after 100 seeds");
}

std::array<double, 2> PickingRlEnv::episode_objectives() const {
  const auto m = env_.metrics();
  return {m.completion_time, m.workload_sd};
}

// ---------------------------------------------------------------------------

std::vector<double> compute_gae(const std::vector<double>& rewards, const std::vector<double>& values,
                                const std::vector<std::uint8_t>& done, double bootstrap, double gamma,
                                double lambda) {
  const std::size_t n = rewards.size();
  if (values.size() != n || done.size() != n) throw std::invalid_argument("compute_gae: length mismatch");
  std::vector<double> adv(n, 0.0);
  double next_value = bootstrap;
  double running = 0.0;
  for (std::size_t t = n; t-- > 0;) {
    const double keep = done[t] ? 0.0 : 1.0;
    const double delta = rewards[t] + gamma * next_value * keep - values[t];
    running = delta + gamma * lambda * keep * running;
    adv[t] = running;
    next_value = values[t];
  }
  return adv;
}

void normalize(std::vector<double>& x) {
  if (x.size() < 2) return;
  const double mean = std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(x.size());
  double var = 0.0;
  for (double v : x) var += (v - mean) * (v - mean);
  const double sd = std::sqrt(var / static_cast<double>(x.size()));
  for (double& v : x) v = (v - mean) / (sd + 1e-8);
}

ClipTerm clipped_surrogate(double ratio, double advantage, double clip) {
  const double unclipped = ratio * advantage;
  const double clipped = std::clamp(ratio, 1.0 - clip, 1.0 + clip) * advantage;
  if (unclipped <= clipped) return {unclipped, advantage};
  return {clipped, 0.0};
}

// ---------------------------------------------------------------------------

Adam::Adam(std::vector<nn::DenseLayer<float>*> layers, double lr, double beta1, double beta2, double eps)
    : layers_(std::move(layers)), lr_(lr), b1_(beta1), b2_(beta2), eps_(eps) {
  for (auto* l : layers_) {
    mW_.push_back(nn::Mat<float>::Zero(l->W.rows(), l->W.cols()));
    vW_.push_back(nn::Mat<float>::Zero(l->W.rows(), l->W.cols()));
    mb_.push_back(nn::Vec<float>::Zero(l->b.size()));
    vb_.push_back(nn::Vec<float>::Zero(l->b.size()));
  }
}

void Adam::zero_grad() {
  for (auto* l : layers_) l->zero_grad();
}

double Adam::step(double max_grad_norm) {
  double sq = 0.0;
  for (auto* l : layers_) sq += l->gW.cast<double>().squaredNorm() + l->gb.cast<double>().squaredNorm();
  const double norm = std::sqrt(sq);
  if (!std::isfinite(norm)) throw TrainingFault("non-finite gradient norm");
  const float scale = max_grad_norm > 0.0 && norm > max_grad_norm ? static_cast<float>(max_grad_norm / norm) : 1.0f;
  ++t_;
  const float b1 = static_cast<float>(b1_), b2 = static_cast<float>(b2_);
  const float c1 = static_cast<float>(1.0 - std::pow(b1_, static_cast<double>(t_)));
  const float c2 = static_cast<float>(1.0 - std::pow(b2_, static_cast<double>(t_)));
  const float lr = static_cast<float>(lr_), eps = static_cast<float>(eps_);
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    auto* l = layers_[i];
    const nn::Mat<float> gW = l->gW * scale;
    const nn::Vec<float> gb = l->gb * scale;
    mW_[i] = b1 * mW_[i] + (1 - b1) * gW;
    vW_[i] = b2 * vW_[i] + (1 - b2) * gW.cwiseProduct(gW);
    mb_[i] = b1 * mb_[i] + (1 - b1) * gb;
    vb_[i] = b2 * vb_[i] + (1 - b2) * gb.cwiseProduct(gb);
    l->W.array() -= lr * (mW_[i].array() / c1) / ((vW_[i].array() / c2).sqrt() + eps);
    l->b.array() -= lr * (mb_[i].array() / c1) / ((vb_[i].array() / c2).sqrt() + eps);
  }
  return norm;
}

// ---------------------------------------------------------------------------

PPOTrainer::PPOTrainer(nn::PolicyModel model, PPOConfig config, Weights omega, EnvFactory factory,
                       std::uint64_t seed, std::uint64_t task)
    : model_(std::move(model)),
      config_(config),
      omega_(omega),
      seed_(seed),
      task_(task),
      actor_opt_(model_.actor_layers(), config.learning_rate),
      critic_opt_(model_.critic_layers(), config.learning_rate),
      shuffle_rs_(derive_seed(seed, {task, 0x5348})) {
  config_.validate();
  if (omega[0] < 0.0 || omega[1] < 0.0 || std::abs(omega[0] + omega[1] - 1.0) > 1e-9) {
    throw ConfigError("ppo: weight vector must lie on the simplex");
  }
  workers_.resize(config_.workers);
  for (auto& w : workers_) w.env = factory();
}

void PPOTrainer::start_episode(Worker& w, std::size_t index) {
  w.env->reset(derive_seed(seed_, {task_, index, w.episodes++}));
  w.episode_reward = {0.0, 0.0};
}

IterationStats PPOTrainer::iterate() {
  IterationStats stats;
  stats.iteration = ++iteration_;
  std::vector<Sample> batch;
  batch.reserve(static_cast<std::size_t>(config_.workers) * config_.steps_per_worker);
  std::array<double, 2> finished_sum{0.0, 0.0};
  const double se = config_.reward_scale.efficiency, sf = config_.reward_scale.fairness;

  for (std::size_t wi = 0; wi < workers_.size(); ++wi) {
    Worker& w = workers_[wi];
    w.rs = RandomStream(derive_seed(seed_, {task_, static_cast<std::uint64_t>(iteration_), wi}));
    if (w.episodes == 0 || w.env->done()) start_episode(w, wi);
    const std::size_t begin = batch.size();
    for (int t = 0; t < config_.steps_per_worker; ++t) {
      Sample s;
      s.x = model_.input(w.env->features());
      s.mask = w.env->mask();
      s.groups = &w.env->groups();
      const nn::RowVec<double> z = model_.actor.forward(s.x, *s.groups).cast<double>();
      const nn::RowVec<double> p = nn::masked_softmax(z, s.mask);
      s.action = static_cast<int>(w.rs.discrete(std::span<const double>(p.data(), p.size())));
      s.logp = nn::masked_log_prob(z, s.mask, s.action);
      const nn::Vec<double> v = model_.critic.forward(s.x).cast<double>();
      s.value = {v[0], v[1]};
      const StepResult r = w.env->step(s.action);
      s.reward = {r.reward.efficiency / se, r.reward.fairness / sf};
      s.done = r.done;
      w.episode_reward[0] += r.reward.efficiency;
      w.episode_reward[1] += r.reward.fairness;
      batch.push_back(std::move(s));
      if (r.done) {
        ++stats.episodes;
        finished_sum[0] += w.episode_reward[0];
        finished_sum[1] += w.episode_reward[1];
        start_episode(w, wi);
      }
    }
    // Advantages per objective over this worker's segment, then scalarized.
    std::array<double, 2> bootstrap{0.0, 0.0};
    if (!batch.back().done) {
      const nn::Vec<float> v = model_.critic.forward(model_.input(w.env->features()));
      bootstrap = {v[0], v[1]};
    }
    const std::size_t n = batch.size() - begin;
    std::vector<std::uint8_t> done(n);
    for (std::size_t i = 0; i < n; ++i) done[i] = batch[begin + i].done;
    for (int o = 0; o < 2; ++o) {
      std::vector<double> r(n), v(n);
      for (std::size_t i = 0; i < n; ++i) {
        r[i] = batch[begin + i].reward[o];
        v[i] = batch[begin + i].value[o];
      }
      const auto adv = compute_gae(r, v, done, bootstrap[o], config_.gamma, config_.lambda);
      for (std::size_t i = 0; i < n; ++i) {
        batch[begin + i].advantage += omega_[o] * adv[i];
        batch[begin + i].ret[o] = adv[i] + v[i];
      }
    }
  }
  steps_ += static_cast<long>(batch.size());
  stats.steps = steps_;
  if (stats.episodes > 0) {
    stats.mean_episode_reward = {finished_sum[0] / stats.episodes, finished_sum[1] / stats.episodes};
  }
  if (config_.normalize_advantages) {
    std::vector<double> a(batch.size());
    for (std::size_t i = 0; i < batch.size(); ++i) a[i] = batch[i].advantage;
    normalize(a);
    for (std::size_t i = 0; i < batch.size(); ++i) batch[i].advantage = a[i];
  }

  std::vector<std::size_t> order(batch.size());
  std::iota(order.begin(), order.end(), 0);
  double sum_pl = 0.0, sum_vl = 0.0, sum_h = 0.0, sum_kl = 0.0;
  long n_clipped = 0, n_seen = 0;
  for (int epoch = 0; epoch < config_.epochs; ++epoch) {
    for (std::size_t i = order.size(); i > 1; --i) {
      std::swap(order[i - 1], order[shuffle_rs_.uniform_int(0, static_cast<std::int64_t>(i) - 1)]);
    }
    for (std::size_t start = 0; start < order.size(); start += config_.minibatch) {
      const std::size_t end = std::min(order.size(), start + static_cast<std::size_t>(config_.minibatch));
      const float inv = 1.0f / static_cast<float>(end - start);
      actor_opt_.zero_grad();
      critic_opt_.zero_grad();
      for (std::size_t k = start; k < end; ++k) {
        const Sample& s = batch[order[k]];
        nn::Actor<float>::Cache ac;
        const nn::RowVec<double> z = model_.actor.forward(s.x, *s.groups, &ac).cast<double>();
        const nn::RowVec<double> p = nn::masked_softmax(z, s.mask);
        const double logp = nn::masked_log_prob(z, s.mask, s.action);
        const double ratio = std::exp(logp - s.logp);
        const ClipTerm ct = clipped_surrogate(ratio, s.advantage, config_.clip);
        const double h = nn::entropy(p);
        const double loss = -ct.value - config_.entropy_coef * h;
        if (!std::isfinite(loss)) {
          std::ostringstream os;
          os << "non-finite policy loss at iteration " << iteration_ << " (ratio " << ratio << ", advantage "
             << s.advantage << ", old logp " << s.logp << ")";
          throw TrainingFault(os.str());
        }
        const nn::RowVec<double> dz =
            nn::policy_logit_grad<double>(p, s.mask, s.action, -ct.d_ratio * ratio, -config_.entropy_coef);
        model_.actor.backward(ac, (dz * inv).cast<float>(), *s.groups);

        nn::Critic<float>::Cache cc;
        const nn::Vec<float> v = model_.critic.forward(s.x, &cc);
        nn::Vec<float> dv(2);
        dv << static_cast<float>(v[0] - s.ret[0]), static_cast<float>(v[1] - s.ret[1]);
        sum_vl += 0.5 * dv.cast<double>().squaredNorm();
        model_.critic.backward(cc, dv * inv);

        sum_pl += -ct.value;
        sum_h += h;
        sum_kl += s.logp - logp;
        if (std::abs(ratio - 1.0) > config_.clip) ++n_clipped;
        ++n_seen;
      }
      if (!std::isfinite(sum_vl)) throw TrainingFault("non-finite value loss at iteration " + std::to_string(iteration_));
      actor_opt_.step(config_.max_grad_norm);
      critic_opt_.step(config_.max_grad_norm);
    }
  }
  if (n_seen > 0) {
    stats.policy_loss = sum_pl / n_seen;
    stats.value_loss = sum_vl / n_seen;
    stats.entropy = sum_h / n_seen;
    stats.approx_kl = sum_kl / n_seen;
    stats.clip_fraction = static_cast<double>(n_clipped) / n_seen;
  }
  return stats;
}

// ---------------------------------------------------------------------------

NodeId model_action(const nn::PolicyModel& model, const FeatureTensor& features, const ActionMask& mask,
                    const nn::NodeGroups& groups, RandomStream* sample) {
  const nn::Mat<float> x = model.input(features);
  const nn::RowVec<double> z = model.actor.forward(x, groups).cast<double>();
  if (sample) {
    const nn::RowVec<double> p = nn::masked_softmax(z, mask);
    return static_cast<NodeId>(sample->discrete(std::span<const double>(p.data(), p.size())));
  }
  NodeId best = -1;
  for (NodeId v = 0; v < static_cast<NodeId>(mask.size()); ++v) {
    if (mask[v] && (best < 0 || z[v] > z[best])) best = v;
  }
  if (best < 0) throw InvalidActionError("model policy: empty action mask");
  return best;
}

NeuralPolicy::NeuralPolicy(nn::PolicyModel model, std::string label)
    : model_(std::move(model)), label_(std::move(label)) {}

NodeId NeuralPolicy::choose(const DecisionContext& ctx) {
  if (!ctx.features) throw ConfigError("neural policy needs features");
  const auto& lay = ctx.sim.layout();
  if (layout_ != &lay || groups_.n_nodes() != lay.pick_count()) {
    groups_ = nn::aisle_groups(lay);
    layout_ = &lay;
  }
  return model_action(model_, *ctx.features, ctx.mask, groups_);
}

EvaluationResult evaluate_policy(AllocationPolicy& policy, const EnvConfig& config, int episodes,
                                 std::uint64_t seed, std::shared_ptr<const Warehouse> warehouse) {
  PickingEnv env(config, std::move(warehouse));
  env.set_compute_features(policy.needs_features());
  EvaluationResult res;
  for (int e = 0; e < episodes; ++e) {
    const std::uint64_t s = derive_seed(seed, {static_cast<std::uint64_t>(e)});
    env.reset(s);
    policy.begin_episode(s);
    while (!env.done()) {
      const auto& obs = env.observation();
      const DecisionContext ctx{env.sim(), obs.picker, obs.mask, policy.needs_features() ? &obs.features : nullptr};
      env.step(policy.choose(ctx));
    }
    const auto m = env.metrics();
    res.completion.push_back(m.completion_time);
    res.workload_sd.push_back(m.workload_sd);
  }
  res.episodes = episodes;
  if (episodes > 0) {
    res.mean_completion = std::accumulate(res.completion.begin(), res.completion.end(), 0.0) / episodes;
    res.mean_workload_sd = std::accumulate(res.workload_sd.begin(), res.workload_sd.end(), 0.0) / episodes;
    res.mean_reward = {-res.mean_completion, -res.mean_workload_sd};
  }
  return res;
}

}  // namespace colpick
