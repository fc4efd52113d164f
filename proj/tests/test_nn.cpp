#include "colpick/errors.hpp"
#include "colpick/nn/model.hpp"

#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <numeric>

using namespace colpick;
using namespace colpick::nn;

namespace {

Mat<double> random_features(RandomStream& rs, int nodes) {
  Mat<double> x(kNodeFeatures, nodes);
  for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = rs.normal(0.0, 1.0);
  return x;
}

ActionMask random_mask(RandomStream& rs, int nodes) {
  ActionMask m(nodes, 0);
  for (auto& b : m) b = rs.bernoulli(0.5) ? 1 : 0;
  m[rs.uniform_int(0, nodes - 1)] = 1;
  return m;
}

template <typename Net>
void init_layers(Net& net, std::uint64_t seed) {
  RandomStream rs(seed);
  for (auto* l : net.layers()) {
    l->init(rs);
    for (Eigen::Index i = 0; i < l->b.size(); ++i) l->b[i] = rs.normal(0.0, 0.1);
  }
}

struct Param {
  DenseLayer<double>* layer;
  bool bias;
  Eigen::Index index;
  double& value() const { return bias ? layer->b[index] : layer->W.data()[index]; }
  double grad() const { return bias ? layer->gb[index] : layer->gW.data()[index]; }
};

std::vector<Param> sample_params(std::vector<DenseLayer<double>*> layers, RandomStream& rs, int n) {
  std::vector<Param> out;
  for (int i = 0; i < n; ++i) {
    auto* l = layers[rs.uniform_int(0, static_cast<std::int64_t>(layers.size()) - 1)];
    const bool bias = rs.bernoulli(0.2);
    const Eigen::Index size = bias ? l->b.size() : l->W.size();
    out.push_back({l, bias, static_cast<Eigen::Index>(rs.uniform_int(0, size - 1))});
  }
  return out;
}

// Relative error of analytic vs central-difference gradients, h = 1e-4.
template <typename LossFn>
std::vector<double> gradcheck(const std::vector<Param>& params, LossFn loss) {
  std::vector<double> err;
  const double h = 1e-4;
  for (const auto& p : params) {
    const double keep = p.value();
    p.value() = keep + h;
    const double up = loss();
    p.value() = keep - h;
    const double down = loss();
    p.value() = keep;
    const double fd = (up - down) / (2 * h);
    const double an = p.grad();
    err.push_back(std::abs(fd - an) / std::max({std::abs(fd), std::abs(an), 1e-6}));
  }
  return err;
}

NodeGroups groups_for(int n_aisles, int depth) { return aisle_groups(WarehouseLayout::build(n_aisles, depth)); }

}  // namespace

TEST_SUITE("nn") {
  TEST_CASE("AEMO actor gradients match finite differences") {
    for (ActorKind kind : {ActorKind::kAemo, ActorKind::kInvFF}) {
      CAPTURE(to_string(kind));
      Actor<double> actor(kind);
      init_layers(actor, 3);
      RandomStream rs(5);
      const auto groups = groups_for(3, 4);
      const Mat<double> x = random_features(rs, groups.n_nodes());
      const ActionMask mask = random_mask(rs, groups.n_nodes());
      Eigen::Index action = 0;
      while (!mask[action]) ++action;
      const double adv = 1.7, c_ent = 0.3;
      auto loss = [&] {
        const RowVec<double> z = actor.forward(x, groups);
        const RowVec<double> p = masked_softmax(z, mask);
        return -adv * masked_log_prob(z, mask, action) - c_ent * entropy(p);
      };
      Actor<double>::Cache cache;
      const RowVec<double> z = actor.forward(x, groups, &cache);
      const RowVec<double> p = masked_softmax(z, mask);
      for (auto* l : actor.layers()) l->zero_grad();
      actor.backward(cache, policy_logit_grad<double>(p, mask, action, -adv, -c_ent), groups);
      const auto params = sample_params(actor.layers(), rs, 60);
      const auto err = gradcheck(params, loss);
      const auto ok = std::count_if(err.begin(), err.end(), [](double e) { return e < 1e-3; });
      CHECK(ok >= 50);
      CHECK(*std::max_element(err.begin(), err.end()) < 1e-2);
    }
  }

  TEST_CASE("critic gradients match finite differences") {
    Critic<double> critic;
    init_layers(critic, 4);
    RandomStream rs(6);
    const Mat<double> x = random_features(rs, 20);
    const Vec<double> target = (Vec<double>(2) << 0.5, -1.5).finished();
    auto loss = [&] { return 0.5 * (critic.forward(x) - target).squaredNorm(); };
    Critic<double>::Cache cache;
    const Vec<double> v = critic.forward(x, &cache);
    for (auto* l : critic.layers()) l->zero_grad();
    critic.backward(cache, v - target);
    const auto err = gradcheck(sample_params(critic.layers(), rs, 60), loss);
    CHECK(std::count_if(err.begin(), err.end(), [](double e) { return e < 1e-3; }) >= 50);
  }

  TEST_CASE("zero loss gradient gives zero parameter gradients") {
    Actor<double> actor;
    init_layers(actor, 1);
    RandomStream rs(2);
    const auto groups = groups_for(2, 3);
    const Mat<double> x = random_features(rs, groups.n_nodes());
    Actor<double>::Cache cache;
    const RowVec<double> z = actor.forward(x, groups, &cache);
    for (auto* l : actor.layers()) l->zero_grad();
    actor.backward(cache, RowVec<double>::Zero(z.size()), groups);
    for (auto* l : actor.layers()) {
      CHECK(l->gW.isZero(0.0));
      CHECK(l->gb.isZero(0.0));
    }
  }

  TEST_CASE("masked nodes carry no probability and no gradient") {
    RandomStream rs(9);
    RowVec<double> z(6);
    z << 100, -100, 3, 0.5, 99, -2;
    const ActionMask mask{1, 0, 1, 0, 1, 1};
    const RowVec<double> p = masked_softmax(z, mask);
    CHECK(p.allFinite());
    CHECK(p.sum() == doctest::Approx(1.0));
    CHECK(p[1] == 0.0);
    CHECK(p[3] == 0.0);
    CHECK(masked_log_prob(z, mask, 0) == doctest::Approx(std::log(p[0])));
    const RowVec<double> g = policy_logit_grad<double>(p, mask, 2, 1.0, 0.01);
    CHECK(g[1] == 0.0);
    CHECK(g[3] == 0.0);
    CHECK(g.sum() == doctest::Approx(0.0).epsilon(1e-12));
    CHECK_THROWS(masked_softmax(z, ActionMask(6, 0)));
  }

  TEST_CASE("uniform aisle features give identical logits within the aisle") {
    Actor<double> actor;
    init_layers(actor, 7);
    RandomStream rs(1);
    const auto groups = groups_for(3, 4);
    Mat<double> x = random_features(rs, groups.n_nodes());
    const Vec<double> shared = x.col(0);
    for (int v = 0; v < groups.n_nodes(); ++v) {
      if (groups.group[v] == 1) x.col(v) = shared;
    }
    const RowVec<double> z = actor.forward(x, groups);
    std::vector<double> in_aisle;
    for (int v = 0; v < groups.n_nodes(); ++v) {
      if (groups.group[v] == 1) in_aisle.push_back(z[v]);
    }
    for (double l : in_aisle) CHECK(l == doctest::Approx(in_aisle.front()).epsilon(1e-12));
  }

  TEST_CASE("permuting nodes within an aisle permutes the output") {
    Actor<double> actor;
    init_layers(actor, 8);
    RandomStream rs(3);
    const auto groups = groups_for(3, 4);
    const Mat<double> x = random_features(rs, groups.n_nodes());
    // Reverse the order of the nodes of aisle 2.
    std::vector<int> perm(groups.n_nodes());
    std::iota(perm.begin(), perm.end(), 0);
    std::vector<int> members;
    for (int v = 0; v < groups.n_nodes(); ++v) {
      if (groups.group[v] == 2) members.push_back(v);
    }
    for (std::size_t i = 0; i < members.size(); ++i) perm[members[i]] = members[members.size() - 1 - i];
    Mat<double> xp(x.rows(), x.cols());
    for (int v = 0; v < groups.n_nodes(); ++v) xp.col(v) = x.col(perm[v]);
    const RowVec<double> z = actor.forward(x, groups);
    const RowVec<double> zp = actor.forward(xp, groups);
    for (int v = 0; v < groups.n_nodes(); ++v) CHECK(zp[v] == doctest::Approx(z[perm[v]]).epsilon(1e-12));
  }

  TEST_CASE("out-of-aisle features do not reach a node's logit") {
    Actor<double> actor;
    init_layers(actor, 11);
    RandomStream rs(4);
    const auto groups = groups_for(3, 4);
    Mat<double> x = random_features(rs, groups.n_nodes());
    const RowVec<double> before = actor.forward(x, groups);
    int target = 0;
    while (groups.group[target] != 2) ++target;
    x.col(target).array() += 3.0;
    const RowVec<double> after = actor.forward(x, groups);
    for (int v = 0; v < groups.n_nodes(); ++v) {
      if (groups.group[v] != 2) {
        CHECK(after[v] == before[v]);
      } else {
        CHECK(after[v] != before[v]);
      }
    }
  }

  TEST_CASE("critic sum pooling is permutation invariant and additive") {
    Critic<double> critic;
    init_layers(critic, 12);
    RandomStream rs(5);
    const Mat<double> x = random_features(rs, 12);
    Mat<double> rev = x.rowwise().reverse();
    CHECK((critic.forward(rev) - critic.forward(x)).norm() < 1e-12);
    Mat<double> twice(kNodeFeatures, 24);
    twice << x, x;
    CHECK((critic.pooled(twice) - 2.0 * critic.pooled(x)).norm() < 1e-12);
    for (int i = 0; i < 1000; ++i) {
      const Mat<double> s = random_features(rs, 8) * 5.0;
      CHECK(critic.forward(s).allFinite());
    }
  }

  TEST_CASE("INV-FF ignores aisle membership and is smaller than AEMO") {
    Actor<double> ff(ActorKind::kInvFF);
    init_layers(ff, 2);
    RandomStream rs(8);
    const auto g1 = groups_for(2, 4);
    const auto g2 = groups_for(4, 2);
    Mat<double> x = random_features(rs, 16);
    x.col(5) = x.col(9);
    const RowVec<double> a = ff.forward(x, g1);
    CHECK(a[5] == a[9]);
    CHECK(a == ff.forward(x, g2));
    PolicyModel aemo(ActorKind::kAemo), inv(ActorKind::kInvFF);
    CHECK(inv.actor_parameter_count() < aemo.actor_parameter_count());
    // 23->64->64->16, 12->64->64->16, 2 x (32->64->16), 32->16->1.
    const Eigen::Index expected = (23 * 64 + 64) + (64 * 64 + 64) + (64 * 16 + 16) + (12 * 64 + 64) + (64 * 64 + 64) +
                                  (64 * 16 + 16) + 2 * ((32 * 64 + 64) + (64 * 16 + 16)) + (32 * 16 + 16) + 17;
    CHECK(aemo.actor_parameter_count() == expected);
  }

  TEST_CASE("wrong feature width is rejected") {
    Actor<double> actor;
    Critic<double> critic;
    const auto groups = groups_for(1, 2);
    CHECK_THROWS(actor.forward(Mat<double>::Zero(34, 4), groups));
    CHECK_THROWS(critic.forward(Mat<double>::Zero(36, 4)));
  }

  TEST_CASE("checkpoint round trip is bit exact") {
    PolicyModel m(ActorKind::kAemo);
    m.init(42);
    const auto dir = std::filesystem::temp_directory_path() / "colpick_nn_test";
    std::filesystem::create_directories(dir);
    const auto path = dir / "policy.json";
    save_checkpoint(path, m, {{"note", "unit"}});
    nlohmann::json meta;
    PolicyModel back = load_checkpoint(path, &meta);
    CHECK(meta["note"] == "unit");
    auto la = m.all_layers();
    auto lb = back.all_layers();
    REQUIRE(la.size() == lb.size());
    for (std::size_t i = 0; i < la.size(); ++i) {
      CHECK(la[i]->W == lb[i]->W);
      CHECK(la[i]->b == lb[i]->b);
    }
    RandomStream rs(1);
    const auto groups = groups_for(2, 3);
    const Mat<float> x = random_features(rs, groups.n_nodes()).cast<float>();
    CHECK(m.actor.forward(x, groups) == back.actor.forward(x, groups));
    CHECK(m.critic.forward(x) == back.critic.forward(x));

    auto j = checkpoint_json(m);
    j["feature_manifest_hash"] = "0000000000000000";
    CHECK_THROWS_AS(model_from_checkpoint(j), ConfigError);
    j = checkpoint_json(m);
    j["manifest"]["layers"][0]["out"] = 32;
    CHECK_THROWS_AS(model_from_checkpoint(j), ConfigError);
    j = checkpoint_json(m);
    j["manifest"]["actor"] = "invff";
    CHECK_THROWS_AS(model_from_checkpoint(j), ConfigError);
    std::filesystem::remove_all(dir);
  }

  TEST_CASE("feature scaling divides each row") {
    FeatureTensor f = FeatureTensor::Ones(kNodeFeatures, 3);
    const Mat<float> s = scale_features<float>(f);
    for (int r = 0; r < kNodeFeatures; ++r) CHECK(s(r, 0) == static_cast<float>(1.0 / input_scale()[r]));
  }

  TEST_CASE("efficiency-only input ignores the fairness rows") {
    PolicyModel m(ActorKind::kAemo, true);
    m.init(7);
    RandomStream rs(2);
    const auto groups = groups_for(2, 3);
    FeatureTensor a = random_features(rs, groups.n_nodes());
    FeatureTensor b = a;
    b.bottomRows(kFairnessFeatures).setRandom();
    CHECK(m.actor.forward(m.input(a), groups) == m.actor.forward(m.input(b), groups));
    CHECK(m.critic.forward(m.input(a)) == m.critic.forward(m.input(b)));
    CHECK(m.input(a).topRows(kNodeFeatures - kFairnessFeatures) ==
          scale_features<float>(a).topRows(kNodeFeatures - kFairnessFeatures));

    const PolicyModel back = model_from_checkpoint(checkpoint_json(m));
    CHECK(back.efficiency_only);
    PolicyModel full(ActorKind::kAemo);
    full.init(7);
    CHECK(full.input(b) != full.input(a));
  }
}
