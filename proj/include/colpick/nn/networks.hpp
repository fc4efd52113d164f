#pragma once

#include "colpick/env.hpp"
#include "colpick/layout.hpp"
#include "colpick/nn/dense.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

namespace colpick::nn {

inline constexpr int kEncoderHidden = 64;
inline constexpr int kEmbedding = 16;

/// Aisle membership of every pick node.
struct NodeGroups {
  std::vector<int> group;
  std::vector<int> count;

  int n_groups() const { return static_cast<int>(count.size()); }
  int n_nodes() const { return static_cast<int>(group.size()); }
};

inline NodeGroups aisle_groups(const WarehouseLayout& layout) {
  NodeGroups g;
  g.group.resize(layout.pick_count());
  g.count.assign(layout.n_aisles(), 0);
  for (NodeId v = 0; v < layout.pick_count(); ++v) {
    g.group[v] = layout.aisle_of(v);
    ++g.count[g.group[v]];
  }
  return g;
}

/// Column v of the result is the mean of the columns of x in v's group.
template <typename T>
Mat<T> group_mean(const Mat<T>& x, const NodeGroups& g) {
  Mat<T> sums = Mat<T>::Zero(x.rows(), g.n_groups());
  for (int v = 0; v < g.n_nodes(); ++v) sums.col(g.group[v]) += x.col(v);
  for (int a = 0; a < g.n_groups(); ++a) {
    if (g.count[a] > 0) sums.col(a) /= static_cast<T>(g.count[a]);
  }
  Mat<T> out(x.rows(), x.cols());
  for (int v = 0; v < g.n_nodes(); ++v) out.col(v) = sums.col(g.group[v]);
  return out;
}

/// Adjoint of group_mean.
template <typename T>
Mat<T> group_mean_backward(const Mat<T>& dy, const NodeGroups& g) {
  Mat<T> sums = Mat<T>::Zero(dy.rows(), g.n_groups());
  for (int v = 0; v < g.n_nodes(); ++v) sums.col(g.group[v]) += dy.col(v);
  Mat<T> out(dy.rows(), dy.cols());
  for (int v = 0; v < g.n_nodes(); ++v) out.col(v) = sums.col(g.group[v]) / static_cast<T>(g.count[g.group[v]]);
  return out;
}

enum class ActorKind { kAemo, kInvFF };

inline const char* to_string(ActorKind k) { return k == ActorKind::kAemo ? "aemo" : "invff"; }

/// Node-scoring actor: AEMO-Net (per-category aisle embeddings) or INV-FF (shared per-node MLP).
template <typename T>
class Actor {
 public:
  struct Cache {
    typename Mlp<T>::Cache psi[2], phi[2], head;
    int cols = 0;
  };

  Actor() : Actor(ActorKind::kAemo) {}
  explicit Actor(ActorKind kind) : kind_(kind) {
    if (kind_ == ActorKind::kAemo) {
      const int in[2] = {kEfficiencyFeatures, kFairnessFeatures};
      const char* tag[2] = {"effic", "fair"};
      for (int c = 0; c < 2; ++c) {
        psi_[c] = Mlp<T>(std::string("actor.psi.") + tag[c], in[c], {kEncoderHidden, kEncoderHidden, kEmbedding},
                         Activation::kLeakyRelu);
        phi_[c] = Mlp<T>(std::string("actor.phi.") + tag[c], 2 * kEmbedding, {kEncoderHidden, kEmbedding},
                         Activation::kLeakyRelu);
      }
      head_ = Mlp<T>("actor.head", 2 * kEmbedding, {kEmbedding, 1}, Activation::kIdentity);
    } else {
      head_ = Mlp<T>("actor.ff", kNodeFeatures, {kEncoderHidden, kEncoderHidden, kEmbedding, 1},
                     Activation::kIdentity);
    }
  }

  ActorKind kind() const { return kind_; }

  std::vector<DenseLayer<T>*> layers() {
    std::vector<DenseLayer<T>*> out;
    auto add = [&](Mlp<T>& m) {
      for (auto& l : m.layers()) out.push_back(&l);
    };
    if (kind_ == ActorKind::kAemo) {
      for (int c = 0; c < 2; ++c) add(psi_[c]);
      for (int c = 0; c < 2; ++c) add(phi_[c]);
    }
    add(head_);
    return out;
  }

  /// One logit per column of `x` (kNodeFeatures x nodes).
  RowVec<T> forward(const Mat<T>& x, const NodeGroups& groups, Cache* cache = nullptr) const {
    if (x.rows() != kNodeFeatures) throw std::invalid_argument("Actor::forward: expected 35 feature rows");
    if (cache) cache->cols = static_cast<int>(x.cols());
    if (kind_ == ActorKind::kInvFF) return head_.forward(x, cache ? &cache->head : nullptr);
    if (groups.n_nodes() != x.cols()) throw std::invalid_argument("Actor::forward: node groups do not match");
    Mat<T> z(2 * kEmbedding, x.cols());
    const int start[2] = {0, kEfficiencyFeatures};
    const int rows[2] = {kEfficiencyFeatures, kFairnessFeatures};
    for (int c = 0; c < 2; ++c) {
      const Mat<T> e = psi_[c].forward(x.middleRows(start[c], rows[c]), cache ? &cache->psi[c] : nullptr);
      Mat<T> h(2 * kEmbedding, x.cols());
      h.topRows(kEmbedding) = e;
      h.bottomRows(kEmbedding) = group_mean(e, groups);
      z.middleRows(c * kEmbedding, kEmbedding) = phi_[c].forward(h, cache ? &cache->phi[c] : nullptr);
    }
    return head_.forward(z, cache ? &cache->head : nullptr);
  }

  /// Accumulates parameter gradients for d(loss)/d(logits).
  void backward(const Cache& cache, const RowVec<T>& dlogits, const NodeGroups& groups) {
    const Mat<T> dl = dlogits;
    if (kind_ == ActorKind::kInvFF) {
      head_.backward(cache.head, dl);
      return;
    }
    const Mat<T> dz = head_.backward(cache.head, dl);
    for (int c = 0; c < 2; ++c) {
      const Mat<T> dh = phi_[c].backward(cache.phi[c], dz.middleRows(c * kEmbedding, kEmbedding));
      const Mat<T> de = dh.topRows(kEmbedding) + group_mean_backward<T>(dh.bottomRows(kEmbedding), groups);
      psi_[c].backward(cache.psi[c], de);
    }
  }

 private:
  ActorKind kind_;
  Mlp<T> psi_[2], phi_[2], head_;
};

/// Invariant feed-forward critic with one value per objective.
template <typename T>
class Critic {
 public:
  struct Cache {
    typename Mlp<T>::Cache psi[2], phi, out;
    int cols = 0;
  };

  Critic() {
    const int in[2] = {kEfficiencyFeatures, kFairnessFeatures};
    const char* tag[2] = {"effic", "fair"};
    for (int c = 0; c < 2; ++c) {
      psi_[c] = Mlp<T>(std::string("critic.psi.") + tag[c], in[c], {kEncoderHidden, kEncoderHidden, kEmbedding},
                       Activation::kLeakyRelu);
    }
    phi_ = Mlp<T>("critic.phi", 2 * kEmbedding, {kEmbedding}, Activation::kLeakyRelu);
    out_ = Mlp<T>("critic.out", kEmbedding, {2}, Activation::kIdentity);
  }

  std::vector<DenseLayer<T>*> layers() {
    std::vector<DenseLayer<T>*> out;
    for (auto* m : {&psi_[0], &psi_[1], &phi_, &out_}) {
      for (auto& l : m->layers()) out.push_back(&l);
    }
    return out;
  }

  /// Sum over nodes of the shared per-node embedding.
  Vec<T> pooled(const Mat<T>& x, Cache* cache = nullptr) const {
    if (x.rows() != kNodeFeatures) throw std::invalid_argument("Critic::forward: expected 35 feature rows");
    if (cache) cache->cols = static_cast<int>(x.cols());
    Mat<T> h(2 * kEmbedding, x.cols());
    h.topRows(kEmbedding) = psi_[0].forward(x.topRows(kEfficiencyFeatures), cache ? &cache->psi[0] : nullptr);
    h.bottomRows(kEmbedding) = psi_[1].forward(x.bottomRows(kFairnessFeatures), cache ? &cache->psi[1] : nullptr);
    return phi_.forward(h, cache ? &cache->phi : nullptr).rowwise().sum();
  }

  /// (v_efficiency, v_fairness).
  Vec<T> forward(const Mat<T>& x, Cache* cache = nullptr) const {
    const Mat<T> s = pooled(x, cache);
    return out_.forward(s, cache ? &cache->out : nullptr).col(0);
  }

  void backward(const Cache& cache, const Vec<T>& dvalue) {
    const Mat<T> dv = dvalue;
    const Mat<T> ds = out_.backward(cache.out, dv);
    const Mat<T> dg = ds.col(0).replicate(1, cache.cols);
    const Mat<T> dh = phi_.backward(cache.phi, dg);
    psi_[0].backward(cache.psi[0], dh.topRows(kEmbedding));
    psi_[1].backward(cache.psi[1], dh.bottomRows(kEmbedding));
  }

 private:
  Mlp<T> psi_[2], phi_, out_;
};

/// Softmax over valid nodes; invalid nodes get probability 0.
template <typename T>
RowVec<T> masked_softmax(const RowVec<T>& logits, const ActionMask& mask) {
  if (static_cast<Eigen::Index>(mask.size()) != logits.size()) throw std::invalid_argument("masked_softmax: size mismatch");
  T mx = -std::numeric_limits<T>::infinity();
  for (Eigen::Index i = 0; i < logits.size(); ++i) {
    if (mask[i]) mx = std::max(mx, logits[i]);
  }
  if (!std::isfinite(static_cast<double>(mx))) throw std::invalid_argument("masked_softmax: no valid node");
  RowVec<T> p = RowVec<T>::Zero(logits.size());
  T sum = T(0);
  for (Eigen::Index i = 0; i < logits.size(); ++i) {
    if (mask[i]) {
      p[i] = std::exp(logits[i] - mx);
      sum += p[i];
    }
  }
  return p / sum;
}

/// log p(action) under the masked softmax, computed stably.
template <typename T>
T masked_log_prob(const RowVec<T>& logits, const ActionMask& mask, Eigen::Index action) {
  T mx = -std::numeric_limits<T>::infinity();
  for (Eigen::Index i = 0; i < logits.size(); ++i) {
    if (mask[i]) mx = std::max(mx, logits[i]);
  }
  T sum = T(0);
  for (Eigen::Index i = 0; i < logits.size(); ++i) {
    if (mask[i]) sum += std::exp(logits[i] - mx);
  }
  return logits[action] - mx - std::log(sum);
}

/// Entropy of a probability row, skipping zero entries.
template <typename T>
T entropy(const RowVec<T>& p) {
  T h = T(0);
  for (Eigen::Index i = 0; i < p.size(); ++i) {
    if (p[i] > T(0)) h -= p[i] * std::log(p[i]);
  }
  return h;
}

/// d/d(logits) of coef_logp * log p(action) + coef_entropy * H(p), with p the masked softmax.
template <typename T>
RowVec<T> policy_logit_grad(const RowVec<T>& p, const ActionMask& mask, Eigen::Index action, T coef_logp,
                            T coef_entropy) {
  const T h = entropy(p);
  RowVec<T> g = RowVec<T>::Zero(p.size());
  for (Eigen::Index j = 0; j < p.size(); ++j) {
    if (!mask[j]) continue;
    g[j] = -coef_logp * p[j];
    if (p[j] > T(0)) g[j] -= coef_entropy * p[j] * (std::log(p[j]) + h);
  }
  g[action] += coef_logp;
  return g;
}

}  // namespace colpick::nn
