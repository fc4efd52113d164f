#pragma once

#include "colpick/random.hpp"

#include <Eigen/Core>

#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

namespace colpick::nn {

inline constexpr double kLeakySlope = 0.01;

enum class Activation { kLeakyRelu, kIdentity };

template <typename T>
using Mat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic>;
template <typename T>
using Vec = Eigen::Matrix<T, Eigen::Dynamic, 1>;
template <typename T>
using RowVec = Eigen::Matrix<T, 1, Eigen::Dynamic>;

/// Fully connected layer over column batches, with its own gradient buffers.
template <typename T>
struct DenseLayer {
  std::string name;
  Mat<T> W;  // out x in
  Vec<T> b;
  Activation act = Activation::kLeakyRelu;
  Mat<T> gW;
  Vec<T> gb;

  DenseLayer() = default;
  DenseLayer(std::string layer_name, int in, int out, Activation a)
      : name(std::move(layer_name)), W(Mat<T>::Zero(out, in)), b(Vec<T>::Zero(out)), act(a),
        gW(Mat<T>::Zero(out, in)), gb(Vec<T>::Zero(out)) {}

  int in() const { return static_cast<int>(W.cols()); }
  int out() const { return static_cast<int>(W.rows()); }
  Eigen::Index size() const { return W.size() + b.size(); }

  /// Glorot uniform weights, zero bias.
  void init(RandomStream& rs) {
    const double a = std::sqrt(6.0 / static_cast<double>(in() + out()));
    for (Eigen::Index i = 0; i < W.size(); ++i) W.data()[i] = static_cast<T>((2.0 * rs.uniform() - 1.0) * a);
    b.setZero();
  }

  void zero_grad() {
    gW.setZero();
    gb.setZero();
  }

  /// Returns the activated output; `pre` receives the pre-activation if given.
  Mat<T> forward(const Mat<T>& x, Mat<T>* pre = nullptr) const {
    Mat<T> z = W * x;
    z.colwise() += b;
    if (pre) *pre = z;
    if (act == Activation::kLeakyRelu) {
      const T slope = static_cast<T>(kLeakySlope);
      z = z.unaryExpr([slope](T v) { return v > T(0) ? v : slope * v; });
    }
    return z;
  }

  /// Accumulates parameter gradients and returns the gradient w.r.t. the input.
  Mat<T> backward(const Mat<T>& x, const Mat<T>& pre, const Mat<T>& dy) {
    Mat<T> dz = dy;
    if (act == Activation::kLeakyRelu) {
      const T slope = static_cast<T>(kLeakySlope);
      dz = dz.binaryExpr(pre, [slope](T g, T p) { return p > T(0) ? g : slope * g; });
    }
    gW.noalias() += dz * x.transpose();
    gb += dz.rowwise().sum();
    return W.transpose() * dz;
  }
};

/// Stack of dense layers applied column-wise.
template <typename T>
class Mlp {
 public:
  struct Cache {
    std::vector<Mat<T>> inputs;
    std::vector<Mat<T>> pre;
  };

  Mlp() = default;
  /// Hidden layers use leaky ReLU; the last layer uses `last`.
  Mlp(const std::string& name, int in, const std::vector<int>& widths, Activation last) {
    int prev = in;
    for (std::size_t i = 0; i < widths.size(); ++i) {
      const Activation a = i + 1 == widths.size() ? last : Activation::kLeakyRelu;
      layers_.emplace_back(name + "." + std::to_string(i), prev, widths[i], a);
      prev = widths[i];
    }
  }

  int in() const { return layers_.front().in(); }
  int out() const { return layers_.back().out(); }
  std::vector<DenseLayer<T>>& layers() { return layers_; }
  const std::vector<DenseLayer<T>>& layers() const { return layers_; }

  Mat<T> forward(const Mat<T>& x, Cache* cache = nullptr) const {
    if (x.rows() != in()) throw std::invalid_argument("Mlp::forward: input width mismatch");
    if (cache) {
      cache->inputs.resize(layers_.size());
      cache->pre.resize(layers_.size());
    }
    Mat<T> h = x;
    for (std::size_t i = 0; i < layers_.size(); ++i) {
      if (cache) cache->inputs[i] = h;
      h = layers_[i].forward(h, cache ? &cache->pre[i] : nullptr);
    }
    return h;
  }

  Mat<T> backward(const Cache& cache, const Mat<T>& dy) {
    Mat<T> g = dy;
    for (std::size_t i = layers_.size(); i-- > 0;) g = layers_[i].backward(cache.inputs[i], cache.pre[i], g);
    return g;
  }

 private:
  std::vector<DenseLayer<T>> layers_;
};

}  // namespace colpick::nn
