#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <vector>

#include "banditlab/rng.hpp"

namespace banditlab {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

// Flat view of all network weights, layer-major, each matrix row-major.
using ParamVector = Eigen::VectorXd;

struct MlpConfig {
  int input_dim = 1;
  int width = 100;
  int depth = 2;  // number of weight layers L, depth >= 2
  std::uint64_t seed = 0;
};

inline int param_count(const MlpConfig& c) {
  return c.width * c.input_dim + (c.depth - 2) * c.width * c.width + c.width;
}

/// Fully-connected ReLU network f(x) = W_L s(W_{L-1} s(... s(W_1 x))) with
/// scalar output and no bias terms. Gradients are exact backprop; the ReLU
/// subgradient at 0 is taken as 0.
class Mlp {
 public:
  explicit Mlp(const MlpConfig& config) : config_(config) {
    if (config.input_dim < 1 || config.width < 1 || config.depth < 2)
      throw std::invalid_argument("Mlp: need input_dim >= 1, width >= 1, depth >= 2");
    const int d = config.input_dim, m = config.width, L = config.depth;
    auto eng = make_engine({config.seed});
    std::normal_distribution<double> hidden(0.0, std::sqrt(2.0 / m));
    std::normal_distribution<double> output(0.0, std::sqrt(1.0 / m));
    layers_.reserve(L);
    for (int l = 0; l < L; ++l) {
      const int rows = (l == L - 1) ? 1 : m;
      const int cols = (l == 0) ? d : m;
      Matrix w(rows, cols);
      auto& dist = (l == L - 1) ? output : hidden;
      // Row-major fill so the draw order matches the flattened layout.
      for (int i = 0; i < rows; ++i)
        for (int j = 0; j < cols; ++j) w(i, j) = dist(eng);
      layers_.push_back(std::move(w));
    }
  }

  const MlpConfig& config() const { return config_; }
  int input_dim() const { return config_.input_dim; }
  int width() const { return config_.width; }
  int depth() const { return config_.depth; }
  int num_params() const { return param_count(config_); }

  std::vector<Matrix>& layers() { return layers_; }
  const std::vector<Matrix>& layers() const { return layers_; }

  double forward(const Vector& x) const {
    check_input(x);
    Vector h = x;
    for (int l = 0; l + 1 < config_.depth; ++l)
      h = (layers_[l] * h).cwiseMax(0.0);
    return (layers_.back() * h)(0);
  }

  /// Gradient of the scalar output w.r.t. every weight, written into `out`
  /// (resized to num_params()).
  void grad_params(const Vector& x, ParamVector& out) const {
    check_input(x);
    const int L = config_.depth;
    // Forward pass keeping activations; acts[l] is the input of layer l.
    std::vector<Vector> acts(L);
    acts[0] = x;
    for (int l = 0; l + 1 < L; ++l)
      acts[l + 1] = (layers_[l] * acts[l]).cwiseMax(0.0);

    out.resize(num_params());
    int offset = num_params();

    // Output layer: d f / d W_L = h_{L-1}.
    offset -= config_.width;
    out.segment(offset, config_.width) = acts[L - 1];

    // Backpropagate through the ReLU layers. delta holds d f / d z_l.
    Vector delta = layers_.back().transpose();  // 1 x m row as column
    for (int l = L - 2; l >= 0; --l) {
      // z_l > 0 exactly where the activation is positive.
      delta.array() *= (acts[l + 1].array() > 0.0).cast<double>();
      const int rows = static_cast<int>(layers_[l].rows());
      const int cols = static_cast<int>(layers_[l].cols());
      offset -= rows * cols;
      Eigen::Map<Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>
          block(out.data() + offset, rows, cols);
      block.noalias() = delta * acts[l].transpose();
      if (l > 0) delta = layers_[l].transpose() * delta;
    }
  }

  ParamVector grad_params(const Vector& x) const {
    ParamVector g;
    grad_params(x, g);
    return g;
  }

  /// One SGD step: W <- W - lr * g (flat layout as in grad_params).
  void sgd_step(const ParamVector& grad, double lr) {
    if (grad.size() != num_params())
      throw std::invalid_argument("sgd_step: gradient length mismatch");
    if (!grad.allFinite())
      throw std::invalid_argument("sgd_step: non-finite gradient entries");
    if (!(lr >= 0.0))
      throw std::invalid_argument("sgd_step: learning rate must be >= 0");
    if (lr == 0.0) return;
    int offset = 0;
    for (auto& w : layers_) {
      const int rows = static_cast<int>(w.rows());
      const int cols = static_cast<int>(w.cols());
      Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>
          block(grad.data() + offset, rows, cols);
      w -= lr * block;
      offset += rows * cols;
    }
  }

  ParamVector params() const {
    ParamVector out(num_params());
    int offset = 0;
    for (const auto& w : layers_) {
      const int rows = static_cast<int>(w.rows());
      const int cols = static_cast<int>(w.cols());
      Eigen::Map<Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>
          block(out.data() + offset, rows, cols);
      block = w;
      offset += rows * cols;
    }
    return out;
  }

  void set_params(const ParamVector& flat) {
    if (flat.size() != num_params())
      throw std::invalid_argument("set_params: length mismatch");
    int offset = 0;
    for (auto& w : layers_) {
      const int rows = static_cast<int>(w.rows());
      const int cols = static_cast<int>(w.cols());
      w = Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
          flat.data() + offset, rows, cols);
      offset += rows * cols;
    }
  }

 private:
  void check_input(const Vector& x) const {
    if (x.size() != config_.input_dim)
      throw std::invalid_argument("Mlp: input dimension mismatch");
  }

  MlpConfig config_;
  std::vector<Matrix> layers_;
};

// d/dpred of the squared loss (pred - target)^2 / 2.
inline double squared_loss_grad(double pred, double target) {
  return pred - target;
}

/// One warm-start SGD step on the sample (x, target). Returns the
/// pre-update prediction.
inline double fit_one(Mlp& net, const Vector& x, double target, double lr) {
  const double pred = net.forward(x);
  ParamVector g = net.grad_params(x);
  g *= squared_loss_grad(pred, target);
  net.sgd_step(g, lr);
  return pred;
}

}  // namespace banditlab
