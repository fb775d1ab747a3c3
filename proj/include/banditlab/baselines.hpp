#pragma once

#include <cmath>
#include <stdexcept>
#include <vector>

#include "banditlab/mlp.hpp"
#include "banditlab/policy.hpp"

namespace banditlab {

/// Ridge-regression UCB: score = x' theta_hat + alpha sqrt(x' A^-1 x) with
/// A = lambda I + sum x x', b = sum r x. The inverse is maintained
/// incrementally by Sherman-Morrison.
class LinUcbPolicy : public Policy {
 public:
  LinUcbPolicy(int dim, double alpha, double lambda)
      : alpha_(alpha), lambda_(lambda) {
    if (dim < 1) throw std::invalid_argument("LinUcbPolicy: dim must be >= 1");
    if (lambda <= 0.0) throw std::invalid_argument("LinUcbPolicy: lambda must be > 0");
    A_ = lambda * Matrix::Identity(dim, dim);
    A_inv_ = Matrix::Identity(dim, dim) / lambda;
    b_ = Vector::Zero(dim);
  }

  std::vector<double> scores(const RoundContext& round) const {
    const Vector theta = A_inv_ * b_;
    std::vector<double> out;
    out.reserve(round.num_arms());
    for (const auto& x : round.arms)
      out.push_back(x.dot(theta) + alpha_ * std::sqrt(x.dot(A_inv_ * x)));
    return out;
  }

  int select(const RoundContext& round) override { return argmax_index(scores(round)); }

  void update(const Vector& x, double r) override {
    A_.noalias() += x * x.transpose();
    const Vector v = A_inv_ * x;
    A_inv_.noalias() -= v * v.transpose() / (1.0 + x.dot(v));  // Sherman-Morrison
    b_ += r * x;
  }

  const Matrix& A() const { return A_; }
  const Matrix& A_inv() const { return A_inv_; }
  const Vector& b() const { return b_; }
  Vector theta_hat() const { return A_inv_ * b_; }
  double alpha() const { return alpha_; }
  double lambda() const { return lambda_; }

 private:
  double alpha_;
  double lambda_;
  Matrix A_;
  Matrix A_inv_;
  Vector b_;
};

/// Kernel regression UCB with an RBF kernel; score = mu + nu sigma where
/// mu = k' (K + lambda I)^-1 y and sigma^2 = k(x,x) - k' (K + lambda I)^-1 k.
/// The Cholesky factor of K + lambda I grows one row per stored context, and
/// no contexts are added after the 1000th.
class KernelUcbPolicy : public Policy {
 public:
  static constexpr int kContextCap = 1000;

  KernelUcbPolicy(int dim, double nu, double lambda, double lengthscale)
      : dim_(dim), nu_(nu), lambda_(lambda), lengthscale_(lengthscale) {
    if (lambda <= 0.0) throw std::invalid_argument("KernelUcbPolicy: lambda must be > 0");
    if (lengthscale <= 0.0)
      throw std::invalid_argument("KernelUcbPolicy: lengthscale must be > 0");
    chol_.resize(kContextCap, kContextCap);
    u_.resize(kContextCap);
  }

  double kernel(const Vector& a, const Vector& b) const {
    return std::exp(-(a - b).squaredNorm() / (2.0 * lengthscale_ * lengthscale_));
  }

  /// Posterior mean and variance at a query point.
  std::pair<double, double> predict(const Vector& x) const {
    const int h = static_cast<int>(contexts_.size());
    if (h == 0) return {0.0, 1.0};
    Vector k(h);
    for (int i = 0; i < h; ++i) k[i] = kernel(x, contexts_[i]);
    const Vector v = chol_.topLeftCorner(h, h)
                         .triangularView<Eigen::Lower>()
                         .solve(k);
    const double mu = v.dot(u_.head(h));
    const double var = std::max(0.0, 1.0 - v.squaredNorm());
    return {mu, var};
  }

  std::vector<double> scores(const RoundContext& round) const {
    std::vector<double> out;
    out.reserve(round.num_arms());
    for (const auto& x : round.arms) {
      const auto [mu, var] = predict(x);
      out.push_back(mu + nu_ * std::sqrt(var));
    }
    return out;
  }

  int select(const RoundContext& round) override { return argmax_index(scores(round)); }

  void update(const Vector& x, double r) override {
    const int h = static_cast<int>(contexts_.size());
    if (h >= kContextCap) return;  // silently dropped past the cap
    Vector k(h);
    for (int i = 0; i < h; ++i) k[i] = kernel(x, contexts_[i]);
    Vector l(h);
    if (h > 0)
      l = chol_.topLeftCorner(h, h).triangularView<Eigen::Lower>().solve(k);
    const double diag2 = 1.0 + lambda_ - l.squaredNorm();
    const double diag = std::sqrt(std::max(diag2, 1e-12));
    chol_.row(h).head(h) = l.transpose();
    chol_(h, h) = diag;
    u_[h] = (r - l.dot(u_.head(h))) / diag;
    contexts_.push_back(x);
    rewards_.push_back(r);
  }

  const std::vector<Vector>& contexts() const { return contexts_; }
  const std::vector<double>& rewards() const { return rewards_; }
  double nu() const { return nu_; }
  double lambda() const { return lambda_; }
  double lengthscale() const { return lengthscale_; }

 private:
  int dim_;
  double nu_;
  double lambda_;
  double lengthscale_;
  std::vector<Vector> contexts_;
  std::vector<double> rewards_;
  Matrix chol_;  // lower Cholesky factor of K + lambda I, top-left h x h live
  Vector u_;     // L^-1 y, first h entries live
};

/// Greedy on f1 except for an epsilon-probability uniform pick.
class NeuralEpsilonPolicy : public Policy {
 public:
  NeuralEpsilonPolicy(int dim, int width, int depth, double epsilon, double lr,
                      std::uint64_t seed)
      : f1_(MlpConfig{dim, width, depth, mix_seed({seed, stream::f1_init})}),
        epsilon_(epsilon), lr_(lr), eng_(make_engine({seed, stream::policy_rng})) {}

  std::vector<double> scores(const RoundContext& round) const {
    std::vector<double> out;
    out.reserve(round.num_arms());
    for (const auto& x : round.arms) out.push_back(f1_.forward(x));
    return out;
  }

  int select(const RoundContext& round) override {
    if (epsilon_ > 0.0) {
      std::uniform_real_distribution<double> u01(0.0, 1.0);
      if (u01(eng_) < epsilon_) {
        std::uniform_int_distribution<int> pick(0, round.num_arms() - 1);
        return pick(eng_);
      }
    }
    return argmax_index(scores(round));
  }

  void update(const Vector& x, double r) override { fit_one(f1_, x, r, lr_); }

  Mlp& f1() { return f1_; }
  const Mlp& f1() const { return f1_; }

 private:
  Mlp f1_;
  double epsilon_;
  double lr_;
  std::mt19937_64 eng_;
};

/// Diagonal surrogate for the gradient outer-product matrix; every
/// coordinate starts at lambda and only grows.
struct DiagCovariance {
  Vector z;
  double lambda = 1.0;

  DiagCovariance(int p, double lambda_init) : z(Vector::Constant(p, lambda_init)), lambda(lambda_init) {
    if (lambda_init <= 0.0) throw std::invalid_argument("DiagCovariance: lambda must be > 0");
  }

  void add(const ParamVector& g, int width) {
    z.array() += g.array().square() / static_cast<double>(width);
  }

  /// sigma^2 = sum_j g_j^2 / (m z_j).
  double variance(const ParamVector& g, int width) const {
    return (g.array().square() / (static_cast<double>(width) * z.array())).sum();
  }
};

/// f1 plus the diagonal gradient-norm confidence bonus
/// nu * sqrt(sum_j g_j^2 / (m z_j)).
class NeuralUcbPolicy : public Policy {
 public:
  NeuralUcbPolicy(int dim, int width, int depth, double nu, double lambda, double lr,
                  std::uint64_t seed)
      : f1_(MlpConfig{dim, width, depth, mix_seed({seed, stream::f1_init})}),
        cov_(f1_.num_params(), lambda), nu_(nu), lr_(lr) {}

  std::vector<double> scores(const RoundContext& round) const {
    std::vector<double> out;
    out.reserve(round.num_arms());
    ParamVector g;
    for (const auto& x : round.arms) {
      f1_.grad_params(x, g);
      out.push_back(f1_.forward(x) + nu_ * std::sqrt(cov_.variance(g, f1_.width())));
    }
    return out;
  }

  int select(const RoundContext& round) override { return argmax_index(scores(round)); }

  // Covariance absorbs the chosen arm's gradient at the pre-update
  // parameters, then f1 takes its SGD step.
  void update(const Vector& x, double r) override {
    cov_.add(f1_.grad_params(x), f1_.width());
    fit_one(f1_, x, r, lr_);
  }

  Mlp& f1() { return f1_; }
  const Mlp& f1() const { return f1_; }
  const DiagCovariance& cov() const { return cov_; }
  double nu() const { return nu_; }

 private:
  Mlp f1_;
  DiagCovariance cov_;
  double nu_;
  double lr_;
};

/// Thompson sampling on r_hat ~ N(f1(x), nu^2 sigma^2) with the same
/// diagonal covariance as NeuralUcbPolicy.
class NeuralTsPolicy : public Policy {
 public:
  NeuralTsPolicy(int dim, int width, int depth, double nu, double lambda, double lr,
                 std::uint64_t seed)
      : f1_(MlpConfig{dim, width, depth, mix_seed({seed, stream::f1_init})}),
        cov_(f1_.num_params(), lambda), nu_(nu), lr_(lr),
        eng_(make_engine({seed, stream::policy_rng})) {}

  std::vector<double> sampled_scores(const RoundContext& round, std::mt19937_64& eng) const {
    std::vector<double> out;
    out.reserve(round.num_arms());
    ParamVector g;
    for (const auto& x : round.arms) {
      f1_.grad_params(x, g);
      const double mean = f1_.forward(x);
      const double sd = nu_ * std::sqrt(cov_.variance(g, f1_.width()));
      if (sd > 0.0) {
        std::normal_distribution<double> sample(mean, sd);
        out.push_back(sample(eng));
      } else {
        out.push_back(mean);
      }
    }
    return out;
  }

  int select(const RoundContext& round) override {
    return argmax_index(sampled_scores(round, eng_));
  }

  void update(const Vector& x, double r) override {
    cov_.add(f1_.grad_params(x), f1_.width());
    fit_one(f1_, x, r, lr_);
  }

  Mlp& f1() { return f1_; }
  const Mlp& f1() const { return f1_; }
  const DiagCovariance& cov() const { return cov_; }

 private:
  Mlp f1_;
  DiagCovariance cov_;
  double nu_;
  double lr_;
  std::mt19937_64 eng_;
};

}  // namespace banditlab
