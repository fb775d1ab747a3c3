#pragma once

#include <cmath>
#include <deque>
#include <numbers>
#include <stdexcept>
#include <utility>
#include <vector>

#include "banditlab/mlp.hpp"
#include "banditlab/policy.hpp"

namespace banditlab {

enum class LabelVariant { residual, absolute, relu };

/// Training label for the exploration network given the realized reward and
/// the exploitation network's pre-update prediction.
inline double exploration_label(LabelVariant variant, double reward, double f1_pred) {
  const double residual = reward - f1_pred;
  switch (variant) {
    case LabelVariant::residual: return residual;
    case LabelVariant::absolute: return std::abs(residual);
    case LabelVariant::relu: return std::max(0.0, residual);
  }
  return residual;
}

struct EENetConfig {
  int arm_dim = 0;
  int width = 100;
  int depth = 2;
  double lr1 = 1e-2;
  double lr2 = 1e-2;
  // Rows of the random-sign projection applied to grad f1 before it enters
  // the exploration feature; 0 disables projection (identity mode).
  int proj_dim = 10;
  LabelVariant variant = LabelVariant::residual;
  // Optional replay of the last `replay_size` samples each round; off in the
  // plain algorithm and excluded from acceptance runs.
  bool replay = false;
  int replay_size = 32;
  std::uint64_t seed = 0;
};

/// Exploitation network f1 plus exploration network f2 trained on reward
/// residuals. Selection is argmax of f1(x) + f2(phi(x)); both networks take
/// one warm-start SGD step per round on the newest sample.
class EENetPolicy : public Policy {
 public:
  explicit EENetPolicy(const EENetConfig& cfg)
      : cfg_(cfg),
        f1_(MlpConfig{cfg.arm_dim, cfg.width, cfg.depth, mix_seed({cfg.seed, stream::f1_init})}),
        f2_(MlpConfig{feature_dim(cfg), cfg.width, cfg.depth,
                      mix_seed({cfg.seed, stream::f2_init})}) {
    if (cfg.proj_dim > 0) {
      const int p1 = f1_.num_params();
      auto eng = make_engine({cfg.seed, stream::projector});
      std::uniform_int_distribution<int> sign(0, 1);
      const double scale = 1.0 / std::sqrt(static_cast<double>(cfg.proj_dim));
      projector_.resize(cfg.proj_dim, p1);
      for (int i = 0; i < cfg.proj_dim; ++i)
        for (int j = 0; j < p1; ++j) projector_(i, j) = sign(eng) ? scale : -scale;
    }
  }

  static int feature_dim(const EENetConfig& cfg) {
    const int grad_dim =
        cfg.proj_dim > 0 ? cfg.proj_dim : param_count(MlpConfig{cfg.arm_dim, cfg.width, cfg.depth});
    return grad_dim + cfg.arm_dim;
  }

  const EENetConfig& config() const { return cfg_; }
  Mlp& f1() { return f1_; }
  const Mlp& f1() const { return f1_; }
  Mlp& f2() { return f2_; }
  const Mlp& f2() const { return f2_; }
  const Matrix& projector() const { return projector_; }

  /// Exploration feature phi(x): the (optionally projected) gradient of f1
  /// scaled to norm 1/sqrt(2), then x/sqrt(2).
  Vector phi(const Vector& x) const { return phi_from_grad(f1_.grad_params(x), x); }

  std::vector<double> scores(const RoundContext& round) const {
    std::vector<double> out;
    out.reserve(round.num_arms());
    ParamVector g;
    for (const auto& x : round.arms) {
      f1_.grad_params(x, g);
      out.push_back(f1_.forward(x) + f2_.forward(phi_from_grad(g, x)));
    }
    return out;
  }

  int select(const RoundContext& round) override {
    if (round.num_arms() == 0) throw std::invalid_argument("select: empty round");
    return argmax_index(scores(round));
  }

  void update(const Vector& x, double reward) override {
    if (!std::isfinite(reward)) throw std::invalid_argument("update: non-finite reward");
    step_both(x, reward);
    if (cfg_.replay) {
      for (const auto& [xb, rb] : buffer_) step_both(xb, rb);
      buffer_.emplace_back(x, reward);
      if (static_cast<int>(buffer_.size()) > cfg_.replay_size) buffer_.pop_front();
    }
  }

 private:
  // Lines 9-12 of the per-round update: the residual label and the phi input
  // are both taken at the pre-update f1 parameters.
  void step_both(const Vector& x, double reward) {
    const double pred1 = f1_.forward(x);
    ParamVector g1 = f1_.grad_params(x);
    const Vector feat = phi_from_grad(g1, x);
    const double label = exploration_label(cfg_.variant, reward, pred1);

    g1 *= squared_loss_grad(pred1, reward);
    f1_.sgd_step(g1, cfg_.lr1);

    const double pred2 = f2_.forward(feat);
    ParamVector g2 = f2_.grad_params(feat);
    g2 *= squared_loss_grad(pred2, label);
    f2_.sgd_step(g2, cfg_.lr2);
  }

  Vector phi_from_grad(const ParamVector& g, const Vector& x) const {
    const double inv_sqrt2 = 1.0 / std::numbers::sqrt2;
    Vector projected = projector_.size() > 0 ? Vector(projector_ * g) : Vector(g);
    const double norm = projected.norm();
    Vector feat(projected.size() + x.size());
    if (norm >= 1e-12)
      feat.head(projected.size()) = projected * (inv_sqrt2 / norm);
    else
      feat.head(projected.size()).setZero();
    feat.tail(x.size()) = x * inv_sqrt2;
    return feat;
  }

  EENetConfig cfg_;
  Mlp f1_;
  Mlp f2_;
  Matrix projector_;  // empty in identity mode
  std::deque<std::pair<Vector, double>> buffer_;
};

}  // namespace banditlab
