#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <memory>
#include <numbers>
#include <numeric>
#include <random>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "banditlab/mlp.hpp"
#include "banditlab/rng.hpp"

namespace banditlab {

/// One round of the bandit protocol: n unit-norm arms plus their hidden
/// expected rewards. The expected rewards are only for the regret
/// accountant; policies other than the oracle must not read them.
struct RoundContext {
  std::vector<Vector> arms;
  std::vector<double> expected_rewards;
  std::int64_t round_index = 1;

  int num_arms() const { return static_cast<int>(arms.size()); }
};

enum class EnvKind { synthetic_linear, synthetic_quadratic, synthetic_cosine, classification };
enum class NoiseKind { none, gaussian, bernoulli };

struct EnvSpec {
  EnvKind kind = EnvKind::synthetic_quadratic;
  int dim = 10;
  int n_arms = 10;
  Vector hidden_param;  // unit norm; generated from seed when empty
  NoiseKind noise = NoiseKind::gaussian;
  double noise_sigma = 0.05;
  std::uint64_t seed = 0;
};

/// Per-round regret term: best expected reward minus the chosen arm's.
inline double pseudo_regret(const RoundContext& round, int chosen_index) {
  if (chosen_index < 0 || chosen_index >= round.num_arms())
    throw std::out_of_range("pseudo_regret: chosen index out of range");
  const double best =
      *std::max_element(round.expected_rewards.begin(), round.expected_rewards.end());
  return best - round.expected_rewards[chosen_index];
}

class BanditEnv {
 public:
  virtual ~BanditEnv() = default;
  virtual int dim() const = 0;
  virtual int n_arms() const = 0;
  /// Deterministic function of (env seed, t); independent of policy choices.
  virtual RoundContext next_round(std::int64_t t) const = 0;
  /// Realized reward for playing arm `arm_index` in round t. The noise
  /// stream is keyed by (seed, t, arm_index) so counterfactual rewards are
  /// well defined and identical across policies.
  virtual double realize(std::int64_t t, int arm_index, double expected) const = 0;
};

/// Rounds of i.i.d. sphere-uniform arms with a seeded nonlinear (or linear)
/// hidden reward function.
class SyntheticEnv : public BanditEnv {
 public:
  explicit SyntheticEnv(EnvSpec spec) : spec_(std::move(spec)) {
    if (spec_.kind == EnvKind::classification)
      throw std::invalid_argument("SyntheticEnv: classification spec not accepted");
    if (spec_.dim < 1 || spec_.n_arms < 2)
      throw std::invalid_argument("SyntheticEnv: need dim >= 1 and n_arms >= 2");
    if (spec_.hidden_param.size() == 0) {
      auto eng = make_engine({spec_.seed, stream::hidden_param});
      spec_.hidden_param = sample_sphere(spec_.dim, eng);
    }
    if (spec_.hidden_param.size() != spec_.dim)
      throw std::invalid_argument("SyntheticEnv: hidden_param dimension mismatch");
    if (std::abs(spec_.hidden_param.norm() - 1.0) > 1e-9)
      throw std::invalid_argument("SyntheticEnv: hidden_param must be unit norm");
  }

  const EnvSpec& spec() const { return spec_; }
  int dim() const override { return spec_.dim; }
  int n_arms() const override { return spec_.n_arms; }

  double expected_reward(const Vector& x) const {
    if (x.size() != spec_.dim)
      throw std::invalid_argument("expected_reward: arm dimension mismatch");
    const double s = x.dot(spec_.hidden_param);
    switch (spec_.kind) {
      case EnvKind::synthetic_linear: return (s + 1.0) / 2.0;
      case EnvKind::synthetic_quadratic: return s * s;
      case EnvKind::synthetic_cosine:
        return (std::cos(3.0 * std::numbers::pi * s) + 1.0) / 2.0;
      default: return 0.0;  // unreachable
    }
  }

  RoundContext next_round(std::int64_t t) const override {
    auto eng = make_engine({spec_.seed, stream::round_arms, static_cast<std::uint64_t>(t)});
    RoundContext round;
    round.round_index = t;
    round.arms.reserve(spec_.n_arms);
    round.expected_rewards.reserve(spec_.n_arms);
    for (int i = 0; i < spec_.n_arms; ++i) {
      Vector x = sample_sphere(spec_.dim, eng);
      round.expected_rewards.push_back(expected_reward(x));
      round.arms.push_back(std::move(x));
    }
    return round;
  }

  double realize(std::int64_t t, int arm_index, double expected) const override {
    auto eng = make_engine({spec_.seed, stream::reward_noise, static_cast<std::uint64_t>(t),
                            static_cast<std::uint64_t>(arm_index)});
    return realize_with(eng, expected);
  }

  /// Draws a realized reward from an explicit engine (test surface).
  double realize_with(std::mt19937_64& eng, double expected) const {
    switch (spec_.noise) {
      case NoiseKind::none: return expected;
      case NoiseKind::gaussian: {
        std::normal_distribution<double> n01(0.0, 1.0);
        return std::clamp(expected + spec_.noise_sigma * n01(eng), 0.0, 1.0);
      }
      case NoiseKind::bernoulli: {
        std::uniform_real_distribution<double> u01(0.0, 1.0);
        return u01(eng) < expected ? 1.0 : 0.0;
      }
    }
    return expected;
  }

  std::pair<double, double> reward_of(const Vector& arm, std::mt19937_64& eng) const {
    const double expected = expected_reward(arm);
    return {expected, realize_with(eng, expected)};
  }

  static Vector sample_sphere(int dim, std::mt19937_64& eng) {
    std::normal_distribution<double> n01(0.0, 1.0);
    Vector x(dim);
    double norm = 0.0;
    do {
      for (int i = 0; i < dim; ++i) x[i] = n01(eng);
      norm = x.norm();
    } while (norm < 1e-12);
    return x / norm;
  }

 private:
  EnvSpec spec_;
};

struct ClassificationDataset {
  std::vector<Vector> features;  // all of dimension feature_dim, non-zero
  std::vector<int> labels;       // in [0, num_classes)
  int num_classes = 0;

  int feature_dim() const { return features.empty() ? 0 : static_cast<int>(features[0].size()); }
  int num_rows() const { return static_cast<int>(features.size()); }
};

// Keeps k * d0 gradient features tractable at desk scale.
inline constexpr int kMaxClassificationArmDim = 4096;

/// Parses a comma-separated file with a header line, real-valued feature
/// columns and one integer label column. Errors cite 1-based line numbers.
inline ClassificationDataset load_csv_dataset(const std::string& path,
                                              const std::string& label_column) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open dataset file: " + path);

  auto split = [](const std::string& line) {
    std::vector<std::string> cells;
    std::size_t start = 0;
    while (true) {
      const auto pos = line.find(',', start);
      std::string cell = line.substr(start, pos == std::string::npos ? pos : pos - start);
      // trim spaces and a possible trailing CR
      while (!cell.empty() && (cell.back() == ' ' || cell.back() == '\r' || cell.back() == '\t'))
        cell.pop_back();
      std::size_t lead = 0;
      while (lead < cell.size() && (cell[lead] == ' ' || cell[lead] == '\t')) ++lead;
      cells.push_back(cell.substr(lead));
      if (pos == std::string::npos) break;
      start = pos + 1;
    }
    return cells;
  };

  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error(path + ": no data rows");
  const auto header = split(line);
  int label_idx = -1;
  for (std::size_t i = 0; i < header.size(); ++i)
    if (header[i] == label_column) label_idx = static_cast<int>(i);
  if (label_idx < 0)
    throw std::runtime_error(path + ": unknown label column '" + label_column + "'");

  ClassificationDataset ds;
  const int n_cols = static_cast<int>(header.size());
  const int d0 = n_cols - 1;
  if (d0 < 1) throw std::runtime_error(path + ": no feature columns");

  int line_no = 1;
  int max_label = -1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    const auto cells = split(line);
    if (static_cast<int>(cells.size()) != n_cols)
      throw std::runtime_error(path + ": line " + std::to_string(line_no) +
                               ": expected " + std::to_string(n_cols) + " columns, got " +
                               std::to_string(cells.size()));
    Vector x(d0);
    int label = -1;
    int fi = 0;
    for (int c = 0; c < n_cols; ++c) {
      const std::string& cell = cells[c];
      if (c == label_idx) {
        long v = 0;
        auto [p, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
        if (ec != std::errc() || p != cell.data() + cell.size() || v < 0)
          throw std::runtime_error(path + ": line " + std::to_string(line_no) +
                                   ": label '" + cell + "' is not a non-negative integer");
        label = static_cast<int>(v);
      } else {
        double v = 0.0;
        auto [p, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
        if (ec != std::errc() || p != cell.data() + cell.size())
          throw std::runtime_error(path + ": line " + std::to_string(line_no) +
                                   ": non-numeric feature '" + cell + "'");
        x[fi++] = v;
      }
    }
    if (x.norm() == 0.0)
      throw std::runtime_error(path + ": line " + std::to_string(line_no) +
                               ": all-zero feature vector");
    ds.features.push_back(std::move(x));
    ds.labels.push_back(label);
    max_label = std::max(max_label, label);
  }
  if (ds.features.empty()) throw std::runtime_error(path + ": no data rows");
  ds.num_classes = max_label + 1;
  if (ds.num_classes < 2)
    throw std::runtime_error(path + ": need at least 2 distinct classes");
  if (ds.num_classes * ds.feature_dim() > kMaxClassificationArmDim)
    throw std::runtime_error(path + ": k * d0 = " +
                             std::to_string(ds.num_classes * ds.feature_dim()) +
                             " exceeds the supported maximum " +
                             std::to_string(kMaxClassificationArmDim));
  return ds;
}

/// Builds the k-arm round for one dataset row: arm i is the block vector
/// (0,...,0, x, 0,...,0) with x placed in block i; reward 1 exactly for the
/// block matching the true class.
inline RoundContext classification_to_bandit(const ClassificationDataset& ds, int row_index,
                                             bool normalize = true) {
  if (row_index < 0 || row_index >= ds.num_rows())
    throw std::out_of_range("classification_to_bandit: row index out of range");
  const int k = ds.num_classes;
  const int d0 = ds.feature_dim();
  Vector x = ds.features[row_index];
  if (normalize) x /= x.norm();
  RoundContext round;
  round.arms.reserve(k);
  round.expected_rewards.reserve(k);
  for (int i = 0; i < k; ++i) {
    Vector arm = Vector::Zero(k * d0);
    arm.segment(static_cast<Eigen::Index>(i) * d0, d0) = x;
    round.arms.push_back(std::move(arm));
    round.expected_rewards.push_back(ds.labels[row_index] == i ? 1.0 : 0.0);
  }
  return round;
}

/// Streams dataset rows without replacement per epoch, reshuffling between
/// epochs; rewards are the 0/1 class-match rewards.
class ClassificationEnv : public BanditEnv {
 public:
  ClassificationEnv(std::shared_ptr<const ClassificationDataset> dataset, std::uint64_t seed)
      : ds_(std::move(dataset)), seed_(seed) {
    if (!ds_ || ds_->num_rows() == 0)
      throw std::invalid_argument("ClassificationEnv: empty dataset");
  }

  ClassificationEnv(ClassificationDataset dataset, std::uint64_t seed)
      : ClassificationEnv(std::make_shared<const ClassificationDataset>(std::move(dataset)),
                          seed) {}

  const ClassificationDataset& dataset() const { return *ds_; }
  int dim() const override { return ds_->num_classes * ds_->feature_dim(); }
  int n_arms() const override { return ds_->num_classes; }

  RoundContext next_round(std::int64_t t) const override {
    if (t < 1) throw std::invalid_argument("next_round: t must be >= 1");
    const std::int64_t rows = ds_->num_rows();
    const std::int64_t epoch = (t - 1) / rows;
    const std::int64_t pos = (t - 1) % rows;
    if (epoch != cached_epoch_) {
      order_.resize(rows);
      std::iota(order_.begin(), order_.end(), 0);
      auto eng = make_engine({seed_, stream::epoch_shuffle, static_cast<std::uint64_t>(epoch)});
      std::shuffle(order_.begin(), order_.end(), eng);
      cached_epoch_ = epoch;
    }
    RoundContext round = classification_to_bandit(*ds_, order_[pos], true);
    round.round_index = t;
    return round;
  }

  // Bernoulli on {0,1} expected rewards is deterministic.
  double realize(std::int64_t, int, double expected) const override { return expected; }

 private:
  std::shared_ptr<const ClassificationDataset> ds_;
  std::uint64_t seed_;
  mutable std::int64_t cached_epoch_ = -1;
  mutable std::vector<int> order_;
};

}  // namespace banditlab
