#pragma once

#include "banditlab/env.hpp"

namespace banditlab {

/// Online bandit policy: pick an arm, then learn from the realized reward of
/// the chosen arm. Each instance is exclusively owned by one run loop.
class Policy {
 public:
  virtual ~Policy() = default;
  virtual int select(const RoundContext& round) = 0;
  virtual void update(const Vector& chosen_arm, double reward) = 0;
};

/// Smallest index attaining the maximum score.
inline int argmax_index(const std::vector<double>& scores) {
  int best = 0;
  for (int i = 1; i < static_cast<int>(scores.size()); ++i)
    if (scores[i] > scores[best]) best = i;
  return best;
}

/// Peeks at the hidden expected rewards; zero-regret reference policy.
class OraclePolicy : public Policy {
 public:
  int select(const RoundContext& round) override {
    return argmax_index(round.expected_rewards);
  }
  void update(const Vector&, double) override {}
};

class RandomPolicy : public Policy {
 public:
  explicit RandomPolicy(std::uint64_t seed) : eng_(make_engine({seed, stream::policy_rng})) {}
  int select(const RoundContext& round) override {
    std::uniform_int_distribution<int> pick(0, round.num_arms() - 1);
    return pick(eng_);
  }
  void update(const Vector&, double) override {}

 private:
  std::mt19937_64 eng_;
};

}  // namespace banditlab
