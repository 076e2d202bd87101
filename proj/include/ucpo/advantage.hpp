#pragma once

#include <string_view>
#include <vector>

#include "ucpo/outcome.hpp"

namespace ucpo {

enum class Method : std::uint8_t { GRPO, GRPO_UC, UCPO };

std::string_view method_name(Method m);        // "GRPO", "GRPO-UC", "UCPO"
Method method_from_name(std::string_view s);

// Per-rollout advantages for one group plus diagnostics. The uncertainty
// fields are populated only on the UCPO path.
struct AdvantageResult {
  std::vector<double> advantages;  // length G, aligned with group.outcomes
  Method method = Method::GRPO;
  bool filtered = false;    // true => every advantage is exactly 0
  double anchor_right = 0;  // shared advantage of Right rollouts (UCPO)
  double gamma_used = 0;    // gain applied to uncertain rollouts (UCPO)
  double det_mean = 0;      // reward mean of the normalization subset
  double det_std = 0;       // reward std of the normalization subset
};

// Advantages collapsed to one value per outcome class. All rollouts of a
// class share one advantage, so most callers (the sweep, the simulator)
// never need the expanded vector. Advantages are computed from class counts
// and per-class rewards rather than by summing per-rollout terms: group
// statistics then depend only on the composition, which makes results
// bit-identical under permutation and lands sign-boundary compositions on
// exact zeros instead of accumulation dust.
struct ClassAdvantages {
  double right = 0;
  double wrong = 0;
  double uncertain = 0;
  bool filtered = false;
  // Statistics of the normalization subset: the whole group under
  // group-relative normalization, the deterministic subset under decoupling.
  // Zero when the group is filtered.
  double det_mean = 0;
  double det_std = 0;

  double of(Outcome o) const {
    switch (o) {
      case Outcome::Right: return right;
      case Outcome::Wrong: return wrong;
      default: return uncertain;
    }
  }
};

// Group-relative normalization over all G rewards. Counts may be real-valued
// (the sweep's smooth-grid mode evaluates the same formulas on fractional
// compositions). A group whose reward spread falls below the zero-variance
// guard (1e-8) is filtered to all-zero advantages.
ClassAdvantages grpo_class_advantages(double n_r, double n_w, double n_u,
                                      const RewardScheme& scheme);

// Decoupled-channel advantages: Right/Wrong are normalized strictly within
// the deterministic subset, and every uncertain rollout receives
// gamma * anchor_right. Groups whose deterministic subset lacks a class are
// filtered. eps stabilizes the deterministic denominator; eps = 0 is valid
// and gives exact scale invariance.
ClassAdvantages ucpo_class_advantages(double n_r, double n_w, double n_u,
                                      const RewardScheme& scheme, double gamma,
                                      double eps);

// Vector forms over a concrete group (G >= 2 enforced).
AdvantageResult grpo_advantages(const RolloutGroup& group);
AdvantageResult ucpo_advantages(const RolloutGroup& group, double gamma,
                                double eps);

// Sum of Right advantages minus sum of Uncertain advantages in one group.
double net_right_advantage(const AdvantageResult& result,
                           const RolloutGroup& group);

// P_r/P_w threshold at which the uncertain advantage changes sign under
// group-relative normalization of a ternary scheme: below it abstention is
// promoted, above it abstention is suppressed. Derived from
// mean reward = r_uncertain.
double uncertain_advantage_sign_boundary(const RewardScheme& scheme);

}  // namespace ucpo
