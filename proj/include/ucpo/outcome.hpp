#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace ucpo {

// Verdict for a single rollout. The whole library works over this ternary
// decision space; there is no free-text judging anywhere.
enum class Outcome : std::uint8_t { Right, Wrong, Uncertain };

char to_char(Outcome o);
Outcome outcome_from_char(char c);

// Per-class scalar rewards. A scheme is "ternary" when the uncertain reward
// sits strictly between wrong and right; binary scoring is expressed by
// r_uncertain == r_wrong (abstention earns the wrong-answer reward).
struct RewardScheme {
  double r_right = 1.0;
  double r_wrong = 0.0;
  double r_uncertain = 0.0;

  bool is_ternary() const {
    return r_wrong < r_uncertain && r_uncertain < r_right;
  }
  // Collapse to binary scoring: uncertain is paid as wrong.
  RewardScheme binarized() const { return {r_right, r_wrong, r_wrong}; }
  double reward(Outcome o) const {
    switch (o) {
      case Outcome::Right: return r_right;
      case Outcome::Wrong: return r_wrong;
      default: return r_uncertain;
    }
  }
  friend bool operator==(const RewardScheme&, const RewardScheme&) = default;
};

// The G rollouts sampled for one prompt plus the scheme scoring them; the
// unit over which every advantage in this library is computed.
struct RolloutGroup {
  std::vector<Outcome> outcomes;
  RewardScheme scheme;
};

// Builds a group from a compact label string such as "RRWUU".
RolloutGroup group_from_labels(std::string_view labels, RewardScheme scheme);

// Class counts and ratios for one group. Counts are exact integers; ratios
// are derived on demand so enumeration code can stay in integer arithmetic.
struct GroupComposition {
  int n_r = 0;
  int n_w = 0;
  int n_u = 0;

  int total() const { return n_r + n_w + n_u; }
  double p_r() const { return static_cast<double>(n_r) / total(); }
  double p_w() const { return static_cast<double>(n_w) / total(); }
  double p_u() const { return static_cast<double>(n_u) / total(); }
  friend bool operator==(const GroupComposition&, const GroupComposition&) = default;
};

GroupComposition compose(const RolloutGroup& group);

// Non-ternary filter: a group is dropped from UCPO updates when its
// deterministic subset lacks one of the two classes. A group with no
// uncertain rollouts but both Right and Wrong present is kept (it simply has
// an empty uncertainty channel).
inline bool is_non_ternary(const GroupComposition& comp) {
  return comp.n_r == 0 || comp.n_w == 0;
}

std::vector<double> rewards_of(const RolloutGroup& group);

}  // namespace ucpo
