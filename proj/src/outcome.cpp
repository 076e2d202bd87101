#include "ucpo/outcome.hpp"

namespace ucpo {

char to_char(Outcome o) {
  switch (o) {
    case Outcome::Right: return 'R';
    case Outcome::Wrong: return 'W';
    default: return 'U';
  }
}

Outcome outcome_from_char(char c) {
  switch (c) {
    case 'R': return Outcome::Right;
    case 'W': return Outcome::Wrong;
    case 'U': return Outcome::Uncertain;
    default:
      throw std::invalid_argument(std::string("unknown outcome label '") + c +
                                  "' (expected R, W, or U)");
  }
}

RolloutGroup group_from_labels(std::string_view labels, RewardScheme scheme) {
  RolloutGroup g;
  g.scheme = scheme;
  g.outcomes.reserve(labels.size());
  for (char c : labels) g.outcomes.push_back(outcome_from_char(c));
  return g;
}

GroupComposition compose(const RolloutGroup& group) {
  GroupComposition c;
  for (Outcome o : group.outcomes) {
    switch (o) {
      case Outcome::Right: ++c.n_r; break;
      case Outcome::Wrong: ++c.n_w; break;
      default: ++c.n_u; break;
    }
  }
  return c;
}

std::vector<double> rewards_of(const RolloutGroup& group) {
  std::vector<double> r;
  r.reserve(group.outcomes.size());
  for (Outcome o : group.outcomes) r.push_back(group.scheme.reward(o));
  return r;
}

}  // namespace ucpo
