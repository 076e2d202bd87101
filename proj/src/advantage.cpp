#include "ucpo/advantage.hpp"

#include <cmath>
#include <stdexcept>

namespace ucpo {

namespace {

constexpr double kZeroVarianceGuard = 1e-8;

void require_group(const RolloutGroup& group) {
  if (group.outcomes.size() < 2)
    throw std::invalid_argument("rollout group needs at least 2 outcomes, got " +
                                std::to_string(group.outcomes.size()));
}

std::vector<double> expand(const RolloutGroup& group, const ClassAdvantages& c) {
  std::vector<double> adv;
  adv.reserve(group.outcomes.size());
  for (Outcome o : group.outcomes) adv.push_back(c.of(o));
  return adv;
}

}  // namespace

std::string_view method_name(Method m) {
  switch (m) {
    case Method::GRPO: return "GRPO";
    case Method::GRPO_UC: return "GRPO-UC";
    default: return "UCPO";
  }
}

Method method_from_name(std::string_view s) {
  if (s == "GRPO") return Method::GRPO;
  if (s == "GRPO-UC" || s == "GRPO_UC") return Method::GRPO_UC;
  if (s == "UCPO") return Method::UCPO;
  throw std::invalid_argument("unknown method '" + std::string(s) +
                              "' (expected GRPO, GRPO-UC, or UCPO)");
}

ClassAdvantages grpo_class_advantages(double n_r, double n_w, double n_u,
                                      const RewardScheme& scheme) {
  const double g = n_r + n_w + n_u;
  const double mean =
      (n_r * scheme.r_right + n_w * scheme.r_wrong + n_u * scheme.r_uncertain) / g;
  const double dr = scheme.r_right - mean;
  const double dw = scheme.r_wrong - mean;
  const double du = scheme.r_uncertain - mean;
  const double var = (n_r * dr * dr + n_w * dw * dw + n_u * du * du) / g;
  const double sd = std::sqrt(var);

  ClassAdvantages out;
  if (sd < kZeroVarianceGuard) {
    out.filtered = true;
    return out;
  }
  out.det_mean = mean;
  out.det_std = sd;
  out.right = dr / sd;
  out.wrong = dw / sd;
  out.uncertain = du / sd;
  return out;
}

ClassAdvantages ucpo_class_advantages(double n_r, double n_w, double n_u,
                                      const RewardScheme& scheme, double gamma,
                                      double eps) {
  if (eps < 0 || !std::isfinite(eps))
    throw std::invalid_argument("eps must be finite and >= 0");
  (void)n_u;

  ClassAdvantages out;
  if (n_r <= 0 || n_w <= 0) {  // deterministic subset lacks a class
    out.filtered = true;
    return out;
  }
  const double n_det = n_r + n_w;
  const double mean = (n_r * scheme.r_right + n_w * scheme.r_wrong) / n_det;
  const double dr = scheme.r_right - mean;
  const double dw = scheme.r_wrong - mean;
  const double sd = std::sqrt((n_r * dr * dr + n_w * dw * dw) / n_det);
  const double denom = sd + eps;
  if (denom <= 0) {  // degenerate scheme: r_right == r_wrong and eps == 0
    out.filtered = true;
    return out;
  }
  out.det_mean = mean;
  out.det_std = sd;
  out.right = dr / denom;
  out.wrong = dw / denom;
  out.uncertain = gamma * out.right;
  return out;
}

AdvantageResult grpo_advantages(const RolloutGroup& group) {
  require_group(group);
  const GroupComposition c = compose(group);
  const ClassAdvantages cls =
      grpo_class_advantages(c.n_r, c.n_w, c.n_u, group.scheme);
  AdvantageResult res;
  res.method = group.scheme.r_uncertain == group.scheme.r_wrong ? Method::GRPO
                                                                : Method::GRPO_UC;
  res.filtered = cls.filtered;
  res.det_mean = cls.det_mean;
  res.det_std = cls.det_std;
  res.advantages = cls.filtered ? std::vector<double>(group.outcomes.size(), 0.0)
                                : expand(group, cls);
  return res;
}

AdvantageResult ucpo_advantages(const RolloutGroup& group, double gamma,
                                double eps) {
  require_group(group);
  const GroupComposition c = compose(group);
  const ClassAdvantages cls =
      ucpo_class_advantages(c.n_r, c.n_w, c.n_u, group.scheme, gamma, eps);
  AdvantageResult res;
  res.method = Method::UCPO;
  res.filtered = cls.filtered;
  res.gamma_used = gamma;
  res.anchor_right = cls.right;
  res.det_mean = cls.det_mean;
  res.det_std = cls.det_std;
  res.advantages = cls.filtered ? std::vector<double>(group.outcomes.size(), 0.0)
                                : expand(group, cls);
  return res;
}

double net_right_advantage(const AdvantageResult& result,
                           const RolloutGroup& group) {
  if (result.advantages.size() != group.outcomes.size())
    throw std::invalid_argument("advantage result does not match group length");
  double right_sum = 0, uncertain_sum = 0;
  for (std::size_t i = 0; i < group.outcomes.size(); ++i) {
    if (group.outcomes[i] == Outcome::Right) right_sum += result.advantages[i];
    else if (group.outcomes[i] == Outcome::Uncertain)
      uncertain_sum += result.advantages[i];
  }
  return right_sum - uncertain_sum;
}

double uncertain_advantage_sign_boundary(const RewardScheme& scheme) {
  if (scheme.r_right == scheme.r_uncertain)
    throw std::invalid_argument(
        "degenerate scheme: r_right == r_uncertain has no sign boundary");
  return (scheme.r_uncertain - scheme.r_wrong) /
         (scheme.r_right - scheme.r_uncertain);
}

}  // namespace ucpo
