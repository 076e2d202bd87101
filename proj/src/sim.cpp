#include "ucpo/sim.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <ostream>

#include <json.hpp>

#include "ucpo/format.hpp"
#include "ucpo/metrics.hpp"

namespace ucpo {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

double uniform01(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

std::mt19937_64 make_stream(std::uint64_t seed, std::uint32_t stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed),
                    static_cast<std::uint32_t>(seed >> 32), stream};
  return std::mt19937_64(seq);
}

struct BucketTally {
  long rollouts = 0;
  long n_r = 0, n_w = 0, n_u = 0;
  long groups = 0, filtered_groups = 0;
  double gamma_sum = 0;
  long gamma_groups = 0;
  long positive_attempts = 0;
};

StepStats stats_from_tally(const BucketTally& t, double logit) {
  StepStats s;
  s.mean_abstain_logit = logit;
  if (t.rollouts == 0) {
    s.uncertainty_ratio = s.accuracy = s.hallucination = kNaN;
    s.paq = s.f1 = s.mean_gamma = s.ntf_fraction = kNaN;
    return s;
  }
  const double n = static_cast<double>(t.rollouts);
  s.uncertainty_ratio = t.n_u / n;
  s.accuracy = t.n_r / n;
  s.hallucination = t.n_w / n;
  const EvalCounts counts{s.accuracy, s.hallucination, s.uncertainty_ratio};
  s.paq = paq(counts);
  s.f1 = f1(counts);
  s.mean_gamma = t.gamma_groups > 0 ? t.gamma_sum / t.gamma_groups : 0.0;
  s.ntf_fraction = static_cast<double>(t.filtered_groups) / t.groups;
  return s;
}

void emit_stats_fields(std::ostream& out, const StepStats& s) {
  out << format_double(s.uncertainty_ratio) << ',' << format_double(s.accuracy)
      << ',' << format_double(s.hallucination) << ',' << format_double(s.paq)
      << ',' << format_double(s.f1) << ',' << format_double(s.mean_gamma) << ','
      << format_double(s.ntf_fraction) << ','
      << format_double(s.mean_abstain_logit);
}

nlohmann::ordered_json stats_json(const StepStats& s) {
  return {{"uncertainty_ratio", s.uncertainty_ratio},
          {"accuracy", s.accuracy},
          {"hallucination", s.hallucination},
          {"paq", s.paq},
          {"f1", s.f1},
          {"mean_gamma", s.mean_gamma},
          {"ntf_fraction", s.ntf_fraction},
          {"mean_abstain_logit", s.mean_abstain_logit}};
}

}  // namespace

SimulationFault::SimulationFault(long step_, std::size_t bucket_)
    : std::runtime_error("non-finite abstain logit at step " +
                         std::to_string(step_) + ", bucket " +
                         std::to_string(bucket_)),
      step(step_),
      bucket(bucket_) {}

void TaskBank::validate(bool capability_enabled) const {
  if (buckets.empty())
    throw std::invalid_argument("task bank needs at least one bucket");
  if (batch_prompts < 1)
    throw std::invalid_argument("batch_prompts must be >= 1");
  double weight_sum = 0;
  for (const Bucket& b : buckets) {
    if (!(b.solve_prob >= 0 && b.solve_prob <= 1))
      throw std::invalid_argument("bucket solve_prob must lie in [0, 1]");
    if (!(b.weight >= 0) || !std::isfinite(b.weight))
      throw std::invalid_argument("bucket weight must be finite and >= 0");
    if (b.cap) {
      if (!(*b.cap >= 0 && *b.cap <= 1))
        throw std::invalid_argument("bucket cap must lie in [0, 1]");
      if (capability_enabled && *b.cap < b.solve_prob)
        throw std::invalid_argument(
            "bucket cap must be >= solve_prob when capability growth is on");
    }
    weight_sum += b.weight;
  }
  if (!(weight_sum > 0))
    throw std::invalid_argument("bucket weights must sum to > 0");
}

void SimConfig::validate() const {
  if (group_size < 2) throw std::invalid_argument("group_size must be >= 2");
  if (steps < 1) throw std::invalid_argument("steps must be >= 1");
  if (!(lr > 0) || !std::isfinite(lr))
    throw std::invalid_argument("lr must be finite and > 0");
  if (!(clip_eps > 0))
    throw std::invalid_argument("clip_eps must be > 0");
  if (!(kl_beta >= 0))
    throw std::invalid_argument("kl_beta must be >= 0");
  if (!(init_abstain_prob > 0 && init_abstain_prob < 1))
    throw std::invalid_argument("init_abstain_prob must lie strictly in (0, 1)");
  if (!(capability_rate >= 0))
    throw std::invalid_argument("capability_rate must be >= 0");
  if (epochs_per_batch < 1)
    throw std::invalid_argument("epochs_per_batch must be >= 1");
  dura.validate();
  if (method == Method::GRPO_UC && !scheme.is_ternary())
    throw std::invalid_argument(
        "GRPO-UC needs a ternary scheme (r_wrong < r_uncertain < r_right)");
  if (method == Method::UCPO && !(scheme.r_wrong < scheme.r_right))
    throw std::invalid_argument("UCPO needs r_wrong < r_right");
}

double logistic(double x) { return 1.0 / (1.0 + std::exp(-x)); }

double action_log_prob(bool abstain, double theta) {
  // log sigma(theta) and log(1 - sigma(theta)), written in the softplus form
  // that stays accurate for large |theta|.
  const double softplus =
      theta > 0 ? theta + std::log1p(std::exp(-theta)) : std::log1p(std::exp(theta));
  return abstain ? theta - softplus : -softplus;
}

double action_log_prob_grad(bool abstain, double theta) {
  const double sigma = logistic(theta);
  return abstain ? 1.0 - sigma : -sigma;
}

RolloutGroup sample_group(double abstain_logit, double p_eff, int group_size,
                          const RewardScheme& scheme, std::mt19937_64& rng) {
  const double abstain_prob = logistic(abstain_logit);
  RolloutGroup group;
  group.scheme = scheme;
  group.outcomes.reserve(group_size);
  for (int i = 0; i < group_size; ++i) {
    // Two draws per rollout regardless of the branch, so the stream layout
    // does not depend on sampled outcomes.
    const double u_abstain = uniform01(rng);
    const double u_solve = uniform01(rng);
    if (u_abstain < abstain_prob) group.outcomes.push_back(Outcome::Uncertain);
    else if (u_solve < p_eff) group.outcomes.push_back(Outcome::Right);
    else group.outcomes.push_back(Outcome::Wrong);
  }
  return group;
}

PolicyState policy_update(const PolicyState& policy,
                          const std::vector<BatchEntry>& batch,
                          const SimConfig& config,
                          const std::vector<double>& theta_ref) {
  if (theta_ref.size() != policy.theta_u.size())
    throw std::invalid_argument("theta_ref size does not match policy");

  long total_rollouts = 0;
  for (const BatchEntry& e : batch) {
    if (e.bucket >= policy.theta_u.size())
      throw std::invalid_argument("batch entry references unknown bucket");
    if (e.advantages.advantages.size() != e.group.outcomes.size())
      throw std::invalid_argument("advantage vector does not match group");
    total_rollouts += static_cast<long>(e.group.outcomes.size());
  }

  PolicyState next = policy;
  next.step = policy.step + 1;
  if (total_rollouts == 0 && config.kl_beta == 0) return next;

  std::vector<double> old_sigma(policy.theta_u.size());
  for (std::size_t b = 0; b < policy.theta_u.size(); ++b)
    old_sigma[b] = logistic(policy.theta_u[b]);

  const double lo = 1.0 - config.clip_eps;
  const double hi = 1.0 + config.clip_eps;
  for (int epoch = 0; epoch < config.epochs_per_batch; ++epoch) {
    std::vector<double> grad(next.theta_u.size(), 0.0);
    for (const BatchEntry& e : batch) {
      const double theta = next.theta_u[e.bucket];
      const double sigma = logistic(theta);
      for (std::size_t i = 0; i < e.group.outcomes.size(); ++i) {
        const double a = e.advantages.advantages[i];
        if (a == 0) continue;
        const bool abstain = e.group.outcomes[i] == Outcome::Uncertain;
        const double ratio = abstain ? sigma / old_sigma[e.bucket]
                                     : (1 - sigma) / (1 - old_sigma[e.bucket]);
        const double clipped = std::clamp(ratio, lo, hi);
        // min(ratio*a, clipped*a): the clipped branch has zero gradient.
        if (ratio * a <= clipped * a)
          grad[e.bucket] += a * ratio * action_log_prob_grad(abstain, theta);
      }
    }
    for (std::size_t b = 0; b < next.theta_u.size(); ++b) {
      double delta = total_rollouts > 0 ? grad[b] / total_rollouts : 0.0;
      if (config.kl_beta > 0) {
        const double sigma = logistic(next.theta_u[b]);
        delta -= config.kl_beta * sigma * (1 - sigma) *
                 (next.theta_u[b] - theta_ref[b]);
      }
      next.theta_u[b] += config.lr * delta;
      if (!std::isfinite(next.theta_u[b])) throw SimulationFault(next.step, b);
    }
  }
  return next;
}

PolicyState capability_update(const PolicyState& policy,
                              const std::vector<BatchEntry>& batch,
                              const SimConfig& config, const TaskBank& bank) {
  PolicyState next = policy;
  if (config.capability_rate == 0) return next;

  std::vector<long> positive(policy.p_eff.size(), 0), seen(policy.p_eff.size(), 0);
  for (const BatchEntry& e : batch) {
    seen[e.bucket] += static_cast<long>(e.group.outcomes.size());
    for (std::size_t i = 0; i < e.group.outcomes.size(); ++i)
      if (e.group.outcomes[i] != Outcome::Uncertain &&
          e.advantages.advantages[i] > 0)
        ++positive[e.bucket];
  }
  for (std::size_t b = 0; b < next.p_eff.size(); ++b) {
    if (seen[b] == 0) continue;
    const double fraction = static_cast<double>(positive[b]) / seen[b];
    const double ceiling = bank.buckets[b].cap.value_or(1.0);
    next.p_eff[b] =
        std::min(ceiling, next.p_eff[b] + config.capability_rate * fraction);
  }
  return next;
}

std::vector<TrajectoryRecord> run(const SimConfig& config, const TaskBank& bank) {
  config.validate();
  bank.validate(config.capability_rate > 0);

  const std::size_t n_buckets = bank.buckets.size();
  const double theta0 =
      std::log(config.init_abstain_prob / (1 - config.init_abstain_prob));

  PolicyState policy;
  policy.theta_u.assign(n_buckets, theta0);
  policy.p_eff.reserve(n_buckets);
  for (const Bucket& b : bank.buckets) policy.p_eff.push_back(b.solve_prob);
  const std::vector<double> theta_ref = policy.theta_u;

  std::mt19937_64 select_rng = make_stream(config.seed, 0);
  std::vector<std::mt19937_64> bucket_rng;
  bucket_rng.reserve(n_buckets);
  for (std::size_t b = 0; b < n_buckets; ++b)
    bucket_rng.push_back(make_stream(config.seed, static_cast<std::uint32_t>(b + 1)));

  std::vector<double> cumulative(n_buckets);
  double acc = 0;
  for (std::size_t b = 0; b < n_buckets; ++b) {
    acc += bank.buckets[b].weight;
    cumulative[b] = acc;
  }
  const double weight_sum = acc;

  const RewardScheme applied_scheme = config.method == Method::GRPO
                                          ? config.scheme.binarized()
                                          : config.scheme;

  std::vector<TrajectoryRecord> trajectory;
  trajectory.reserve(config.steps);

  for (int step = 1; step <= config.steps; ++step) {
    std::vector<BatchEntry> batch;
    batch.reserve(bank.batch_prompts);
    for (int p = 0; p < bank.batch_prompts; ++p) {
      const double pick = uniform01(select_rng) * weight_sum;
      const std::size_t b = static_cast<std::size_t>(
          std::lower_bound(cumulative.begin(), cumulative.end(), pick) -
          cumulative.begin());
      const std::size_t bucket = std::min(b, n_buckets - 1);
      BatchEntry entry;
      entry.bucket = bucket;
      entry.group =
          sample_group(policy.theta_u[bucket], policy.p_eff[bucket],
                       config.group_size, applied_scheme, bucket_rng[bucket]);
      batch.push_back(std::move(entry));
    }

    std::vector<BucketTally> tally(n_buckets);
    BucketTally total;

    if (config.method == Method::UCPO) {
      // The batch prior is the mean sample gain over unfiltered groups; it
      // must be known before any group's final gain, hence two passes.
      std::vector<GroupComposition> comps;
      comps.reserve(batch.size());
      double gain_sum = 0;
      long gain_count = 0;
      for (const BatchEntry& e : batch) {
        comps.push_back(compose(e.group));
        if (!is_non_ternary(comps.back())) {
          gain_sum += gamma(comps.back(), config.dura);
          ++gain_count;
        }
      }
      const double batch_mean = gain_count > 0 ? gain_sum / gain_count : 0.0;
      for (std::size_t i = 0; i < batch.size(); ++i) {
        const GammaRecord rec =
            gamma_pipeline(comps[i], batch_mean, config.dura);
        batch[i].advantages =
            ucpo_advantages(batch[i].group, rec.gamma_final, config.dura.eps);
        if (!batch[i].advantages.filtered) {
          tally[batch[i].bucket].gamma_sum += rec.gamma_final;
          ++tally[batch[i].bucket].gamma_groups;
          total.gamma_sum += rec.gamma_final;
          ++total.gamma_groups;
        }
      }
    } else {
      for (BatchEntry& e : batch) e.advantages = grpo_advantages(e.group);
    }

    for (const BatchEntry& e : batch) {
      const GroupComposition c = compose(e.group);
      BucketTally& t = tally[e.bucket];
      for (BucketTally* dst : {&t, &total}) {
        dst->rollouts += c.total();
        dst->n_r += c.n_r;
        dst->n_w += c.n_w;
        dst->n_u += c.n_u;
        ++dst->groups;
        if (e.advantages.filtered) ++dst->filtered_groups;
      }
    }

    TrajectoryRecord rec;
    rec.step = step;
    double logit_sum = 0;
    for (std::size_t b = 0; b < n_buckets; ++b) {
      rec.per_bucket.push_back(stats_from_tally(tally[b], policy.theta_u[b]));
      logit_sum += policy.theta_u[b];
    }
    rec.aggregate =
        stats_from_tally(total, logit_sum / static_cast<double>(n_buckets));

    policy = policy_update(policy, batch, config, theta_ref);
    if (config.capability_rate > 0)
      policy = capability_update(policy, batch, config, bank);

    trajectory.push_back(std::move(rec));
  }
  return trajectory;
}

void emit_trajectory_csv(const std::vector<TrajectoryRecord>& records,
                         std::ostream& out) {
  const std::size_t buckets = records.empty() ? 0 : records[0].per_bucket.size();
  out << "step,uncertainty_ratio,accuracy,hallucination,paq,f1,mean_gamma,"
         "ntf_fraction,mean_abstain_logit";
  for (std::size_t b = 0; b < buckets; ++b) {
    const std::string p = "b" + std::to_string(b) + "_";
    out << ',' << p << "uncertainty_ratio," << p << "accuracy," << p
        << "hallucination," << p << "paq," << p << "f1," << p << "mean_gamma,"
        << p << "ntf_fraction," << p << "mean_abstain_logit";
  }
  out << '\n';
  for (const TrajectoryRecord& r : records) {
    out << r.step << ',';
    emit_stats_fields(out, r.aggregate);
    for (const StepStats& s : r.per_bucket) {
      out << ',';
      emit_stats_fields(out, s);
    }
    out << '\n';
  }
}

void emit_trajectory_jsonl(const std::vector<TrajectoryRecord>& records,
                           std::ostream& out) {
  for (const TrajectoryRecord& r : records) {
    nlohmann::ordered_json row;
    row["step"] = r.step;
    row["aggregate"] = stats_json(r.aggregate);
    nlohmann::ordered_json buckets = nlohmann::ordered_json::array();
    for (const StepStats& s : r.per_bucket) buckets.push_back(stats_json(s));
    row["buckets"] = buckets;
    out << row.dump() << '\n';
  }
}

}  // namespace ucpo
