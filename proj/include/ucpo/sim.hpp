#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "ucpo/advantage.hpp"
#include "ucpo/dura.hpp"
#include "ucpo/outcome.hpp"

namespace ucpo {

// One task-difficulty bucket: an abstract pool of prompts the policy solves
// with probability solve_prob when it attempts them.
struct Bucket {
  double solve_prob = 0.1;
  double weight = 1.0;
  std::optional<double> cap;  // ceiling for capability growth
  friend bool operator==(const Bucket&, const Bucket&) = default;
};

struct TaskBank {
  std::vector<Bucket> buckets;
  int batch_prompts = 32;  // B: prompts drawn per step

  void validate(bool capability_enabled) const;
  friend bool operator==(const TaskBank&, const TaskBank&) = default;
};

struct SimConfig {
  Method method = Method::UCPO;
  RewardScheme scheme{1.0, 0.0, 0.8};
  int group_size = 8;  // G: rollouts per prompt
  DuraParams dura;
  double lr = 0.5;
  double clip_eps = 0.2;     // surrogate clipping half-width
  double kl_beta = 0.0;      // weight of the KL pull toward the initial policy
  int steps = 1000;
  std::uint64_t seed = 1;
  double init_abstain_prob = 0.05;
  double capability_rate = 0.0;  // 0 disables capability growth
  int epochs_per_batch = 1;      // >1 re-uses a batch; ratios then deviate from 1

  void validate() const;
  friend bool operator==(const SimConfig&, const SimConfig&) = default;
};

// Per-bucket abstain logit and effective solve probability.
struct PolicyState {
  std::vector<double> theta_u;
  std::vector<double> p_eff;
  long step = 0;
};

// A sampled group tagged with its bucket and the advantages assigned to it.
struct BatchEntry {
  std::size_t bucket = 0;
  RolloutGroup group;
  AdvantageResult advantages;
};

// Raised when an update produces a non-finite logit.
class SimulationFault : public std::runtime_error {
 public:
  SimulationFault(long step, std::size_t bucket);
  long step;
  std::size_t bucket;
};

// Batch-derived metrics for one step. Aggregate rows always have data;
// per-bucket rows of buckets that drew no prompts this step hold NaN in the
// batch-derived fields (the logit is always present).
struct StepStats {
  double uncertainty_ratio = 0;
  double accuracy = 0;
  double hallucination = 0;
  double paq = 0;
  double f1 = 0;
  double mean_gamma = 0;     // mean final gain over unfiltered groups (UCPO; 0 otherwise)
  double ntf_fraction = 0;   // fraction of groups filtered by the method
  double mean_abstain_logit = 0;
};

struct TrajectoryRecord {
  int step = 0;  // 1-based
  StepStats aggregate;
  std::vector<StepStats> per_bucket;
};

double logistic(double x);
// log pi(action) and its derivative in the abstain logit; action is either
// the abstain arm or the attempt arm of the per-bucket Bernoulli policy.
double action_log_prob(bool abstain, double theta);
double action_log_prob_grad(bool abstain, double theta);

// Draws one group: each rollout abstains with probability
// logistic(abstain_logit), otherwise lands Right with probability p_eff.
// Consumes exactly 2*G uniforms from rng.
RolloutGroup sample_group(double abstain_logit, double p_eff, int group_size,
                          const RewardScheme& scheme, std::mt19937_64& rng);

// One surrogate ascent pass over the batch (epochs_per_batch epochs; the
// incoming policy is the "old" policy for ratio purposes). The update is the
// batch-mean rollout contribution scaled by lr, plus the optional KL pull
// toward theta_ref. Throws SimulationFault on non-finite logits.
PolicyState policy_update(const PolicyState& policy,
                          const std::vector<BatchEntry>& batch,
                          const SimConfig& config,
                          const std::vector<double>& theta_ref);

// Nudges p_eff toward each bucket's cap in proportion to the fraction of
// positive-advantage attempts the bucket saw in this batch.
PolicyState capability_update(const PolicyState& policy,
                              const std::vector<BatchEntry>& batch,
                              const SimConfig& config, const TaskBank& bank);

// Full simulation: per step, draw B prompts by bucket weight, sample groups,
// assign advantages by the configured method (UCPO fuses against the current
// batch's mean gain when fusion is enabled), update the policy, and record
// batch statistics as seen by the pre-update policy. Deterministic for a
// given seed within one build.
std::vector<TrajectoryRecord> run(const SimConfig& config, const TaskBank& bank);

// CSV: step, aggregate fields, then b<i>_ fields per bucket; '\n' endings,
// shortest round-trip floats, NaN rendered as "nan".
void emit_trajectory_csv(const std::vector<TrajectoryRecord>& records,
                         std::ostream& out);
// JSONL: one object per step; NaN becomes null.
void emit_trajectory_jsonl(const std::vector<TrajectoryRecord>& records,
                           std::ostream& out);

}  // namespace ucpo
