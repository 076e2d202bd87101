#include <doctest.h>

#include <cmath>
#include <random>
#include <sstream>
#include <string>

#include <json.hpp>

#include "ucpo/sim.hpp"

using namespace ucpo;

namespace {

const RewardScheme kTernary{1.0, 0.0, 0.8};

PolicyState single_bucket_policy(double theta, double p_eff) {
  PolicyState p;
  p.theta_u = {theta};
  p.p_eff = {p_eff};
  return p;
}

BatchEntry entry_with(const std::string& labels,
                      const std::vector<double>& advantages) {
  BatchEntry e;
  e.bucket = 0;
  e.group = group_from_labels(labels, kTernary);
  e.advantages.advantages = advantages;
  return e;
}

SimConfig bare_config() {
  SimConfig cfg;
  cfg.kl_beta = 0.0;
  cfg.epochs_per_batch = 1;
  return cfg;
}

}  // namespace

TEST_CASE("action log-prob gradient matches a finite difference") {
  const double h = 1e-6;
  for (int i = 0; i <= 24; ++i) {
    const double theta = -6.0 + 12.0 * i / 24.0;
    for (bool abstain : {true, false}) {
      const double fd = (action_log_prob(abstain, theta + h) -
                         action_log_prob(abstain, theta - h)) /
                        (2 * h);
      CHECK(std::abs(action_log_prob_grad(abstain, theta) - fd) <= 1e-5);
    }
  }
}

TEST_CASE("action log-probs are a normalized distribution") {
  for (double theta : {-30.0, -2.0, 0.0, 1.5, 30.0}) {
    const double total = std::exp(action_log_prob(true, theta)) +
                         std::exp(action_log_prob(false, theta));
    CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(std::exp(action_log_prob(true, theta)) ==
          doctest::Approx(logistic(theta)).epsilon(1e-12));
  }
}

TEST_CASE("group sampling respects degenerate probabilities") {
  std::mt19937_64 rng(7);
  const RolloutGroup never_abstain = sample_group(-50.0, 1.0, 64, kTernary, rng);
  for (Outcome o : never_abstain.outcomes) CHECK(o == Outcome::Right);

  const RolloutGroup never_solve = sample_group(-50.0, 0.0, 64, kTernary, rng);
  for (Outcome o : never_solve.outcomes) CHECK(o == Outcome::Wrong);

  const RolloutGroup always_abstain = sample_group(50.0, 0.5, 64, kTernary, rng);
  for (Outcome o : always_abstain.outcomes) CHECK(o == Outcome::Uncertain);
}

TEST_CASE("group sampling consumes exactly two draws per rollout") {
  std::mt19937_64 a(99), b(99);
  sample_group(0.3, 0.5, 5, kTernary, a);
  for (int i = 0; i < 10; ++i) b();
  CHECK(a() == b());
}

TEST_CASE("sampled frequencies concentrate on the configured rates") {
  std::mt19937_64 rng(17);
  const double abstain_prob = 0.3;
  const double logit = std::log(abstain_prob / (1 - abstain_prob));
  const RolloutGroup group = sample_group(logit, 0.4, 10000, kTernary, rng);
  const GroupComposition c = compose(group);
  CHECK(std::abs(c.p_u() - 0.3) <= 0.02);
  CHECK(std::abs(c.p_r() - 0.7 * 0.4) <= 0.02);
  CHECK(std::abs(c.p_w() - 0.7 * 0.6) <= 0.02);
}

TEST_CASE("a single positive abstain rollout raises the abstain logit") {
  SimConfig cfg = bare_config();
  cfg.lr = 0.1;
  const PolicyState next = policy_update(
      single_bucket_policy(0.0, 0.1), {entry_with("U", {1.0})}, cfg, {0.0});
  // grad = a * ratio * (1 - sigma) = 1 * 1 * 0.5; delta = 0.5 / 1 rollout.
  CHECK(next.theta_u[0] == doctest::Approx(0.05).epsilon(1e-12));
  CHECK(next.step == 1);
}

TEST_CASE("a single positive attempt rollout lowers the abstain logit") {
  SimConfig cfg = bare_config();
  cfg.lr = 0.1;
  const PolicyState next = policy_update(
      single_bucket_policy(0.0, 0.1), {entry_with("R", {1.0})}, cfg, {0.0});
  CHECK(next.theta_u[0] == doctest::Approx(-0.05).epsilon(1e-12));
}

TEST_CASE("zero advantages leave the policy untouched") {
  SimConfig cfg = bare_config();
  const PolicyState next =
      policy_update(single_bucket_policy(0.7, 0.1),
                    {entry_with("RWUU", {0, 0, 0, 0})}, cfg, {0.0});
  CHECK(next.theta_u[0] == 0.7);
  CHECK(next.step == 1);
}

TEST_CASE("an empty batch without a KL term is a no-op step") {
  const PolicyState next =
      policy_update(single_bucket_policy(1.3, 0.1), {}, bare_config(), {0.0});
  CHECK(next.theta_u[0] == 1.3);
  CHECK(next.step == 1);
}

TEST_CASE("the KL term pulls the logit toward the reference") {
  SimConfig cfg = bare_config();
  cfg.kl_beta = 1.0;
  cfg.lr = 0.5;
  const PolicyState next =
      policy_update(single_bucket_policy(2.0, 0.1), {}, cfg, {0.0});
  const double sigma = logistic(2.0);
  const double expected = 2.0 + 0.5 * (-sigma * (1 - sigma) * 2.0);
  CHECK(next.theta_u[0] == doctest::Approx(expected).epsilon(1e-14));
  CHECK(next.theta_u[0] < 2.0);
  CHECK(next.theta_u[0] > 0.0);
}

TEST_CASE("the first epoch is clip-inert") {
  SimConfig wide = bare_config();
  wide.lr = 0.5;
  wide.clip_eps = 1e9;
  SimConfig narrow = wide;
  narrow.clip_eps = 1e-6;
  const auto batch = {entry_with("UURW", {0.5, 0.5, 1.0, -1.0})};
  const PolicyState a =
      policy_update(single_bucket_policy(0.2, 0.1), batch, wide, {0.2});
  const PolicyState b =
      policy_update(single_bucket_policy(0.2, 0.1), batch, narrow, {0.2});
  CHECK(a.theta_u[0] == b.theta_u[0]);
}

TEST_CASE("later epochs clip runaway ratios") {
  // One all-abstain group of four rollouts, advantage +1 each, lr = 8:
  // epoch one moves theta from 0 to 4, epoch two has ratio ~1.96.
  SimConfig cfg = bare_config();
  cfg.lr = 8.0;
  cfg.epochs_per_batch = 2;
  cfg.clip_eps = 0.2;
  const auto batch = {entry_with("UUUU", {1, 1, 1, 1})};

  const PolicyState clipped =
      policy_update(single_bucket_policy(0.0, 0.1), batch, cfg, {0.0});
  // ratio * a exceeds the clipped surrogate, so epoch two contributes nothing.
  CHECK(clipped.theta_u[0] == doctest::Approx(4.0).epsilon(1e-12));

  cfg.clip_eps = 5.0;
  const PolicyState free =
      policy_update(single_bucket_policy(0.0, 0.1), batch, cfg, {0.0});
  const double sigma1 = logistic(4.0);
  const double ratio = sigma1 / 0.5;
  const double expected = 4.0 + 8.0 * (ratio * (1.0 - sigma1));
  CHECK(free.theta_u[0] == doctest::Approx(expected).epsilon(1e-12));
  CHECK(free.theta_u[0] > 4.0);
}

TEST_CASE("update input validation") {
  SimConfig cfg = bare_config();
  CHECK_THROWS_AS(policy_update(single_bucket_policy(0, 0.1),
                                {entry_with("U", {1.0})}, cfg, {0.0, 0.0}),
                  std::invalid_argument);
  BatchEntry bad_bucket = entry_with("U", {1.0});
  bad_bucket.bucket = 3;
  CHECK_THROWS_AS(policy_update(single_bucket_policy(0, 0.1), {bad_bucket}, cfg,
                                {0.0}),
                  std::invalid_argument);
  CHECK_THROWS_AS(policy_update(single_bucket_policy(0, 0.1),
                                {entry_with("UU", {1.0})}, cfg, {0.0}),
                  std::invalid_argument);
}

TEST_CASE("a non-finite logit raises a simulation fault") {
  SimConfig cfg = bare_config();
  cfg.lr = 1e308;
  PolicyState policy = single_bucket_policy(0.0, 0.1);
  policy.step = 41;
  const auto batch = {entry_with("U", {1e300})};
  CHECK_THROWS_WITH_AS(policy_update(policy, batch, cfg, {0.0}),
                       "non-finite abstain logit at step 42, bucket 0",
                       SimulationFault);
}

TEST_CASE("capability growth follows positive-advantage attempts") {
  SimConfig cfg = bare_config();
  cfg.capability_rate = 0.05;
  TaskBank bank;
  bank.buckets = {Bucket{0.1, 1.0, std::nullopt}};
  // One right answer with positive advantage out of four rollouts; the
  // positive abstention does not count as an attempt.
  const auto batch = {entry_with("RWUR", {1.0, -1.0, 1.0, 0.0})};
  const PolicyState next =
      capability_update(single_bucket_policy(0.0, 0.1), batch, cfg, bank);
  CHECK(next.p_eff[0] == doctest::Approx(0.1 + 0.05 * 0.25).epsilon(1e-12));

  bank.buckets[0].cap = 0.105;
  const PolicyState capped =
      capability_update(single_bucket_policy(0.0, 0.1), batch, cfg, bank);
  CHECK(capped.p_eff[0] == doctest::Approx(0.105).epsilon(1e-12));

  cfg.capability_rate = 0.0;
  const PolicyState off =
      capability_update(single_bucket_policy(0.0, 0.1), batch, cfg, bank);
  CHECK(off.p_eff[0] == 0.1);
}

TEST_CASE("buckets unseen in a batch keep their capability") {
  SimConfig cfg = bare_config();
  cfg.capability_rate = 0.1;
  TaskBank bank;
  bank.buckets = {Bucket{0.1, 1.0, std::nullopt}, Bucket{0.5, 1.0, std::nullopt}};
  PolicyState policy;
  policy.theta_u = {0.0, 0.0};
  policy.p_eff = {0.1, 0.5};
  const auto batch = {entry_with("RR", {1.0, 1.0})};  // bucket 0 only
  const PolicyState next = capability_update(policy, batch, cfg, bank);
  CHECK(next.p_eff[0] > 0.1);
  CHECK(next.p_eff[1] == 0.5);
}

TEST_CASE("trajectories record the pre-update policy and conserve mass") {
  SimConfig cfg = bare_config();
  cfg.method = Method::UCPO;
  cfg.steps = 40;
  cfg.seed = 3;
  TaskBank bank;
  bank.buckets = {Bucket{0.1, 1.0, std::nullopt}};
  bank.batch_prompts = 8;
  const auto traj = run(cfg, bank);
  REQUIRE(traj.size() == 40);
  const double theta0 = std::log(0.05 / 0.95);
  CHECK(traj[0].step == 1);
  CHECK(traj[0].aggregate.mean_abstain_logit == doctest::Approx(theta0));
  for (std::size_t i = 0; i < traj.size(); ++i) {
    CHECK(traj[i].step == static_cast<int>(i) + 1);
    const StepStats& s = traj[i].aggregate;
    CHECK(std::abs(s.uncertainty_ratio + s.accuracy + s.hallucination - 1.0) <=
          1e-9);
    CHECK(std::isfinite(s.mean_abstain_logit));
    CHECK(s.ntf_fraction >= 0.0);
    CHECK(s.ntf_fraction <= 1.0);
  }
}

TEST_CASE("simulation output is deterministic for a fixed seed") {
  SimConfig cfg = bare_config();
  cfg.method = Method::UCPO;
  cfg.steps = 25;
  cfg.seed = 11;
  TaskBank bank;
  bank.buckets = {Bucket{0.1, 1.0, std::nullopt}};
  bank.batch_prompts = 8;

  std::ostringstream a, b;
  emit_trajectory_csv(run(cfg, bank), a);
  emit_trajectory_csv(run(cfg, bank), b);
  CHECK(a.str() == b.str());

  cfg.seed = 12;
  std::ostringstream c;
  emit_trajectory_csv(run(cfg, bank), c);
  CHECK(a.str() != c.str());
}

TEST_CASE("a perfectly capable bucket filters every group and freezes the policy") {
  SimConfig cfg = bare_config();
  cfg.method = Method::UCPO;
  cfg.steps = 30;
  cfg.seed = 5;
  TaskBank bank;
  bank.buckets = {Bucket{1.0, 1.0, std::nullopt}};  // no wrong answers possible
  bank.batch_prompts = 8;
  const auto traj = run(cfg, bank);
  const double theta0 = std::log(0.05 / 0.95);
  for (const TrajectoryRecord& r : traj) {
    CHECK(r.aggregate.ntf_fraction == 1.0);
    CHECK(r.aggregate.mean_abstain_logit == doctest::Approx(theta0));
    CHECK(r.aggregate.mean_gamma == 0.0);
  }
}

TEST_CASE("the baseline method reports no gain and filters only flat groups") {
  SimConfig cfg = bare_config();
  cfg.method = Method::GRPO;
  cfg.steps = 10;
  cfg.seed = 9;
  TaskBank bank;
  bank.buckets = {Bucket{0.5, 1.0, std::nullopt}};
  bank.batch_prompts = 16;
  for (const TrajectoryRecord& r : run(cfg, bank)) {
    CHECK(r.aggregate.mean_gamma == 0.0);
    CHECK(r.aggregate.ntf_fraction < 1.0);
  }
}

TEST_CASE("buckets that draw no prompts report undefined batch statistics") {
  SimConfig cfg = bare_config();
  cfg.method = Method::UCPO;
  cfg.steps = 3;
  cfg.seed = 2;
  TaskBank bank;
  bank.buckets = {Bucket{0.1, 1.0, std::nullopt}, Bucket{0.5, 0.0, std::nullopt}};
  bank.batch_prompts = 4;
  const auto traj = run(cfg, bank);
  for (const TrajectoryRecord& r : traj) {
    REQUIRE(r.per_bucket.size() == 2);
    CHECK(std::isnan(r.per_bucket[1].accuracy));
    CHECK(std::isnan(r.per_bucket[1].ntf_fraction));
    CHECK(std::isfinite(r.per_bucket[1].mean_abstain_logit));
    CHECK_FALSE(std::isnan(r.per_bucket[0].accuracy));
  }

  std::ostringstream csv;
  emit_trajectory_csv(traj, csv);
  CHECK(csv.str().find("nan") != std::string::npos);

  std::ostringstream jsonl;
  emit_trajectory_jsonl(traj, jsonl);
  std::istringstream lines(jsonl.str());
  std::string line;
  int rows = 0;
  while (std::getline(lines, line)) {
    const auto row = nlohmann::json::parse(line);
    CHECK(row["step"] == ++rows);
    REQUIRE(row["buckets"].size() == 2);
    CHECK(row["buckets"][1]["accuracy"].is_null());
    CHECK(row["buckets"][1]["mean_abstain_logit"].is_number());
    CHECK(row["aggregate"]["uncertainty_ratio"].is_number());
  }
  CHECK(rows == 3);
}

TEST_CASE("the trajectory header lists aggregate then per-bucket columns") {
  SimConfig cfg = bare_config();
  cfg.steps = 1;
  TaskBank bank;
  bank.buckets = {Bucket{0.1, 1.0, std::nullopt}};
  bank.batch_prompts = 2;
  std::ostringstream out;
  emit_trajectory_csv(run(cfg, bank), out);
  const std::string header = out.str().substr(0, out.str().find('\n'));
  CHECK(header ==
        "step,uncertainty_ratio,accuracy,hallucination,paq,f1,mean_gamma,"
        "ntf_fraction,mean_abstain_logit,b0_uncertainty_ratio,b0_accuracy,"
        "b0_hallucination,b0_paq,b0_f1,b0_mean_gamma,b0_ntf_fraction,"
        "b0_mean_abstain_logit");
}

TEST_CASE("configuration validation rejects inconsistent settings") {
  SimConfig cfg = bare_config();
  cfg.group_size = 1;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);

  cfg = bare_config();
  cfg.method = Method::GRPO_UC;
  cfg.scheme = RewardScheme{1.0, 0.0, 0.0};
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);

  cfg = bare_config();
  cfg.init_abstain_prob = 0.0;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);

  cfg = bare_config();
  cfg.epochs_per_batch = 0;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);

  TaskBank bank;
  bank.buckets = {};
  CHECK_THROWS_AS(bank.validate(false), std::invalid_argument);
  bank.buckets = {Bucket{0.5, 1.0, 0.2}};
  CHECK_NOTHROW(bank.validate(false));
  CHECK_THROWS_AS(bank.validate(true), std::invalid_argument);
  bank.buckets = {Bucket{0.5, -1.0, std::nullopt}};
  CHECK_THROWS_AS(bank.validate(false), std::invalid_argument);
}
