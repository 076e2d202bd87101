#pragma once

#include <cstdint>
#include <vector>

#include "ucpo/outcome.hpp"

namespace ucpo {

// Parameters of the dynamic uncertainty gain and its low-sample extensions.
struct DuraParams {
  double w = 1.0;        // suppression weight on the penalty term
  double eps = 1e-6;     // denominator stabilizer
  double lambda = 0.5;   // fusion weight between sample and batch-mean gain
  double alpha = 2.0;    // tanh scale
  bool enable_fusion = false;
  bool enable_tanh = false;

  void validate() const;  // throws std::invalid_argument
  friend bool operator==(const DuraParams&, const DuraParams&) = default;
};

// One enumerated composition with its gain at each pipeline stage.
// multiplicity counts the distinct ordered groups realizing the composition.
struct GammaRecord {
  GroupComposition composition;
  double gamma_sample = 0;
  double gamma_fused = 0;
  double gamma_final = 0;
  std::uint64_t multiplicity = 1;
};

// Dynamic gain over class ratios (p_r + p_w + p_u = 1):
//   gain = (p_w / (p_u + p_w + eps)) * (1 - p_u)  -  w * (p_r / (p_r + p_w + eps)) * p_u
// The first term rewards abstention where wrong answers dominate the
// remaining deterministic mass; the second suppresses abstention on mostly
// solved prompts, increasingly so as abstention itself grows.
double gamma_ratios(double p_r, double p_w, double p_u, const DuraParams& params);
double gamma(const GroupComposition& comp, const DuraParams& params);

// Batch-level smoothing: lambda * sample + (1 - lambda) * batch mean.
double fuse_batch(double gamma_sample, double gamma_batch_mean,
                  const DuraParams& params);

// Saturating stretch: tanh(alpha * fused).
double tanh_map(double gamma_fused, const DuraParams& params);

// sample -> (fusion, if enabled) -> (tanh, if enabled); disabled stages are
// identity. batch_mean is supplied by the caller, which owns batch state.
GammaRecord gamma_pipeline(const GroupComposition& comp, double batch_mean,
                           const DuraParams& params);

// Full pipeline evaluated directly on class ratios (used by the smooth-grid
// sweep, where compositions are fractional).
double gamma_final_ratios(double p_r, double p_w, double p_u, double batch_mean,
                          const DuraParams& params);

// Every composition with n_r, n_w, n_u >= 1 (the groups that survive
// filtering AND carry a nonempty uncertainty channel), with the raw sample
// gain and the multinomial multiplicity. Fusion and tanh are not applied.
// Rows are ordered lexicographically by (n_r, n_w). G < 3 yields no rows.
std::vector<GammaRecord> enumerate_gamma_distribution(int group_size,
                                                      const DuraParams& params);

// Unique abstention ratio at which the gain crosses zero when the wrong
// share of the deterministic mass is held at beta = 1 - solve_prob.
// Bisection to |gain| < 1e-9.
double equilibrium_oracle(double solve_prob, const DuraParams& params);

}  // namespace ucpo
