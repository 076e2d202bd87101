#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "ucpo/advantage.hpp"
#include "ucpo/dura.hpp"
#include "ucpo/outcome.hpp"

namespace ucpo {

// One evaluated point of the composition simplex. Counts are doubles so the
// optional smooth grid (fractional compositions) shares the type; the
// canonical integer enumeration keeps them integral.
struct SweepPoint {
  double n_r = 0;
  double n_w = 0;
  double n_u = 0;
  Method method = Method::GRPO;
  double uncertain_advantage = 0;  // advantage of one uncertain rollout; 0 if
                                   // n_u == 0 or the point is filtered
  double net_right_advantage = 0;
  bool filtered = false;
};

struct SweepRequest {
  int group_size = 8;
  RewardScheme scheme{1.0, 0.0, 0.8};
  std::vector<Method> methods{Method::GRPO_UC, Method::UCPO};
  DuraParams dura;      // fusion/tanh off by default: per-sample gain only
  int grid_density = 0; // 0 = integer compositions; N > 0 evaluates the
                        // formulas on the fractional grid (i, j, k) * G / N
  friend bool operator==(const SweepRequest&, const SweepRequest&) = default;
};

// Evaluates every composition of the simplex for every requested method.
// Rows are ordered lexicographically by (n_r, n_w), then by method, and the
// full simplex is covered including points with n_u == 0 or a missing
// deterministic class (reported as filtered where the method filters them).
std::vector<SweepPoint> sweep(const SweepRequest& request);

// Header n_r,n_w,n_u,method,uncertain_advantage,net_right_advantage,filtered
// followed by one row per point; '\n' endings; shortest round-trip floats.
void emit_sweep_csv(const std::vector<SweepPoint>& points, std::ostream& out);
void emit_sweep_csv(const std::vector<SweepPoint>& points,
                    const std::string& path);

// Header n_r,n_w,n_u,multiplicity,gamma followed by the gain enumeration.
void emit_gamma_csv(const std::vector<GammaRecord>& records, std::ostream& out);
void emit_gamma_csv(const std::vector<GammaRecord>& records,
                    const std::string& path);

}  // namespace ucpo
