#include "ucpo/dura.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace ucpo {

namespace {

std::uint64_t checked_mul_div(std::uint64_t acc, std::uint64_t num,
                              std::uint64_t den) {
  const unsigned __int128 wide = static_cast<unsigned __int128>(acc) * num;
  const unsigned __int128 q = wide / den;
  if (q > std::numeric_limits<std::uint64_t>::max())
    throw std::overflow_error("multiplicity exceeds 64-bit range");
  return static_cast<std::uint64_t>(q);
}

// G! / (n_r! n_w! n_u!) as a product of binomials, each computed by the
// numerically exact rising-factorial scheme C(n,k) = prod (n-k+i)/i.
std::uint64_t multinomial(int g, int n_r, int n_w) {
  auto binom = [](int n, int k) {
    std::uint64_t acc = 1;
    for (int i = 1; i <= k; ++i)
      acc = checked_mul_div(acc, static_cast<std::uint64_t>(n - k + i),
                            static_cast<std::uint64_t>(i));
    return acc;
  };
  const std::uint64_t a = binom(g, n_r);
  const std::uint64_t b = binom(g - n_r, n_w);
  const unsigned __int128 wide = static_cast<unsigned __int128>(a) * b;
  if (wide > std::numeric_limits<std::uint64_t>::max())
    throw std::overflow_error("multiplicity exceeds 64-bit range");
  return static_cast<std::uint64_t>(wide);
}

}  // namespace

void DuraParams::validate() const {
  if (!(lambda >= 0 && lambda <= 1))
    throw std::invalid_argument("lambda must lie in [0, 1], got " +
                                std::to_string(lambda));
  if (!(alpha > 0))
    throw std::invalid_argument("alpha must be > 0, got " + std::to_string(alpha));
  if (!(eps >= 0) || !std::isfinite(eps))
    throw std::invalid_argument("eps must be finite and >= 0, got " +
                                std::to_string(eps));
  if (!(w >= 0))
    throw std::invalid_argument("w must be >= 0, got " + std::to_string(w));
}

double gamma_ratios(double p_r, double p_w, double p_u,
                    const DuraParams& params) {
  const double eps = params.eps;
  const double incentive_den = p_u + p_w + eps;
  const double suppress_den = p_r + p_w + eps;
  // With eps = 0 a vanishing numerator and denominator mean the term's mass
  // is absent entirely; 0 is the correct limit along any approach path.
  const double incentive =
      incentive_den > 0 ? (p_w / incentive_den) * (1 - p_u) : 0.0;
  const double suppress =
      suppress_den > 0 ? params.w * (p_r / suppress_den) * p_u : 0.0;
  return incentive - suppress;
}

double gamma(const GroupComposition& comp, const DuraParams& params) {
  return gamma_ratios(comp.p_r(), comp.p_w(), comp.p_u(), params);
}

double fuse_batch(double gamma_sample, double gamma_batch_mean,
                  const DuraParams& params) {
  return params.lambda * gamma_sample + (1 - params.lambda) * gamma_batch_mean;
}

double tanh_map(double gamma_fused, const DuraParams& params) {
  return std::tanh(params.alpha * gamma_fused);
}

GammaRecord gamma_pipeline(const GroupComposition& comp, double batch_mean,
                           const DuraParams& params) {
  GammaRecord rec;
  rec.composition = comp;
  rec.gamma_sample = gamma(comp, params);
  rec.gamma_fused = params.enable_fusion
                        ? fuse_batch(rec.gamma_sample, batch_mean, params)
                        : rec.gamma_sample;
  rec.gamma_final =
      params.enable_tanh ? tanh_map(rec.gamma_fused, params) : rec.gamma_fused;
  return rec;
}

double gamma_final_ratios(double p_r, double p_w, double p_u, double batch_mean,
                          const DuraParams& params) {
  double g = gamma_ratios(p_r, p_w, p_u, params);
  if (params.enable_fusion) g = fuse_batch(g, batch_mean, params);
  if (params.enable_tanh) g = tanh_map(g, params);
  return g;
}

std::vector<GammaRecord> enumerate_gamma_distribution(int group_size,
                                                      const DuraParams& params) {
  params.validate();
  std::vector<GammaRecord> records;
  if (group_size < 3) return records;  // no composition has all classes
  for (int n_r = 1; n_r <= group_size - 2; ++n_r) {
    for (int n_w = 1; n_w <= group_size - 1 - n_r; ++n_w) {
      const int n_u = group_size - n_r - n_w;
      GammaRecord rec;
      rec.composition = {n_r, n_w, n_u};
      rec.gamma_sample = gamma(rec.composition, params);
      rec.gamma_fused = rec.gamma_sample;   // raw distribution: no fusion
      rec.gamma_final = rec.gamma_sample;   // and no tanh
      rec.multiplicity = multinomial(group_size, n_r, n_w);
      records.push_back(rec);
    }
  }
  return records;
}

double equilibrium_oracle(double solve_prob, const DuraParams& params) {
  if (!(solve_prob > 0 && solve_prob < 1))
    throw std::invalid_argument("solve probability must lie strictly in (0, 1)");
  const double beta = 1 - solve_prob;
  const auto gain_at = [&](double p_u) {
    const double det = 1 - p_u;
    return gamma_ratios((1 - beta) * det, beta * det, p_u, params);
  };
  double lo = 0, hi = 1;
  // gain_at(0) = beta/(beta+eps) > 0 and gain_at(1) = -w(1-beta) <= 0; the
  // gain is strictly decreasing along the path, so the root is unique.
  for (int iter = 0; iter < 200; ++iter) {
    const double mid = 0.5 * (lo + hi);
    const double val = gain_at(mid);
    if (std::abs(val) < 1e-9) return mid;
    (val > 0 ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

}  // namespace ucpo
