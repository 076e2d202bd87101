#include "ucpo/sweep.hpp"

#include <algorithm>
#include <fstream>
#include <ostream>
#include <stdexcept>

#include "ucpo/format.hpp"

namespace ucpo {

namespace {

SweepPoint evaluate_point(double n_r, double n_w, double n_u, Method method,
                          const RewardScheme& scheme, const DuraParams& dura) {
  SweepPoint pt;
  pt.n_r = n_r;
  pt.n_w = n_w;
  pt.n_u = n_u;
  pt.method = method;

  ClassAdvantages cls;
  if (method == Method::UCPO) {
    const double g = n_r + n_w + n_u;
    const double gain =
        gamma_final_ratios(n_r / g, n_w / g, n_u / g, 0.0, dura);
    cls = ucpo_class_advantages(n_r, n_w, n_u, scheme, gain, dura.eps);
  } else {
    const RewardScheme applied =
        method == Method::GRPO ? scheme.binarized() : scheme;
    cls = grpo_class_advantages(n_r, n_w, n_u, applied);
  }
  pt.filtered = cls.filtered;
  pt.uncertain_advantage = (n_u > 0 && !cls.filtered) ? cls.uncertain : 0.0;
  pt.net_right_advantage = n_r * cls.right - n_u * cls.uncertain;
  return pt;
}

void validate(const SweepRequest& request) {
  if (request.group_size < 2)
    throw std::invalid_argument("sweep group size must be >= 2");
  if (request.grid_density < 0)
    throw std::invalid_argument("grid density must be >= 0");
  if (request.methods.empty())
    throw std::invalid_argument("sweep needs at least one method");
  request.dura.validate();
  for (Method m : request.methods) {
    if (m == Method::GRPO_UC && !request.scheme.is_ternary())
      throw std::invalid_argument(
          "GRPO-UC needs a ternary scheme (r_wrong < r_uncertain < r_right)");
    if (m == Method::UCPO && !(request.scheme.r_wrong < request.scheme.r_right))
      throw std::invalid_argument("UCPO needs r_wrong < r_right");
  }
}

}  // namespace

std::vector<SweepPoint> sweep(const SweepRequest& request) {
  validate(request);

  std::vector<Method> methods = request.methods;
  std::sort(methods.begin(), methods.end());
  methods.erase(std::unique(methods.begin(), methods.end()), methods.end());

  const int g = request.group_size;
  const int density = request.grid_density > 0 ? request.grid_density : g;
  const double scale = static_cast<double>(g) / density;

  std::vector<SweepPoint> points;
  points.reserve(static_cast<std::size_t>(density + 1) * (density + 2) / 2 *
                 methods.size());
  for (int i = 0; i <= density; ++i) {
    for (int j = 0; j <= density - i; ++j) {
      const int k = density - i - j;
      for (Method m : methods)
        points.push_back(evaluate_point(i * scale, j * scale, k * scale, m,
                                        request.scheme, request.dura));
    }
  }
  return points;
}

void emit_sweep_csv(const std::vector<SweepPoint>& points, std::ostream& out) {
  out << "n_r,n_w,n_u,method,uncertain_advantage,net_right_advantage,filtered\n";
  for (const SweepPoint& p : points) {
    out << format_count(p.n_r) << ',' << format_count(p.n_w) << ','
        << format_count(p.n_u) << ',' << method_name(p.method) << ','
        << format_double(p.uncertain_advantage) << ','
        << format_double(p.net_right_advantage) << ','
        << (p.filtered ? "true" : "false") << '\n';
  }
}

void emit_sweep_csv(const std::vector<SweepPoint>& points,
                    const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
  emit_sweep_csv(points, out);
  if (!out) throw std::runtime_error("write failed for '" + path + "'");
}

void emit_gamma_csv(const std::vector<GammaRecord>& records, std::ostream& out) {
  out << "n_r,n_w,n_u,multiplicity,gamma\n";
  for (const GammaRecord& r : records) {
    out << r.composition.n_r << ',' << r.composition.n_w << ','
        << r.composition.n_u << ',' << r.multiplicity << ','
        << format_double(r.gamma_sample) << '\n';
  }
}

void emit_gamma_csv(const std::vector<GammaRecord>& records,
                    const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
  emit_gamma_csv(records, out);
  if (!out) throw std::runtime_error("write failed for '" + path + "'");
}

}  // namespace ucpo
