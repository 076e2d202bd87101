#include "ucpo/metrics.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace ucpo {

namespace {
constexpr double kSumTolerance = 1e-9;
}

void EvalCounts::validate() const {
  for (double v : {acc, hal, unc})
    if (!(v >= 0 && v <= 1))
      throw std::invalid_argument("eval fractions must lie in [0, 1]");
  if (std::abs(acc + hal + unc - 1.0) > kSumTolerance)
    throw std::invalid_argument("eval fractions must sum to 1, got " +
                                std::to_string(acc + hal + unc));
}

bool paq_defined(const EvalCounts& counts) { return counts.acc + counts.hal > 0; }

double paq(const EvalCounts& counts) {
  counts.validate();
  if (!paq_defined(counts)) return std::numeric_limits<double>::quiet_NaN();
  return counts.acc / (counts.acc + counts.hal);
}

double f1(const EvalCounts& counts) {
  counts.validate();
  if (counts.acc == 0) return 0.0;
  const double p = paq(counts);  // acc > 0 implies defined and > 0
  return 2 * p * counts.acc / (p + counts.acc);
}

SeriesSummary summarize_series(const std::vector<double>& values,
                               std::size_t window) {
  if (values.empty())
    throw std::invalid_argument("cannot summarize an empty series");
  SeriesSummary s;
  s.final_value = values.back();
  if (window == 0 || window > values.size()) window = values.size();

  double sum = 0;
  for (std::size_t i = values.size() - window; i < values.size(); ++i) {
    if (std::isnan(values[i])) continue;
    sum += values[i];
    ++s.window_used;
  }
  for (double v : values)
    if (std::isnan(v)) ++s.undefined_count;
  s.window_mean = s.window_used > 0
                      ? sum / static_cast<double>(s.window_used)
                      : std::numeric_limits<double>::quiet_NaN();
  return s;
}

}  // namespace ucpo
