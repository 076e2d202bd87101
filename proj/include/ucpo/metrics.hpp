#pragma once

#include <cstddef>
#include <vector>

namespace ucpo {

// Fractions of questions answered correctly, answered wrongly, and abstained
// on. Must sum to 1.
struct EvalCounts {
  double acc = 0;
  double hal = 0;
  double unc = 0;

  void validate() const;  // throws std::invalid_argument
};

// Precision over answered questions: acc / (acc + hal). When nothing is
// answered the value is undefined and reported as NaN — a distinguished
// marker, deliberately not 0; aggregation skips it and counts it.
double paq(const EvalCounts& counts);
bool paq_defined(const EvalCounts& counts);

// Harmonic mean of precision-over-answered and accuracy-over-all:
// 2*PAQ*acc / (PAQ + acc). Zero when nothing is correct; collapses to PAQ
// (and to acc) when there is no abstention.
double f1(const EvalCounts& counts);

// Trailing-window aggregation of a metric series.
struct SeriesSummary {
  double final_value = 0;
  double window_mean = 0;        // mean over the last `window` defined entries
  std::size_t window_used = 0;   // defined entries that entered the mean
  std::size_t undefined_count = 0;  // NaN entries skipped across the series
};

// Window 0 (or larger than the series) means the whole series. NaN entries
// are skipped and counted; an all-NaN window leaves window_mean NaN.
// Empty input throws std::invalid_argument.
SeriesSummary summarize_series(const std::vector<double>& values,
                               std::size_t window);

}  // namespace ucpo
