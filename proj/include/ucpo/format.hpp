#pragma once

#include <string>

namespace ucpo {

// Shortest decimal string that parses back to exactly the same double
// ("1", "0.1", "-0.354166..", "nan", "inf"). All CSV emitters use this so
// output is byte-deterministic and loses no precision.
std::string format_double(double v);

// Formats an integer-valued count column: integral doubles print without a
// trailing ".0" ("3"), fractional ones fall back to format_double ("2.5",
// from the smooth-grid sweep).
std::string format_count(double v);

}  // namespace ucpo
