#include "ucpo/format.hpp"

#include <charconv>
#include <cmath>
#include <cstdint>

namespace ucpo {

std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

std::string format_count(double v) {
  if (std::isfinite(v) && v == std::floor(v) && std::abs(v) < 1e15)
    return std::to_string(static_cast<std::int64_t>(v));
  return format_double(v);
}

}  // namespace ucpo
