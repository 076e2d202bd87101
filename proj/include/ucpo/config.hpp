#pragma once

#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>

#include "ucpo/sim.hpp"
#include "ucpo/sweep.hpp"

namespace ucpo {

class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

struct OutputSpec {
  std::string trajectory_path;
  std::string format = "csv";  // "csv" or "jsonl"
  friend bool operator==(const OutputSpec&, const OutputSpec&) = default;
};

// The experiment document: simulation settings, the task bank, and optional
// sweep/output sections. The schema is strict — unknown keys anywhere are
// rejected, the version tag is checked, and parse -> serialize -> parse is
// the identity.
struct ExperimentConfig {
  static constexpr int kSchemaVersion = 1;

  int schema_version = kSchemaVersion;
  SimConfig sim;
  TaskBank task_bank{{Bucket{0.1, 1.0, std::nullopt}}, 32};
  std::optional<SweepRequest> sweep;
  std::optional<OutputSpec> output;

  // Semantic validation of the assembled document (ranges, method/scheme
  // compatibility); parse_config applies it after structural checks.
  void validate() const;

  friend bool operator==(const ExperimentConfig&, const ExperimentConfig&) = default;
};

// Throws ConfigError naming the offending key path.
ExperimentConfig parse_config(const std::string& text);
ExperimentConfig load_config(const std::string& path);

// Canonical serialization: stable key order, two-space indent, shortest
// round-trip numbers, trailing newline.
std::string serialize_config(const ExperimentConfig& config);

}  // namespace ucpo
