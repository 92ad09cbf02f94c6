#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "imcomm/sim_harness.hpp"

namespace imcomm {

/// "fully-actuated-vi-a" or "under-actuated-vi-b"; horizon defaults to 30.
SystemModel preset_model(std::string_view name);
std::vector<std::string> preset_names();

/// Named targets "A", "B", "C" of a preset.
Vector preset_target(std::string_view preset, std::string_view setting);

struct ExperimentConfig {
  SystemModel model;
  std::string preset;  // empty for inline systems
  std::vector<std::string> policies;
  double theta = 0.88;
  double epsilon = 1e-3;
  bool shooting = true;
  int budget = 5000;
  int runs = 50;
  std::uint64_t master_seed = 1;
  TargetSpec target = TargetSpec::random();
  std::string out = "out";

  /// Throws ValidationError with the offending field.
  void validate() const;
};

inline const std::vector<std::string> kPolicyNames = {"excomm", "leader-only", "no-comm",
                                                      "imcomm-heu", "imcomm-opt"};

/// Parses the JSON text of a config document.
ExperimentConfig parse_config(const std::string& text);
ExperimentConfig load_config(const std::string& path);
/// Inline-matrix JSON form; parse_config(emit_config(c)) reproduces c.
std::string emit_config(const ExperimentConfig& config);

/// "v1,v2,..." or "sampled" (or a preset setting letter when preset is set).
TargetSpec parse_target(std::string_view text, std::string_view preset, int d0);

}  // namespace imcomm
