#pragma once

#include <string>
#include <vector>

#include "imcomm/config.hpp"

namespace imcomm {

/// Builds one of kPolicyNames for the config's system. Optimized policies
/// run their power solver here.
Policy build_named_policy(const std::string& name, const ExperimentConfig& config);

struct PolicyResult {
  AggregateReport report;
  double wall_time_s = 0.0;
};

std::vector<PolicyResult> run_experiment(const ExperimentConfig& config);

/// Shortest round-trip is not used on purpose: always 17 significant digits.
std::string format_double(double v);

std::string emit_aggregate_csv(const std::vector<AggregateReport>& reports);
std::string emit_series_csv(const std::vector<AggregateReport>& reports);
/// Long format: policy,t,metric,value. Throws HorizonMismatch.
std::string emit_plot_series(const std::vector<AggregateReport>& reports);
std::string emit_summary_json(const std::vector<PolicyResult>& results);

/// Writes aggregate.csv, series.csv, plot_series.csv and summary.json.
void write_outputs(const std::vector<PolicyResult>& results, const std::string& dir);

}  // namespace imcomm
