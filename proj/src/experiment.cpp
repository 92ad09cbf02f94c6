#include "imcomm/experiment.hpp"

#include <chrono>
#include <charconv>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "json.hpp"

namespace imcomm {

Policy build_named_policy(const std::string& name, const ExperimentConfig& c) {
  const SystemModel& m = c.model;
  if (name == "excomm") return make_baseline(PolicyTag::ExComm, m, name);
  if (name == "leader-only") return make_baseline(PolicyTag::LeaderOnly, m, name);
  if (name == "no-comm") return make_baseline(PolicyTag::NoComm, m, name);
  const ChannelSetup setup = make_setup(m.B1, m.W);
  if (name == "imcomm-heu") {
    return make_imcomm(m, heuristic_schedule(c.theta, m.n, setup.lambda_dim()), name);
  }
  if (name == "imcomm-opt") {
    const GainSchedule gains = backward_riccati(m);
    PowerSchedule power;
    if (setup.mode == ActuationMode::FullyActuated) {
      ScalarSolveOptions opt;
      opt.epsilon = c.epsilon;
      opt.shooting = c.shooting;
      power = scalar_backward_solve(scalar_constants(gains, setup, m), costate_Z(gains, m),
                                    setup, opt);
    } else {
      power = ua_optimize(heuristic_schedule(c.theta, m.n, setup.lambda_dim()), gains, setup, m,
                          c.budget);
    }
    return make_imcomm(m, std::move(power), name);
  }
  throw Error(ErrorCode::ValidationError, "policies: unknown policy '" + name + "'");
}

std::vector<PolicyResult> run_experiment(const ExperimentConfig& c) {
  c.validate();
  std::vector<PolicyResult> out;
  for (const std::string& name : c.policies) {
    const auto start = std::chrono::steady_clock::now();
    const Policy p = build_named_policy(name, c);
    PolicyResult r;
    r.report = monte_carlo(p, c.target, c.runs, c.master_seed);
    r.wall_time_s =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    out.push_back(std::move(r));
  }
  return out;
}

std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::general, 17);
  return std::string(buf, res.ptr);
}

std::string emit_aggregate_csv(const std::vector<AggregateReport>& reports) {
  std::ostringstream os;
  os << "policy,runs,mean_total_cost,std_total_cost,std_error,mean_final_z_norm,"
        "achieved_terminal_ratio,optimizer_evaluations\n";
  for (const AggregateReport& r : reports) {
    os << r.policy << ',' << r.runs << ',' << format_double(r.mean_total_cost) << ','
       << format_double(r.std_total_cost) << ',' << format_double(r.std_error()) << ','
       << format_double(r.mean_final_z_norm()) << ',' << format_double(r.achieved_terminal_ratio)
       << ',' << r.optimizer_evaluations << '\n';
  }
  return os.str();
}

std::string emit_series_csv(const std::vector<AggregateReport>& reports) {
  std::ostringstream os;
  os << "policy,t,mean_z_norm,sigma_trace,mean_stage_cost\n";
  for (const AggregateReport& r : reports) {
    for (int t = 0; t <= r.horizon(); ++t) {
      os << r.policy << ',' << t << ',' << format_double(r.mean_z_norm[t]) << ','
         << format_double(r.mean_sigma_trace[t]) << ',' << format_double(r.mean_stage_cost[t])
         << '\n';
    }
  }
  return os.str();
}

std::string emit_plot_series(const std::vector<AggregateReport>& reports) {
  for (const AggregateReport& r : reports) {
    if (r.horizon() != reports.front().horizon()) {
      throw Error(ErrorCode::HorizonMismatch, "reports do not share a horizon");
    }
  }
  std::ostringstream os;
  os << "policy,t,metric,value\n";
  for (const AggregateReport& r : reports) {
    const std::pair<const char*, const std::vector<double>*> metrics[] = {
        {"z_norm", &r.mean_z_norm},
        {"sigma_trace", &r.mean_sigma_trace},
        {"stage_cost", &r.mean_stage_cost}};
    for (const auto& [metric, values] : metrics) {
      for (int t = 0; t <= r.horizon(); ++t) {
        os << r.policy << ',' << t << ',' << metric << ',' << format_double((*values)[t]) << '\n';
      }
    }
  }
  return os.str();
}

std::string emit_summary_json(const std::vector<PolicyResult>& results) {
  // numbers go through format_double so the file is stable byte for byte
  std::ostringstream os;
  os << "[\n";
  for (std::size_t i = 0; i < results.size(); ++i) {
    const AggregateReport& r = results[i].report;
    os << "  {\n"
       << "    \"policy\": " << nlohmann::json(r.policy).dump() << ",\n"
       << "    \"runs\": " << r.runs << ",\n"
       << "    \"mean_total_cost\": " << format_double(r.mean_total_cost) << ",\n"
       << "    \"std_total_cost\": " << format_double(r.std_total_cost) << ",\n"
       << "    \"achieved_terminal_ratio\": " << format_double(r.achieved_terminal_ratio) << ",\n"
       << "    \"optimizer_evaluations\": " << r.optimizer_evaluations << ",\n"
       << "    \"wall_time_s\": " << format_double(results[i].wall_time_s) << "\n"
       << "  }" << (i + 1 < results.size() ? "," : "") << "\n";
  }
  os << "]\n";
  return os.str();
}

namespace {

void write_file(const std::filesystem::path& p, const std::string& text) {
  std::ofstream f(p, std::ios::binary);
  if (!f) throw Error(ErrorCode::InvalidArgument, "cannot write " + p.string());
  f << text;
}

}  // namespace

void write_outputs(const std::vector<PolicyResult>& results, const std::string& dir) {
  std::filesystem::create_directories(dir);
  std::vector<AggregateReport> reports;
  for (const PolicyResult& r : results) reports.push_back(r.report);
  const std::filesystem::path base(dir);
  write_file(base / "aggregate.csv", emit_aggregate_csv(reports));
  write_file(base / "series.csv", emit_series_csv(reports));
  write_file(base / "plot_series.csv", emit_plot_series(reports));
  write_file(base / "summary.json", emit_summary_json(results));
}

}  // namespace imcomm
