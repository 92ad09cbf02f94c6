#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "imcomm/experiment.hpp"
#include "json.hpp"

using namespace imcomm;
using nlohmann::json;

namespace {

struct Flags {
  std::string config, preset, target, out;
  std::vector<std::string> policies;
  std::optional<int> runs, horizon, budget;
  std::optional<std::uint64_t> seed;
  std::optional<double> theta, epsilon;
  bool no_shooting = false;
};

void add_common(CLI::App* cmd, Flags& f, bool multi_policy) {
  cmd->add_option("--config", f.config, "JSON config file");
  cmd->add_option("--preset", f.preset, "fully-actuated-vi-a or under-actuated-vi-b");
  if (multi_policy) {
    cmd->add_option("--policy", f.policies, "policy name (repeatable)");
  } else {
    cmd->add_option("--policy", f.policies, "policy name")->expected(1);
  }
  cmd->add_option("--runs", f.runs, "Monte Carlo runs");
  cmd->add_option("--horizon", f.horizon, "horizon n");
  cmd->add_option("--seed", f.seed, "master seed");
  cmd->add_option("--theta", f.theta, "heuristic power base");
  cmd->add_option("--epsilon", f.epsilon, "terminal ratio target of the scalar solver");
  cmd->add_option("--budget", f.budget, "optimizer evaluation budget");
  cmd->add_option("--out", f.out, "output directory");
  cmd->add_option("--target", f.target, "\"v1,v2,...\", sampled, or A/B/C with a preset");
  cmd->add_flag("--no-shooting", f.no_shooting, "use epsilon as given");
}

ExperimentConfig resolve(const Flags& f) {
  ExperimentConfig c;
  if (!f.config.empty()) {
    c = load_config(f.config);
  } else {
    c.preset = f.preset.empty() ? "fully-actuated-vi-a" : f.preset;
    c.model = preset_model(c.preset);
  }
  if (!f.config.empty() && !f.preset.empty()) {
    throw Error(ErrorCode::ValidationError, "preset: use either --config or --preset");
  }
  if (f.horizon) c.model.n = *f.horizon;
  if (f.runs) c.runs = *f.runs;
  if (f.seed) c.master_seed = *f.seed;
  if (f.theta) c.theta = *f.theta;
  if (f.epsilon) c.epsilon = *f.epsilon;
  if (f.budget) c.budget = *f.budget;
  if (f.no_shooting) c.shooting = false;
  if (!f.out.empty()) c.out = f.out;
  if (!f.target.empty()) c.target = parse_target(f.target, c.preset, c.model.d0());
  if (!f.policies.empty()) c.policies = f.policies;
  c.validate();
  return c;
}

json matrix_json(const Matrix& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(row);
  }
  return rows;
}

json vector_json(const Vector& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

void write_text(const std::string& dir, const std::string& name, const std::string& text) {
  std::filesystem::create_directories(dir);
  const auto path = std::filesystem::path(dir) / name;
  std::ofstream f(path, std::ios::binary);
  if (!f) throw Error(ErrorCode::InvalidArgument, "cannot write " + path.string());
  f << text;
  std::cout << "wrote " << path.string() << "\n";
}

int cmd_gains(const ExperimentConfig& c) {
  const GainSchedule g = backward_riccati(c.model);
  json j;
  j["horizon"] = g.horizon();
  j["d1"] = g.d1;
  json steps = json::array();
  for (int t = 0; t <= g.horizon(); ++t) {
    json s;
    s["t"] = t;
    s["Phi"] = matrix_json(g.Phi[t]);
    s["Dbar"] = matrix_json(g.Dbar[t]);
    if (t < g.horizon()) {
      s["K"] = matrix_json(g.K[t]);
      s["D"] = matrix_json(g.D[t]);
    }
    steps.push_back(s);
  }
  j["steps"] = steps;
  write_text(c.out, "gains.json", j.dump(2) + "\n");
  return 0;
}

void print_table(const std::vector<PolicyResult>& results) {
  std::printf("%-12s %6s %16s %12s %14s\n", "policy", "runs", "mean_cost", "std_error",
              "final_|z|");
  for (const PolicyResult& r : results) {
    std::printf("%-12s %6d %16.4f %12.4f %14.4f\n", r.report.policy.c_str(), r.report.runs,
                r.report.mean_total_cost, r.report.std_error(), r.report.mean_final_z_norm());
  }
}

int cmd_run(ExperimentConfig c, bool single) {
  if (c.policies.empty()) {
    c.policies = single ? std::vector<std::string>{"imcomm-heu"} : kPolicyNames;
  }
  if (single && c.policies.size() != 1) {
    throw Error(ErrorCode::ValidationError, "policy: simulate takes exactly one policy");
  }
  const std::vector<PolicyResult> results = run_experiment(c);
  write_outputs(results, c.out);
  print_table(results);
  return 0;
}

int cmd_optimize(ExperimentConfig c) {
  const std::string name = c.policies.empty() ? "imcomm-opt" : c.policies.front();
  const Policy p = build_named_policy(name, c);
  if (!p.signaling()) throw Error(ErrorCode::ValidationError, "policy: no power schedule for " + name);
  const PowerSchedule& s = p.power;
  const MdpTrajectory tr = mdp_rollout(s, p.gains, p.setup, p.model);
  json j;
  j["policy"] = name;
  j["mode"] = s.mode == PowerMode::Scalar ? "scalar" : s.mode == PowerMode::Heuristic ? "heuristic"
                                                                                      : "full-matrix";
  j["horizon"] = s.horizon();
  j["mdp_cost"] = tr.mdp_cost();
  j["expected_cost"] = tr.expected_cost();
  j["achieved_terminal_ratio"] = s.achieved_terminal_ratio;
  json lam = json::array();
  for (const Vector& v : s.Lambda) lam.push_back(vector_json(v));
  j["Lambda"] = lam;
  if (s.mode == PowerMode::Scalar) {
    j["epsilon"] = s.epsilon;
    j["a"] = s.a;
    j["b"] = s.b;
    j["b_backward"] = s.b_backward;
    j["theta_b"] = s.theta_b;
    j["residuals"] = s.residuals;
  }
  if (s.mode == PowerMode::FullMatrix) {
    j["optimizer_evaluations"] = s.evaluations;
    j["budget_exhausted"] = s.budget_exhausted;
  }
  if (s.mode == PowerMode::Heuristic) j["theta"] = s.theta;
  write_text(c.out, "power.json", j.dump(2) + "\n");
  std::printf("%s: mdp cost %.6f, expected cost %.6f, terminal ratio %.6g\n", name.c_str(),
              tr.mdp_cost(), tr.expected_cost(), s.achieved_terminal_ratio);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Decentralized LQG with implicit communication: gains, simulation, power design"};
  app.require_subcommand(1);
  Flags f;
  CLI::App* gains = app.add_subcommand("gains", "dump the Riccati and tracking gain schedule");
  CLI::App* sim = app.add_subcommand("simulate", "Monte Carlo of one policy");
  CLI::App* opt = app.add_subcommand("optimize-power", "solve and dump a power schedule");
  CLI::App* cmp = app.add_subcommand("compare", "Monte Carlo comparison of several policies");
  add_common(gains, f, false);
  add_common(sim, f, false);
  add_common(opt, f, false);
  add_common(cmp, f, true);
  CLI11_PARSE(app, argc, argv);

  try {
    const ExperimentConfig c = resolve(f);
    if (gains->parsed()) return cmd_gains(c);
    if (sim->parsed()) return cmd_run(c, true);
    if (opt->parsed()) return cmd_optimize(c);
    return cmd_run(c, false);
  } catch (const Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
}
