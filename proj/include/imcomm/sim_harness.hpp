#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "imcomm/coordination.hpp"

namespace imcomm {

std::uint64_t splitmix64(std::uint64_t x);

/// Seed of run i: splitmix64(master ^ splitmix64(i)).
std::uint64_t run_seed(std::uint64_t master, std::uint64_t index);

/// Inverse standard normal CDF (Wichura, AS241 PPND16), p in (0, 1).
double normal_quantile(double p);

/// mt19937_64 feeding 53-bit open-interval uniforms through the inverse CDF.
class GaussianStream {
 public:
  explicit GaussianStream(std::uint64_t seed) : engine_(seed) {}

  double uniform();
  double next();
  Vector next_vector(Eigen::Index dim);
  /// factor * N(0, I), so the result has covariance factor factor^T.
  Vector draw(const Matrix& factor);

 private:
  std::mt19937_64 engine_;
};

/// A policy with everything precomputed for rollouts.
struct Policy {
  PolicyTag tag = PolicyTag::ExComm;
  std::string name;
  SystemModel model;
  GainSchedule gains;  // leader-only schedule for LeaderOnly
  ChannelSetup setup;
  PowerSchedule power;
  CoordinationPlan plan;
  Matrix W_factor, X0_factor, Sigma0_factor;

  bool signaling() const { return tag == PolicyTag::ImCommFA || tag == PolicyTag::ImCommUA; }
};

Policy make_baseline(PolicyTag tag, const SystemModel& model, std::string name = "");
/// Im-Comm policy; FA or UA follows from rank(B1).
Policy make_imcomm(const SystemModel& model, PowerSchedule power, std::string name = "");

/// Fixed target or one drawn from N(0, Sigma0) per run.
struct TargetSpec {
  bool sampled = false;
  Vector fixed;
  static TargetSpec fixed_at(Vector v) { return {false, std::move(v)}; }
  static TargetSpec random() { return {true, Vector()}; }
};

struct RolloutTrace {
  Vector x_star;
  std::vector<Vector> states;       // n+1
  std::vector<Vector> inputs_v;     // n
  std::vector<Vector> inputs_q;     // n
  std::vector<Vector> signals;      // n
  std::vector<Vector> noises;       // n
  std::vector<Vector> outputs;      // n, y_t (signaling policies only)
  std::vector<Vector> errors;       // n+1, e_t (signaling policies only)
  std::vector<Vector> estimates;    // n+1, follower target estimate
  std::vector<double> stage_costs;  // n
  double terminal_cost = 0.0;
  std::vector<double> z_norms;       // n+1
  std::vector<double> sigma_traces;  // n+1
  std::uint64_t seed = 0;

  double total_cost() const;
};

RolloutTrace rollout(const Policy& policy, const TargetSpec& target, std::uint64_t seed);

struct AggregateReport {
  std::string policy;
  int runs = 0;
  double mean_total_cost = 0.0;
  double std_total_cost = 0.0;
  std::vector<double> totals;
  std::vector<double> final_z_norms;
  std::vector<double> mean_z_norm;       // n+1
  std::vector<double> mean_sigma_trace;  // n+1
  std::vector<double> mean_stage_cost;   // n+1, last entry is the terminal cost
  double achieved_terminal_ratio = 1.0;
  int optimizer_evaluations = 0;

  double std_error() const;
  double mean_final_z_norm() const;
  int horizon() const { return static_cast<int>(mean_z_norm.size()) - 1; }
};

AggregateReport monte_carlo(const Policy& policy, const TargetSpec& target, int runs,
                            std::uint64_t master_seed);

}  // namespace imcomm
