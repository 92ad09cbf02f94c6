#pragma once

#include <vector>

#include "imcomm/implicit_channel.hpp"
#include "imcomm/lqg_gains.hpp"

namespace imcomm {

enum class PowerMode { FullMatrix, Scalar, Heuristic };

/// Per-step signaling powers. Lambda[t] has setup.lambda_dim() entries.
struct PowerSchedule {
  PowerMode mode = PowerMode::FullMatrix;
  std::vector<Vector> Lambda;

  // Scalar mode
  std::vector<double> a;
  std::vector<double> b;           // forward from b_0 = 1, n+1 entries
  std::vector<double> b_backward;  // backward from b_n = epsilon
  std::vector<double> theta_b;     // n+1 entries
  std::vector<double> residuals;   // stationarity residual per step
  double epsilon = 0.0;

  double theta = 0.0;  // heuristic base

  // optimizer bookkeeping
  int evaluations = 0;
  bool budget_exhausted = false;

  int horizon() const { return static_cast<int>(Lambda.size()); }
  /// b_n from the forward pass, or Tr(Sigma_n)/Tr(Sigma_0) when set by the caller.
  double achieved_terminal_ratio = 1.0;
};

/// Lambda_t = theta^t (1, ..., 1).
PowerSchedule heuristic_schedule(double theta, int n, int dim);

/// State of the deterministic power MDP. L = Omega Sigma^-1 where Omega is
/// the cross covariance of the target-free error part of z_t with e_t.
struct MdpState {
  Matrix Z;
  Matrix Sigma;
  Matrix L;
};

/// Z_0 = X0 + Sigma0, Sigma_0 = Sigma0, L_0 = -I.
MdpState mdp_initial(const SystemModel& model);

/// One step of the MDP for either channel mode.
MdpState mdp_step(const MdpState& state, const Vector& lambda, const GainSchedule& gains,
                  const ChannelSetup& setup, const SystemModel& model, int t);
MdpState mdp_step_fa(const MdpState& state, const Vector& lambda, const GainSchedule& gains,
                     const ChannelSetup& setup, const SystemModel& model, int t);
/// k overrides the projection the schedule would pick at t.
MdpState mdp_step_ua(const MdpState& state, const Vector& lambda, int k,
                     const GainSchedule& gains, const ChannelSetup& setup,
                     const SystemModel& model, int t);

/// Lambda-dependent stage cost l_t (Lambda-independent constants dropped).
double stage_cost(const MdpState& state, const Vector& lambda, const GainSchedule& gains,
                  const ChannelSetup& setup, const SystemModel& model, int t);
double stage_cost_fa(const MdpState& state, const Vector& lambda, const GainSchedule& gains,
                     const ChannelSetup& setup, const SystemModel& model, int t);
double terminal_cost(const MdpState& state, const SystemModel& model);

/// Deterministic rollout of the MDP plus the bookkeeping needed to turn the
/// MDP objective into the expected value of the tracking cost for a target
/// drawn from N(0, Sigma0).
struct MdpTrajectory {
  std::vector<MdpState> states;  // n+1
  std::vector<double> stage;     // l_0 .. l_{n-1}
  double terminal = 0.0;
  std::vector<double> reconstructed;  // per stage dropped terms, n+1 entries
  double mdp_cost() const;
  double expected_cost() const;
};

MdpTrajectory mdp_rollout(const PowerSchedule& schedule, const GainSchedule& gains,
                          const ChannelSetup& setup, const SystemModel& model);

/// Sum of l_t plus Tr(Z_n Fn).
double mdp_cost(const PowerSchedule& schedule, const GainSchedule& gains,
                const ChannelSetup& setup, const SystemModel& model);
double ua_schedule_cost(const PowerSchedule& schedule, const GainSchedule& gains,
                        const ChannelSetup& setup, const SystemModel& model);

/// L_t for t = 0..n (independent of the powers in the fully actuated case).
std::vector<Matrix> l_sequence(const GainSchedule& gains, const SystemModel& model);

/// theta_{Z,t} for t = 0..n.
std::vector<Matrix> costate_Z(const GainSchedule& gains, const SystemModel& model);

struct SigmaCostate {
  Matrix theta;
  Matrix Theta1, Theta2, Theta3;
};

SigmaCostate theta_sigma_step(const Matrix& sigma, const Matrix& l_t, const Vector& lambda,
                              const Matrix& theta_sigma_next, const Matrix& theta_z_next,
                              const GainSchedule& gains, const ChannelSetup& setup,
                              const SystemModel& model, int t);

/// l_t + Tr(f^Z theta_Z') + Tr(f^Sigma theta_Sigma').
double hamiltonian_fa(const Matrix& z, const Matrix& sigma, const Matrix& l_t,
                      const Vector& lambda, const Matrix& theta_z_next,
                      const Matrix& theta_sigma_next, const GainSchedule& gains,
                      const ChannelSetup& setup, const SystemModel& model, int t);

/// Same value assembled term by term in the eigenbasis of the channel.
double hamiltonian_fa_expanded(const Matrix& z, const Matrix& sigma, const Matrix& l_t,
                               const Vector& lambda, const Matrix& theta_z_next,
                               const Matrix& theta_sigma_next, const GainSchedule& gains,
                               const ChannelSetup& setup, const SystemModel& model, int t);

struct LambdaGradientTerms {
  Matrix M1, M2, M3;
};

LambdaGradientTerms gradient_terms_fa(const Matrix& sigma, const Matrix& l_t,
                                      const Matrix& theta_z_next,
                                      const Matrix& theta_sigma_next,
                                      const GainSchedule& gains, const ChannelSetup& setup,
                                      const SystemModel& model, int t);

/// dH/dLambda(j) = M1(j)/sqrt(Lambda(j)) - H(j) M2(j)/(1+Lambda(j)H(j))^2 + M3(j).
Vector grad_lambda_fa(const Matrix& sigma, const Matrix& l_t, const Vector& lambda,
                      const Matrix& theta_z_next, const Matrix& theta_sigma_next,
                      const GainSchedule& gains, const ChannelSetup& setup,
                      const SystemModel& model, int t);

/// Constants of the scalar-power MDP (Lambda_t = a_t H^-1).
struct ScalarConstants {
  Matrix Qa;
  double ra = 0.0;
  std::vector<Matrix> Qb, Qab;
  std::vector<double> rb, rab;
};

ScalarConstants scalar_constants(const GainSchedule& gains, const ChannelSetup& setup,
                                 const SystemModel& model);

/// Left side of the per-step stationarity condition.
double scalar_stationarity(const ScalarConstants& c, const Matrix& theta_z_next, int t,
                           double a, double b_next, double theta_b_next);

struct ScalarSolveOptions {
  double epsilon = 1e-3;
  /// Bisect epsilon (in log space) until the backward b_0 lands in [0.5, 2].
  bool shooting = true;
  double grid_lo = 1e-8;
  double grid_hi = 1e4;
  int grid_points = 200;
};

PowerSchedule scalar_backward_solve(const ScalarConstants& c,
                                    const std::vector<Matrix>& theta_z,
                                    const ChannelSetup& setup,
                                    const ScalarSolveOptions& options = {});

/// Derivative-free coordinate descent on log Lambda entries.
PowerSchedule ua_optimize(const PowerSchedule& init, const GainSchedule& gains,
                          const ChannelSetup& setup, const SystemModel& model, int budget);

}  // namespace imcomm
