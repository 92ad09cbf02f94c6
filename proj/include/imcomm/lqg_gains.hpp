#pragma once

#include <vector>

#include "imcomm/matcore.hpp"

namespace imcomm {

/// Plant x_{t+1} = A x_t + B1 v_t + B2 q_t + w_t with leader input v and
/// follower input q, quadratic tracking cost and Gaussian priors.
struct SystemModel {
  Matrix A, B1, B2;
  Matrix W;       // process noise covariance
  Matrix F, Fn;   // stage / terminal state weights
  Matrix G1, G2;  // leader / follower input weights
  Matrix Sigma0;  // prior covariance of the target
  Matrix X0;      // covariance of the initial state
  int n = 0;

  int d0() const { return static_cast<int>(A.rows()); }
  int d1() const { return static_cast<int>(B1.cols()); }
  int d2() const { return static_cast<int>(B2.cols()); }
  int d() const { return d1() + d2(); }
  Matrix B() const;
  Matrix G() const;

  /// Throws ValidationError naming the offending field.
  void validate() const;
};

bool is_controllable(const Matrix& a, const Matrix& b, double rel_tol = 1e-8);

struct GainSchedule {
  std::vector<Matrix> Phi;   // n+1
  std::vector<Matrix> K;     // n, d x d0
  std::vector<Matrix> Dbar;  // n+1
  std::vector<Matrix> D;     // n, d x d0
  std::vector<Matrix> Abar;  // n, A - B K_t
  int d1 = 0;
  std::vector<Matrix> K_l, K_f, D_l, D_f;

  int horizon() const { return static_cast<int>(K.size()); }
};

/// Joint tracking LQR for B = [B1 B2], G = diag(G1, G2). Splits are filled.
GainSchedule backward_riccati(const SystemModel& model);

/// Fills K_l/K_f/D_l/D_f by splitting rows at d1.
void split_gains(GainSchedule& schedule, int d1);

/// Tracking LQR for (A, B1) alone. K and D keep the joint row layout with
/// the follower rows zero, so Abar and the splits stay meaningful.
GainSchedule leader_only_gains(const SystemModel& model);

/// u_t = -K_t x_t + D_t x_star.
Vector excomm_inputs(const GainSchedule& schedule, int t, const Vector& x_t,
                     const Vector& x_star);

}  // namespace imcomm
