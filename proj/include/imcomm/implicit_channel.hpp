#pragma once

#include <vector>

#include "imcomm/matcore.hpp"

namespace imcomm {

enum class ActuationMode { FullyActuated, UnderActuated };

inline constexpr double kSigmaFloor = 1e-14;
inline constexpr double kWhitenRelTol = 1e-12;

/// Everything the encoder and decoder need that depends only on (B1, W).
struct ChannelSetup {
  ActuationMode mode = ActuationMode::FullyActuated;
  int d0 = 0;
  int d1 = 0;
  Matrix B1;
  Matrix W;

  // fully actuated
  Matrix Q;   // d1 x d0
  Matrix Q1;  // B1 Q
  EigenPair eig;  // (B1 Q)^T W^-1 B1 Q = U H U^T
  double psi = 0.0;

  // under-actuated
  SvdFactors svd;
  Matrix Wbar, Wbar1, Wbar2, Wbar3;
  EigenPair eig1;  // Psi1 Wbar1^-1 Psi1 = U1 Pi1 U1^T
  double pi = 0.0;
  int r = 0;
  int tau = 1;
  std::vector<int> order;  // projection used at phase t mod tau

  /// Length of each Lambda_t vector: d0 or r.
  int lambda_dim() const { return mode == ActuationMode::FullyActuated ? d0 : r; }
  int projection_at(int t) const { return order.empty() ? 0 : order[t % tau]; }
  const Matrix& basis() const {
    return mode == ActuationMode::FullyActuated ? eig.U : eig1.U;
  }
};

/// Q = I when B1 is square, B1^T otherwise.
Matrix choose_projection(const Matrix& b1);

ChannelSetup fa_setup(const Matrix& b1, const Matrix& w);

/// order, when given, must be a permutation of 0..tau-1.
ChannelSetup ua_setup(const Matrix& b1, const Matrix& w, std::vector<int> order = {});

/// Picks the mode from rank(B1).
ChannelSetup make_setup(const Matrix& b1, const Matrix& w);

Matrix projection_matrix(int k, int r, int d0);

/// Linear maps realizing one channel use: s_t = E e_t, e_hat = decoder * y_t.
struct ChannelStep {
  Matrix E;        // d1 x d0
  Matrix decoder;  // d0 x d0
  Matrix Sigma_next;
  Matrix whiten;  // Sigma^-1/2 on the informative eigen-directions
};

/// One channel use at step t (projection k chosen from t in UA mode).
ChannelStep channel_step(const ChannelSetup& setup, const Matrix& sigma,
                         const Vector& lambda, int t);
/// Under-actuated channel use with an explicit projection index.
ChannelStep channel_step_ua(const ChannelSetup& setup, const Matrix& sigma,
                            const Vector& lambda, int k);

Vector encode_fa(const Vector& e, const Matrix& sigma, const Vector& lambda,
                 const ChannelSetup& setup);
Vector decode_fa(const Vector& y, const Matrix& sigma, const Vector& lambda,
                 const ChannelSetup& setup);
Matrix cov_update_fa(const Matrix& sigma, const Vector& lambda, const ChannelSetup& setup);

Vector encode_ua(const Vector& e, const Matrix& sigma, const Vector& lambda, int k,
                 const ChannelSetup& setup);
/// y is the full d0 channel output; only its first r rotated entries are used.
Vector decode_ua(const Vector& y, const Matrix& sigma, const Vector& lambda, int k,
                 const ChannelSetup& setup);
Matrix cov_update_ua(const Matrix& sigma, const Vector& lambda, int k,
                     const ChannelSetup& setup);

/// First r entries of Gamma0^T y.
Vector reduced_output(const Vector& y, const ChannelSetup& setup);

/// y_t = x_{t+1} - (A - B K_t) x_t - B D_t x_hat.
Vector channel_output(const Vector& x_next, const Vector& x_t, const Matrix& abar,
                      const Matrix& b, const Matrix& d_t, const Vector& x_star_hat);

}  // namespace imcomm
