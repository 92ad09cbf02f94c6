#pragma once

// Dense linear-algebra primitives shared by the gain, channel and power
// modules. Everything here is a pure function of its arguments.

#include <Eigen/Dense>

#include "imcomm/error.hpp"

namespace imcomm {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Orthonormal eigenvectors U (columns) and nonnegative eigenvalues H,
/// sorted descending, with M = U diag(H) U^T.
struct EigenPair {
  Matrix U;
  Vector H;

  double min_value() const { return H.size() ? H.minCoeff() : 0.0; }
  Matrix reconstruct() const { return U * H.asDiagonal() * U.transpose(); }
};

/// B1 = Gamma0 * PsiBar * Gamma1^T where PsiBar carries diag(psi) in its
/// top-left rank x rank block.
struct SvdFactors {
  Matrix Gamma0;  // d0 x d0
  Vector psi;     // rank positive singular values, descending
  Matrix Gamma1;  // d1 x d1
  int rank = 0;

  Matrix Psi1() const { return psi.asDiagonal(); }
  Matrix psi_bar() const;
  Matrix reconstruct() const { return Gamma0 * psi_bar() * Gamma1.transpose(); }
};

/// S and S^{-1} of a symmetric positive definite matrix from a single
/// eigendecomposition.
struct SqrtPair {
  Matrix sqrt;
  Matrix inv_sqrt;
};

inline constexpr double kSymmetryTol = 1e-9;
inline constexpr double kClampTol = 1e-10;
inline constexpr double kNegativeEigTol = 1e-6;
inline constexpr double kRankTol = 1e-10;

double asymmetry(const Matrix& m);
Matrix symmetrize(const Matrix& m);
void require_symmetric(const Matrix& m, const char* name);
double min_eigenvalue(const Matrix& m);

/// Number of singular values above rel_tol * sigma_max.
int numerical_rank(const Matrix& m, double rel_tol = kRankTol);

Matrix psd_sqrt(const Matrix& m);

/// Throws NotPd if the smallest eigenvalue is below min_eig.
SqrtPair pd_sqrt_pair(const Matrix& m, double min_eig);

Matrix pinv_full_rank(const Matrix& q);

EigenPair sym_eig(const Matrix& m);

SvdFactors svd_factor(const Matrix& b1);

/// Solves A X + X A = rhs for symmetric positive definite A in the
/// eigenbasis of A.
Matrix solve_sylvester_lyapunov(const Matrix& a, const Matrix& rhs);

/// Cholesky-based solve of (spd) X = rhs; throws SingularInnovation when
/// the minimum eigenvalue of spd is below min_eig.
Matrix spd_solve(const Matrix& spd, const Matrix& rhs, double min_eig = 1e-12);

/// Lower factor L with L L^T = m for a PSD m (Cholesky when PD, symmetric
/// square root otherwise).
Matrix covariance_factor(const Matrix& m);

}  // namespace imcomm
