#include "imcomm/implicit_channel.hpp"

#include <algorithm>
#include <numeric>
#include <sstream>

namespace imcomm {

namespace {

// Sigma^1/2 and a whitening map. Eigen-directions with variance below
// kWhitenRelTol * lambda_max carry no usable information in double precision
// and are left out of the whitening (pseudo-inverse square root).
struct SigmaRoots {
  Matrix sqrt;
  Matrix whiten;
  bool truncated = false;
};

SigmaRoots sigma_roots(const Matrix& sigma) {
  require_symmetric(sigma, "Sigma");
  Eigen::SelfAdjointEigenSolver<Matrix> es(symmetrize(sigma));
  const Vector& lam = es.eigenvalues();
  const double top = lam(lam.size() - 1);
  if (top < kSigmaFloor) {
    std::ostringstream os;
    os << "Sigma is numerically zero (largest eigenvalue " << top << ")";
    throw Error(ErrorCode::SigmaNearSingular, os.str());
  }
  if (lam(0) < -kNegativeEigTol * std::max(1.0, top)) {
    throw Error(ErrorCode::NotPsd, "Sigma has a negative eigenvalue");
  }
  const double cut = std::max(kSigmaFloor, kWhitenRelTol * top);
  Vector root(lam.size()), inv(lam.size());
  SigmaRoots out;
  for (Eigen::Index i = 0; i < lam.size(); ++i) {
    const double l = std::max(lam(i), 0.0);
    root(i) = std::sqrt(l);
    if (l >= cut) {
      inv(i) = 1.0 / root(i);
    } else {
      inv(i) = 0.0;
      out.truncated = true;
    }
  }
  const Matrix& v = es.eigenvectors();
  out.sqrt = symmetrize(v * root.asDiagonal() * v.transpose());
  out.whiten = symmetrize(v * inv.asDiagonal() * v.transpose());
  return out;
}

void check_lambda(const Vector& lambda, const ChannelSetup& setup) {
  if (lambda.size() != setup.lambda_dim()) {
    std::ostringstream os;
    os << "Lambda has " << lambda.size() << " entries, expected " << setup.lambda_dim();
    throw Error(ErrorCode::DimensionMismatch, os.str());
  }
  if ((lambda.array() < 0.0).any() || !lambda.allFinite()) {
    throw Error(ErrorCode::InvalidArgument, "Lambda entries must be finite and nonnegative");
  }
}

void check_mode(const ChannelSetup& setup, ActuationMode mode) {
  if (setup.mode != mode) {
    throw Error(ErrorCode::InvalidArgument, "operation does not match the channel mode");
  }
}

// U diag(sqrt(lambda)) U^T
Matrix s_sqrt(const Matrix& u, const Vector& lambda) {
  return u * lambda.cwiseSqrt().asDiagonal() * u.transpose();
}

ChannelStep fa_step(const ChannelSetup& setup, const Matrix& sigma, const Vector& lambda) {
  check_mode(setup, ActuationMode::FullyActuated);
  check_lambda(lambda, setup);
  const SigmaRoots root = sigma_roots(sigma);
  const Matrix& u = setup.eig.U;
  const Matrix ss = s_sqrt(u, lambda);
  ChannelStep out;
  out.whiten = root.whiten;
  out.E = setup.Q * ss * root.whiten;
  // Cov(e, y) = Sigma E^T B1^T
  const Matrix cross = sigma * out.E.transpose() * setup.B1.transpose();
  const Matrix q1e = setup.B1 * out.E;
  const Matrix innovation = q1e * sigma * q1e.transpose() + setup.W;
  out.decoder = spd_solve(innovation, cross.transpose()).transpose();
  if (!root.truncated) {
    const Vector v = (1.0 + lambda.array() * setup.eig.H.array()).inverse().matrix();
    out.Sigma_next = symmetrize(root.sqrt * u * v.asDiagonal() * u.transpose() * root.sqrt);
  } else {
    out.Sigma_next = symmetrize(sigma - out.decoder * cross.transpose());
  }
  return out;
}

ChannelStep ua_step(const ChannelSetup& setup, const Matrix& sigma, const Vector& lambda,
                    int k) {
  check_mode(setup, ActuationMode::UnderActuated);
  check_lambda(lambda, setup);
  if (k < 0 || k >= setup.tau) throw Error(ErrorCode::IndexOutOfRange, "projection index");
  const SigmaRoots root = sigma_roots(sigma);
  const int r = setup.r;
  const Matrix& u1 = setup.eig1.U;
  const Matrix ss = s_sqrt(u1, lambda);
  const Matrix pk = projection_matrix(k, r, setup.d0);
  const Matrix psi1 = setup.svd.Psi1();
  ChannelStep out;
  out.whiten = root.whiten;
  const Matrix s_tilde = ss * pk * root.whiten;  // e -> s~
  out.E = setup.svd.Gamma1.leftCols(r) * s_tilde;
  // Cov(e, y~) with y~ = Psi1 s~ + w~
  const Matrix cross = sigma * s_tilde.transpose() * psi1;
  const Matrix innovation = psi1 * s_tilde * sigma * s_tilde.transpose() * psi1 + setup.Wbar1;
  const Matrix gain = spd_solve(innovation, cross.transpose()).transpose();
  out.decoder = gain * setup.svd.Gamma0.leftCols(r).transpose();
  if (!root.truncated) {
    Matrix vbar = Matrix::Identity(setup.d0, setup.d0);
    const Vector v = (1.0 + lambda.array() * setup.eig1.H.array()).inverse().matrix();
    vbar.block(k * r, k * r, r, r) = u1 * v.asDiagonal() * u1.transpose();
    out.Sigma_next = symmetrize(root.sqrt * vbar * root.sqrt);
  } else {
    out.Sigma_next = symmetrize(sigma - gain * cross.transpose());
  }
  return out;
}

}  // namespace

Matrix choose_projection(const Matrix& b1) {
  const Eigen::Index d0 = b1.rows();
  const Matrix q = b1.rows() == b1.cols() ? Matrix::Identity(d0, d0) : Matrix(b1.transpose());
  if (numerical_rank(b1 * q) < d0) {
    throw Error(ErrorCode::RankDeficient, "B1 Q does not have full rank d0");
  }
  return q;
}

ChannelSetup fa_setup(const Matrix& b1, const Matrix& w) {
  require_symmetric(w, "W");
  if (w.rows() != b1.rows()) throw Error(ErrorCode::DimensionMismatch, "W and B1 rows differ");
  ChannelSetup s;
  s.mode = ActuationMode::FullyActuated;
  s.d0 = static_cast<int>(b1.rows());
  s.d1 = static_cast<int>(b1.cols());
  s.B1 = b1;
  s.W = w;
  s.Q = choose_projection(b1);
  s.Q1 = b1 * s.Q;
  const Matrix winv_q1 = spd_solve(w, s.Q1);
  s.eig = sym_eig(symmetrize(s.Q1.transpose() * winv_q1));
  s.psi = s.eig.min_value();
  s.r = s.d0;
  s.tau = 1;
  return s;
}

ChannelSetup ua_setup(const Matrix& b1, const Matrix& w, std::vector<int> order) {
  require_symmetric(w, "W");
  if (w.rows() != b1.rows()) throw Error(ErrorCode::DimensionMismatch, "W and B1 rows differ");
  ChannelSetup s;
  s.mode = ActuationMode::UnderActuated;
  s.d0 = static_cast<int>(b1.rows());
  s.d1 = static_cast<int>(b1.cols());
  s.B1 = b1;
  s.W = w;
  s.svd = svd_factor(b1);
  s.r = s.svd.rank;
  if (s.r >= s.d0) {
    throw Error(ErrorCode::InvalidArgument, "B1 has full row rank; use the fully actuated channel");
  }
  if (s.d0 % s.r != 0) {
    std::ostringstream os;
    os << "d0 = " << s.d0 << " is not a multiple of rank " << s.r;
    throw Error(ErrorCode::NonIntegerPeriod, os.str());
  }
  s.tau = s.d0 / s.r;
  const int r = s.r;
  s.Wbar = symmetrize(s.svd.Gamma0.transpose() * w * s.svd.Gamma0);
  s.Wbar1 = s.Wbar.topLeftCorner(r, r);
  s.Wbar3 = s.Wbar.topRightCorner(r, s.d0 - r);
  s.Wbar2 = s.Wbar.bottomRightCorner(s.d0 - r, s.d0 - r);
  const Matrix psi1 = s.svd.Psi1();
  s.eig1 = sym_eig(symmetrize(psi1 * spd_solve(s.Wbar1, psi1)));
  s.pi = s.eig1.min_value();
  if (order.empty()) {
    order.resize(s.tau);
    std::iota(order.begin(), order.end(), 0);
  }
  std::vector<int> sorted = order;
  std::sort(sorted.begin(), sorted.end());
  for (int i = 0; i < s.tau; ++i) {
    if (static_cast<int>(sorted.size()) != s.tau || sorted[i] != i) {
      throw Error(ErrorCode::InvalidArgument, "projection order must be a permutation of 0..tau-1");
    }
  }
  s.order = std::move(order);
  return s;
}

ChannelSetup make_setup(const Matrix& b1, const Matrix& w) {
  if (numerical_rank(b1) == b1.rows()) return fa_setup(b1, w);
  return ua_setup(b1, w);
}

Matrix projection_matrix(int k, int r, int d0) {
  if (r <= 0 || k < 0 || (k + 1) * r > d0) {
    throw Error(ErrorCode::IndexOutOfRange, "projection index outside 0..tau-1");
  }
  Matrix p = Matrix::Zero(r, d0);
  p.block(0, k * r, r, r).setIdentity();
  return p;
}

ChannelStep channel_step(const ChannelSetup& setup, const Matrix& sigma, const Vector& lambda,
                         int t) {
  if (setup.mode == ActuationMode::FullyActuated) return fa_step(setup, sigma, lambda);
  return ua_step(setup, sigma, lambda, setup.projection_at(t));
}

ChannelStep channel_step_ua(const ChannelSetup& setup, const Matrix& sigma,
                            const Vector& lambda, int k) {
  return ua_step(setup, sigma, lambda, k);
}

Vector encode_fa(const Vector& e, const Matrix& sigma, const Vector& lambda,
                 const ChannelSetup& setup) {
  return fa_step(setup, sigma, lambda).E * e;
}

Vector decode_fa(const Vector& y, const Matrix& sigma, const Vector& lambda,
                 const ChannelSetup& setup) {
  return fa_step(setup, sigma, lambda).decoder * y;
}

Matrix cov_update_fa(const Matrix& sigma, const Vector& lambda, const ChannelSetup& setup) {
  return fa_step(setup, sigma, lambda).Sigma_next;
}

Vector encode_ua(const Vector& e, const Matrix& sigma, const Vector& lambda, int k,
                 const ChannelSetup& setup) {
  return ua_step(setup, sigma, lambda, k).E * e;
}

Vector decode_ua(const Vector& y, const Matrix& sigma, const Vector& lambda, int k,
                 const ChannelSetup& setup) {
  return ua_step(setup, sigma, lambda, k).decoder * y;
}

Matrix cov_update_ua(const Matrix& sigma, const Vector& lambda, int k,
                     const ChannelSetup& setup) {
  return ua_step(setup, sigma, lambda, k).Sigma_next;
}

Vector reduced_output(const Vector& y, const ChannelSetup& setup) {
  return setup.svd.Gamma0.leftCols(setup.r).transpose() * y;
}

Vector channel_output(const Vector& x_next, const Vector& x_t, const Matrix& abar,
                      const Matrix& b, const Matrix& d_t, const Vector& x_star_hat) {
  return x_next - abar * x_t - b * (d_t * x_star_hat);
}

}  // namespace imcomm
