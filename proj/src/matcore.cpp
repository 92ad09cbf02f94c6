#include "imcomm/matcore.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace imcomm {

std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::NotSymmetric: return "NotSymmetric";
    case ErrorCode::NotPsd: return "NotPsd";
    case ErrorCode::NotPd: return "NotPd";
    case ErrorCode::RankDeficient: return "RankDeficient";
    case ErrorCode::ZeroMatrix: return "ZeroMatrix";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::SingularInnovation: return "SingularInnovation";
    case ErrorCode::NotControllable: return "NotControllable";
    case ErrorCode::SigmaNearSingular: return "SigmaNearSingular";
    case ErrorCode::NonIntegerPeriod: return "NonIntegerPeriod";
    case ErrorCode::IndexOutOfRange: return "IndexOutOfRange";
    case ErrorCode::InvalidTheta: return "InvalidTheta";
    case ErrorCode::ZeroLambdaEntry: return "ZeroLambdaEntry";
    case ErrorCode::NoRootFound: return "NoRootFound";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::ValidationError: return "ValidationError";
    case ErrorCode::HorizonMismatch: return "HorizonMismatch";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
  }
  return "Unknown";
}

namespace {

double max_abs(const Matrix& m) { return m.size() ? m.cwiseAbs().maxCoeff() : 0.0; }

void require_square(const Matrix& m, const char* name) {
  if (m.rows() != m.cols()) {
    std::ostringstream os;
    os << name << " must be square, got " << m.rows() << "x" << m.cols();
    throw Error(ErrorCode::DimensionMismatch, os.str());
  }
}

// Eigen returns ascending eigenvalues; flip to descending.
EigenPair descending(const Eigen::SelfAdjointEigenSolver<Matrix>& es) {
  const Eigen::Index n = es.eigenvalues().size();
  EigenPair out{Matrix(n, n), Vector(n)};
  for (Eigen::Index i = 0; i < n; ++i) {
    out.H(i) = es.eigenvalues()(n - 1 - i);
    out.U.col(i) = es.eigenvectors().col(n - 1 - i);
  }
  return out;
}

// Deterministic sign: the first entry of largest magnitude is positive.
bool needs_flip(const Eigen::Ref<const Vector>& v) {
  Eigen::Index idx = 0;
  v.cwiseAbs().maxCoeff(&idx);
  return v(idx) < 0.0;
}

}  // namespace

double asymmetry(const Matrix& m) {
  if (m.rows() != m.cols()) return std::numeric_limits<double>::infinity();
  return m.size() ? (m - m.transpose()).cwiseAbs().maxCoeff() : 0.0;
}

Matrix symmetrize(const Matrix& m) { return 0.5 * (m + m.transpose()); }

void require_symmetric(const Matrix& m, const char* name) {
  require_square(m, name);
  if (asymmetry(m) > kSymmetryTol * std::max(1.0, max_abs(m))) {
    std::ostringstream os;
    os << name << " is not symmetric (max |M - M^T| = " << asymmetry(m) << ")";
    throw Error(ErrorCode::NotSymmetric, os.str());
  }
}

double min_eigenvalue(const Matrix& m) {
  if (m.size() == 0) return 0.0;
  Eigen::SelfAdjointEigenSolver<Matrix> es(symmetrize(m), Eigen::EigenvaluesOnly);
  return es.eigenvalues()(0);
}

int numerical_rank(const Matrix& m, double rel_tol) {
  if (m.size() == 0) return 0;
  Eigen::JacobiSVD<Matrix> svd(m);
  const Vector& s = svd.singularValues();
  if (s.size() == 0 || s(0) == 0.0) return 0;
  const double thresh = rel_tol * s(0);
  return static_cast<int>((s.array() > thresh).count());
}

Matrix psd_sqrt(const Matrix& m) {
  require_symmetric(m, "M");
  Eigen::SelfAdjointEigenSolver<Matrix> es(symmetrize(m));
  Vector lam = es.eigenvalues();
  const double scale = std::max(1.0, max_abs(m));
  if (lam.size() && lam(0) < -kNegativeEigTol * scale) {
    std::ostringstream os;
    os << "minimum eigenvalue " << lam(0) << " is negative";
    throw Error(ErrorCode::NotPsd, os.str());
  }
  lam = lam.cwiseMax(0.0).cwiseSqrt();
  const Matrix& v = es.eigenvectors();
  return symmetrize(v * lam.asDiagonal() * v.transpose());
}

SqrtPair pd_sqrt_pair(const Matrix& m, double min_eig) {
  require_symmetric(m, "M");
  Eigen::SelfAdjointEigenSolver<Matrix> es(symmetrize(m));
  const Vector& lam = es.eigenvalues();
  if (lam.size() && lam(0) < min_eig) {
    std::ostringstream os;
    os << "minimum eigenvalue " << lam(0) << " below " << min_eig;
    throw Error(ErrorCode::NotPd, os.str());
  }
  const Matrix& v = es.eigenvectors();
  const Vector root = lam.cwiseSqrt();
  return {symmetrize(v * root.asDiagonal() * v.transpose()),
          symmetrize(v * root.cwiseInverse().asDiagonal() * v.transpose())};
}

Matrix pinv_full_rank(const Matrix& q) {
  if (q.rows() < q.cols()) {
    throw Error(ErrorCode::RankDeficient, "pinv_full_rank needs rows >= cols");
  }
  Eigen::JacobiSVD<Matrix> svd(q, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Vector& s = svd.singularValues();
  const double smax = s.size() ? s(0) : 0.0;
  if (smax == 0.0 || s(s.size() - 1) <= kRankTol * smax) {
    throw Error(ErrorCode::RankDeficient, "Q does not have full column rank");
  }
  return svd.matrixV() * s.cwiseInverse().asDiagonal() * svd.matrixU().transpose();
}

EigenPair sym_eig(const Matrix& m) {
  require_symmetric(m, "M");
  Eigen::SelfAdjointEigenSolver<Matrix> es(symmetrize(m));
  EigenPair out = descending(es);
  const double scale = std::max(1.0, max_abs(m));
  if (out.H.size() && out.min_value() < -kNegativeEigTol * scale) {
    std::ostringstream os;
    os << "minimum eigenvalue " << out.min_value() << " is negative";
    throw Error(ErrorCode::NotPsd, os.str());
  }
  out.H = out.H.cwiseMax(0.0);
  for (Eigen::Index i = 0; i < out.U.cols(); ++i) {
    if (needs_flip(out.U.col(i))) out.U.col(i) *= -1.0;
  }
  return out;
}

Matrix SvdFactors::psi_bar() const {
  Matrix pb = Matrix::Zero(Gamma0.rows(), Gamma1.rows());
  pb.topLeftCorner(rank, rank) = psi.asDiagonal();
  return pb;
}

SvdFactors svd_factor(const Matrix& b1) {
  if (b1.size() == 0 || max_abs(b1) == 0.0) {
    throw Error(ErrorCode::ZeroMatrix, "B1 must be nonzero");
  }
  Eigen::JacobiSVD<Matrix> svd(b1, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const Vector& s = svd.singularValues();
  SvdFactors out;
  out.Gamma0 = svd.matrixU();
  out.Gamma1 = svd.matrixV();
  out.rank = static_cast<int>((s.array() > kRankTol * s(0)).count());
  out.psi = s.head(out.rank);
  for (int i = 0; i < out.rank; ++i) {
    if (needs_flip(out.Gamma1.col(i))) {
      out.Gamma1.col(i) *= -1.0;
      out.Gamma0.col(i) *= -1.0;
    }
  }
  for (Eigen::Index i = out.rank; i < out.Gamma0.cols(); ++i) {
    if (needs_flip(out.Gamma0.col(i))) out.Gamma0.col(i) *= -1.0;
  }
  for (Eigen::Index i = out.rank; i < out.Gamma1.cols(); ++i) {
    if (needs_flip(out.Gamma1.col(i))) out.Gamma1.col(i) *= -1.0;
  }
  return out;
}

Matrix solve_sylvester_lyapunov(const Matrix& a, const Matrix& rhs) {
  require_symmetric(a, "A");
  require_symmetric(rhs, "RHS");
  if (rhs.rows() != a.rows()) {
    throw Error(ErrorCode::DimensionMismatch, "A and RHS differ in size");
  }
  Eigen::SelfAdjointEigenSolver<Matrix> es(symmetrize(a));
  const Vector& lam = es.eigenvalues();
  if (lam.size() && lam(0) <= 1e-12) {
    std::ostringstream os;
    os << "A must be positive definite (min eigenvalue " << lam(0) << ")";
    throw Error(ErrorCode::NotPd, os.str());
  }
  const Matrix& v = es.eigenvectors();
  Matrix rt = v.transpose() * symmetrize(rhs) * v;
  for (Eigen::Index i = 0; i < rt.rows(); ++i) {
    for (Eigen::Index j = 0; j < rt.cols(); ++j) rt(i, j) /= lam(i) + lam(j);
  }
  return symmetrize(v * rt * v.transpose());
}

Matrix spd_solve(const Matrix& spd, const Matrix& rhs, double min_eig) {
  const Matrix s = symmetrize(spd);
  if (s.rows() == 0) return Matrix(0, rhs.cols());
  if (min_eigenvalue(s) < min_eig) {
    throw Error(ErrorCode::SingularInnovation, "matrix to invert is numerically singular");
  }
  Eigen::LLT<Matrix> llt(s);
  if (llt.info() != Eigen::Success) {
    throw Error(ErrorCode::SingularInnovation, "Cholesky factorization failed");
  }
  return llt.solve(rhs);
}

Matrix covariance_factor(const Matrix& m) {
  require_symmetric(m, "covariance");
  if (m.rows() == 0) return m;
  Eigen::LLT<Matrix> llt(symmetrize(m));
  if (llt.info() == Eigen::Success && min_eigenvalue(m) > 1e-14) {
    return llt.matrixL();
  }
  return psd_sqrt(m);
}

}  // namespace imcomm
