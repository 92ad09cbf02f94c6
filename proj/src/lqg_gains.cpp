#include "imcomm/lqg_gains.hpp"

#include <sstream>

namespace imcomm {

namespace {

[[noreturn]] void invalid(const std::string& field, const std::string& why) {
  throw Error(ErrorCode::ValidationError, field + ": " + why);
}

void expect_shape(const Matrix& m, Eigen::Index rows, Eigen::Index cols,
                  const char* name) {
  if (m.rows() != rows || m.cols() != cols) {
    std::ostringstream os;
    os << "expected " << rows << "x" << cols << ", got " << m.rows() << "x" << m.cols();
    invalid(name, os.str());
  }
}

void expect_sym(const Matrix& m, const char* name, bool strictly_pd) {
  if (asymmetry(m) > kSymmetryTol * std::max(1.0, m.cwiseAbs().maxCoeff())) {
    invalid(name, "not symmetric");
  }
  if (m.rows() == 0) return;
  const double lo = min_eigenvalue(m);
  if (strictly_pd && lo <= 0.0) {
    std::ostringstream os;
    os << "not positive definite (min eigenvalue " << lo << ")";
    invalid(name, os.str());
  }
  if (!strictly_pd && lo < -kNegativeEigTol) {
    std::ostringstream os;
    os << "not positive semidefinite (min eigenvalue " << lo << ")";
    invalid(name, os.str());
  }
}

// Shared backward pass for an arbitrary (A, B, G).
GainSchedule riccati(const Matrix& a, const Matrix& b, const Matrix& g,
                     const Matrix& f, const Matrix& fn, int n) {
  GainSchedule s;
  s.Phi.assign(n + 1, Matrix());
  s.Dbar.assign(n + 1, Matrix());
  s.K.assign(n, Matrix());
  s.D.assign(n, Matrix());
  s.Abar.assign(n, Matrix());
  s.Phi[n] = fn;
  s.Dbar[n] = fn;
  for (int t = n - 1; t >= 0; --t) {
    const Matrix& phi = s.Phi[t + 1];
    const Matrix inner = symmetrize(g + b.transpose() * phi * b);
    Matrix rhs(b.cols(), 2 * a.cols());
    rhs << b.transpose() * phi * a, b.transpose() * s.Dbar[t + 1];
    const Matrix sol = spd_solve(inner, rhs);
    s.K[t] = sol.leftCols(a.cols());
    s.D[t] = sol.rightCols(a.cols());
    s.Abar[t] = a - b * s.K[t];
    s.Phi[t] = symmetrize(f + a.transpose() * phi * a -
                          a.transpose() * phi * b * s.K[t]);
    s.Dbar[t] = s.Abar[t].transpose() * s.Dbar[t + 1] + f;
  }
  return s;
}

}  // namespace

Matrix SystemModel::B() const {
  Matrix b(B1.rows(), B1.cols() + B2.cols());
  b << B1, B2;
  return b;
}

Matrix SystemModel::G() const {
  Matrix g = Matrix::Zero(d(), d());
  g.topLeftCorner(d1(), d1()) = G1;
  g.bottomRightCorner(d2(), d2()) = G2;
  return g;
}

bool is_controllable(const Matrix& a, const Matrix& b, double rel_tol) {
  const Eigen::Index d0 = a.rows();
  Matrix ctrb(d0, b.cols() * d0);
  Matrix block = b;
  for (Eigen::Index i = 0; i < d0; ++i) {
    ctrb.middleCols(i * b.cols(), b.cols()) = block;
    block = a * block;
  }
  return numerical_rank(ctrb, rel_tol) == d0;
}

void SystemModel::validate() const {
  const Eigen::Index n0 = A.rows();
  if (n0 == 0) invalid("A", "empty");
  expect_shape(A, n0, n0, "A");
  if (B1.rows() != n0 || B1.cols() == 0) invalid("B1", "must have d0 rows and at least one column");
  if (B2.rows() != n0) invalid("B2", "must have d0 rows");
  expect_shape(W, n0, n0, "W");
  expect_shape(F, n0, n0, "F");
  expect_shape(Fn, n0, n0, "Fn");
  expect_shape(Sigma0, n0, n0, "Sigma0");
  expect_shape(X0, n0, n0, "X0");
  expect_shape(G1, B1.cols(), B1.cols(), "G1");
  expect_shape(G2, B2.cols(), B2.cols(), "G2");
  expect_sym(W, "W", true);
  expect_sym(F, "F", false);
  expect_sym(Fn, "Fn", false);
  expect_sym(G1, "G1", false);
  expect_sym(G2, "G2", false);
  expect_sym(Sigma0, "Sigma0", true);
  expect_sym(X0, "X0", false);
  if (n < 1) invalid("horizon", "must be at least 1");
  if (!is_controllable(A, B())) invalid("A,B", "pair (A, [B1 B2]) is not controllable");
}

void split_gains(GainSchedule& s, int d1) {
  s.d1 = d1;
  s.K_l.clear();
  s.K_f.clear();
  s.D_l.clear();
  s.D_f.clear();
  for (std::size_t t = 0; t < s.K.size(); ++t) {
    const Eigen::Index d = s.K[t].rows();
    if (d1 < 0 || d1 > d || s.D[t].rows() != d) {
      throw Error(ErrorCode::DimensionMismatch, "d1 does not fit the gain rows");
    }
    s.K_l.push_back(s.K[t].topRows(d1));
    s.K_f.push_back(s.K[t].bottomRows(d - d1));
    s.D_l.push_back(s.D[t].topRows(d1));
    s.D_f.push_back(s.D[t].bottomRows(d - d1));
  }
}

GainSchedule backward_riccati(const SystemModel& model) {
  GainSchedule s = riccati(model.A, model.B(), model.G(), model.F, model.Fn, model.n);
  split_gains(s, model.d1());
  return s;
}

GainSchedule leader_only_gains(const SystemModel& model) {
  if (!is_controllable(model.A, model.B1)) {
    throw Error(ErrorCode::NotControllable, "(A, B1) is not controllable");
  }
  GainSchedule lo = riccati(model.A, model.B1, model.G1, model.F, model.Fn, model.n);
  const int d = model.d();
  for (int t = 0; t < model.n; ++t) {
    Matrix k = Matrix::Zero(d, model.d0());
    Matrix dd = Matrix::Zero(d, model.d0());
    k.topRows(model.d1()) = lo.K[t];
    dd.topRows(model.d1()) = lo.D[t];
    lo.K[t] = k;
    lo.D[t] = dd;
  }
  split_gains(lo, model.d1());
  return lo;
}

Vector excomm_inputs(const GainSchedule& s, int t, const Vector& x_t, const Vector& x_star) {
  if (t < 0 || t >= s.horizon()) throw Error(ErrorCode::IndexOutOfRange, "step outside horizon");
  if (x_t.size() != s.K[t].cols() || x_star.size() != s.D[t].cols()) {
    throw Error(ErrorCode::DimensionMismatch, "state size does not match gains");
  }
  return -s.K[t] * x_t + s.D[t] * x_star;
}

}  // namespace imcomm
