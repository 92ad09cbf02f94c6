#pragma once

// Test-only helpers: random instances, Monte Carlo comparators and an
// independent brute-force minimizer for the tracking problem.

#include <cmath>
#include <optional>
#include <random>
#include <vector>

#include "imcomm/config.hpp"

namespace oracle {

using imcomm::Matrix;
using imcomm::Vector;

/// Code of the imcomm::Error thrown by f, if any.
template <class F>
std::optional<imcomm::ErrorCode> error_of(F&& f) {
  try {
    f();
  } catch (const imcomm::Error& e) {
    return e.code();
  }
  return std::nullopt;
}

struct Rng {
  std::mt19937_64 eng;
  explicit Rng(std::uint64_t seed) : eng(seed) {}
  double normal() { return std::normal_distribution<double>(0.0, 1.0)(eng); }
  double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(eng); }
  int integer(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(eng); }
  Matrix gaussian(Eigen::Index r, Eigen::Index c) {
    Matrix m(r, c);
    for (Eigen::Index i = 0; i < r; ++i)
      for (Eigen::Index j = 0; j < c; ++j) m(i, j) = normal();
    return m;
  }
  /// R R^T / d + floor I
  Matrix pd(Eigen::Index d, double floor = 0.2) {
    const Matrix r = gaussian(d, d);
    return imcomm::symmetrize(r * r.transpose() / static_cast<double>(d) +
                              floor * Matrix::Identity(d, d));
  }
  Vector uniform_vec(Eigen::Index d, double lo, double hi) {
    Vector v(d);
    for (Eigen::Index i = 0; i < d; ++i) v(i) = uniform(lo, hi);
    return v;
  }
};

/// Random model with square, full-rank leader input (fully actuated).
inline imcomm::SystemModel random_model(Rng& rng, int d0, int d1, int d2, int n) {
  imcomm::SystemModel m;
  m.A = Matrix::Identity(d0, d0) + 0.4 * rng.gaussian(d0, d0);
  m.B1 = rng.gaussian(d0, d1);
  m.B2 = rng.gaussian(d0, d2);
  m.W = 0.1 * rng.pd(d0);
  m.F = rng.pd(d0);
  m.Fn = 2.0 * rng.pd(d0);
  m.G1 = rng.pd(d1);
  m.G2 = d2 > 0 ? rng.pd(d2) : Matrix(0, 0);
  m.Sigma0 = rng.pd(d0, 0.5);
  m.X0 = 0.1 * rng.pd(d0);
  m.n = n;
  return m;
}

/// Entrywise comparison of a sample covariance (from N zero-mean draws)
/// against the truth, using the Gaussian standard error of each entry.
/// Returns the worst |diff| / SE.
inline double worst_cov_z(const Matrix& sample, const Matrix& truth, double n) {
  double worst = 0.0;
  for (Eigen::Index i = 0; i < truth.rows(); ++i) {
    for (Eigen::Index j = i; j < truth.cols(); ++j) {
      const double var = truth(i, i) * truth(j, j) + truth(i, j) * truth(i, j);
      const double se = std::sqrt(var / n);
      if (se <= 0.0) continue;
      worst = std::max(worst, std::abs(sample(i, j) - truth(i, j)) / se);
    }
  }
  return worst;
}

/// Two-sided z threshold keeping the family-wise false alarm rate at 1%
/// over m simultaneous comparisons.
inline double family_z(int m) { return imcomm::normal_quantile(1.0 - 0.005 / m); }

/// Unique entries of a d x d symmetric matrix.
inline int unique_entries(Eigen::Index d) { return static_cast<int>(d * (d + 1) / 2); }

// Exact expected tracking cost of an affine policy u_t = -K_t x_t + c_t for
// a fixed target, by propagating the mean and covariance of x_t.
struct AffinePolicy {
  std::vector<Matrix> K;
  std::vector<Vector> c;
};

inline double affine_cost(const imcomm::SystemModel& m, const Vector& x_star,
                          const AffinePolicy& p) {
  const Matrix b = m.B();
  const Matrix g = m.G();
  Vector mean = Vector::Zero(m.d0());
  Matrix cov = m.X0;
  double total = 0.0;
  for (int t = 0; t < m.n; ++t) {
    const Vector dz = mean - x_star;
    const Vector mu = -p.K[t] * mean + p.c[t];
    total += dz.dot(m.F * dz) + (m.F * cov).trace();
    total += mu.dot(g * mu) + (g * p.K[t] * cov * p.K[t].transpose()).trace();
    const Matrix acl = m.A - b * p.K[t];
    mean = m.A * mean + b * mu;
    cov = acl * cov * acl.transpose() + m.W;
  }
  const Vector dz = mean - x_star;
  return total + dz.dot(m.Fn * dz) + (m.Fn * cov).trace();
}

/// Block-coordinate minimization over (K_t, c_t). The cost is an exact
/// quadratic in each block when the others are held fixed, so each block
/// update is one Newton step built from exact function values.
inline double brute_force_min(const imcomm::SystemModel& m, const Vector& x_star,
                              AffinePolicy* argmin = nullptr) {
  const int d = m.d();
  const int d0 = m.d0();
  AffinePolicy p;
  for (int t = 0; t < m.n; ++t) {
    p.K.push_back(Matrix::Zero(d, d0));
    p.c.push_back(Vector::Zero(d));
  }
  const int np = d * d0 + d;
  auto get = [&](int t, int i) -> double& {
    if (i < d * d0) return p.K[t](i % d, i / d);
    return p.c[t](i - d * d0);
  };
  double best = affine_cost(m, x_star, p);
  for (int sweep = 0; sweep < 5000; ++sweep) {
    const double before = best;
    for (int t = m.n - 1; t >= 0; --t) {
      std::vector<double> base(np);
      for (int i = 0; i < np; ++i) base[i] = get(t, i);
      auto eval = [&](int i, double di, int j, double dj) {
        if (i >= 0) get(t, i) += di;
        if (j >= 0) get(t, j) += dj;
        const double v = affine_cost(m, x_star, p);
        if (i >= 0) get(t, i) = base[i];
        if (j >= 0) get(t, j) = base[j];
        return v;
      };
      const double f0 = eval(-1, 0, -1, 0);
      Vector grad(np), fp(np), fm(np);
      Matrix hess(np, np);
      for (int i = 0; i < np; ++i) {
        fp(i) = eval(i, 1.0, -1, 0);
        fm(i) = eval(i, -1.0, -1, 0);
        grad(i) = 0.5 * (fp(i) - fm(i));
        hess(i, i) = fp(i) + fm(i) - 2.0 * f0;
      }
      for (int i = 0; i < np; ++i) {
        for (int j = i + 1; j < np; ++j) {
          hess(i, j) = hess(j, i) = eval(i, 1.0, j, 1.0) - fp(i) - fp(j) + f0;
        }
      }
      const Vector step = hess.ldlt().solve(grad);
      for (int i = 0; i < np; ++i) get(t, i) = base[i] - step(i);
      const double now = affine_cost(m, x_star, p);
      if (now > f0) {
        for (int i = 0; i < np; ++i) get(t, i) = base[i];
      } else {
        best = now;
      }
    }
    if (before - best <= 1e-15 * std::abs(best)) break;
  }
  if (argmin) *argmin = p;
  return best;
}

/// The Ex-Comm policy written as an affine policy.
inline AffinePolicy excomm_policy(const imcomm::GainSchedule& g, const Vector& x_star) {
  AffinePolicy p;
  for (int t = 0; t < g.horizon(); ++t) {
    p.K.push_back(g.K[t]);
    p.c.push_back(g.D[t] * x_star);
  }
  return p;
}

}  // namespace oracle
