#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"
#include "oracles.hpp"

using namespace imcomm;
using oracle::error_of;

namespace {

Matrix col(std::initializer_list<double> v) {
  Vector out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) out(i++) = x;
  return out;
}

// B1 = (1, 0)^T with W = I: one virtual channel, period two.
ChannelSetup scalar_ua() { return make_setup(col({1.0, 0.0}), Matrix::Identity(2, 2)); }

}  // namespace

TEST_CASE("choose_projection") {
  CHECK((choose_projection(Matrix::Identity(4, 4)) - Matrix::Identity(4, 4)).norm() == 0.0);
  const SystemModel m = preset_model("fully-actuated-vi-a");
  const Matrix q = choose_projection(m.B1);
  CHECK((q - Matrix::Identity(4, 4)).norm() == 0.0);
  CHECK(numerical_rank(m.B1 * q) == 4);

  Matrix b(2, 3);
  b << 1, 0, 1, 0, 1, 1;
  const Matrix qw = choose_projection(b);
  CHECK((qw - b.transpose()).norm() == 0.0);
  CHECK(min_eigenvalue(symmetrize(b * qw)) > 0.0);
}

TEST_CASE("fully actuated encode/decode hand cases") {
  const ChannelSetup id = make_setup(Matrix::Identity(2, 2), Matrix::Identity(2, 2));
  const Vector lam = Vector::Ones(2);
  const Matrix sigma = Matrix::Identity(2, 2);
  CHECK(encode_fa(Vector::Zero(2), sigma, lam, id).norm() == 0.0);
  CHECK(decode_fa(Vector::Zero(2), sigma, lam, id).norm() == 0.0);

  // Sigma = S with Q = I: the encoder is the identity
  const Vector l2{{2.0, 0.5}};
  const Matrix s = id.eig.U * l2.asDiagonal() * id.eig.U.transpose();
  const Vector e{{0.3, -1.2}};
  CHECK((encode_fa(e, s, l2, id) - e).norm() < 1e-12);

  const Vector ehat = decode_fa(Vector{{2.0, 0.0}}, sigma, lam, id);
  CHECK(ehat(0) == doctest::Approx(1.0));
  CHECK(std::abs(ehat(1)) < 1e-14);

  CHECK((cov_update_fa(sigma, Vector::Zero(2), id) - sigma).norm() < 1e-14);
  CHECK((cov_update_fa(sigma, lam, id) - 0.5 * sigma).norm() < 1e-14);
}

TEST_CASE("channel_output cancels the follower-computable terms") {
  const SystemModel m = preset_model("fully-actuated-vi-a");
  const GainSchedule g = backward_riccati(m);
  const Vector x{{0.2, -0.1, 0.4, 1.0}};
  const Vector xh{{0.5, 0.5, -0.5, 0.0}};
  const Vector x_next = g.Abar[0] * x + m.B() * g.D[0] * xh;
  CHECK(channel_output(x_next, x, g.Abar[0], m.B(), g.D[0], xh).norm() < 1e-12);

  SystemModel u = m;
  u.B1 = Matrix::Identity(4, 4);
  const Vector sig = col({1, 0, 0, 0});
  const Vector x2 = g.Abar[0] * x + u.B1 * sig;
  CHECK((channel_output(x2, x, g.Abar[0], m.B(), g.D[0], Vector::Zero(4)) - sig).norm() < 1e-12);
}

TEST_CASE("Monte Carlo: signal covariance, error covariance, orthogonality, MMSE") {
  const SystemModel m = preset_model("fully-actuated-vi-a");
  const ChannelSetup s = make_setup(m.B1, m.W);
  const Vector lam = heuristic_schedule(0.88, 4, 4).Lambda[3];
  const Matrix sigma = m.Sigma0;
  const ChannelStep step = channel_step(s, sigma, lam, 3);
  const Matrix ls = covariance_factor(sigma), lw = covariance_factor(m.W);
  oracle::Rng rng(21);
  const int n = 50000;
  std::vector<Vector> es, ys;
  Matrix cov_s = Matrix::Zero(4, 4), cov_next = Matrix::Zero(4, 4), cross = Matrix::Zero(4, 4);
  for (int i = 0; i < n; ++i) {
    const Vector e = ls * rng.gaussian(4, 1);
    const Vector sig = encode_fa(e, sigma, lam, s);
    const Vector y = m.B1 * sig + lw * rng.gaussian(4, 1);
    const Vector eh = decode_fa(y, sigma, lam, s);
    const Vector next = e - eh;
    cov_s += sig * sig.transpose();
    cov_next += next * next.transpose();
    cross += eh * next.transpose();
    es.push_back(e);
    ys.push_back(y);
  }
  cov_s /= n;
  cov_next /= n;
  cross /= n;
  const Matrix ssq = s.eig.U * lam.asDiagonal() * s.eig.U.transpose();
  const double z = oracle::family_z(2 * oracle::unique_entries(4) + 16);
  CHECK(oracle::worst_cov_z(cov_s, s.Q * ssq * s.Q.transpose(), n) <= z);
  const Matrix truth = cov_update_fa(sigma, lam, s);
  CHECK(oracle::worst_cov_z(cov_next, truth, n) <= z);
  // E[e_hat e_next^T] = 0: SE of a cross moment of independent parts
  const Matrix eh_cov = sigma - truth;
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j)
      CHECK(std::abs(cross(i, j)) <= z * std::sqrt(eh_cov(i, i) * truth(j, j) / n));

  // MMSE: perturbing the decoder only adds error. A 1e-2 perturbation moves
  // the MSE by ~1e-5, below what 50k draws resolve, so use exact moments of
  // the joint law of (e, y) built independently from the encoder map.
  const Matrix cov_ey = sigma * step.E.transpose() * m.B1.transpose();
  const Matrix cov_yy = m.B1 * step.E * sigma * step.E.transpose() * m.B1.transpose() + m.W;
  auto mse = [&](const Matrix& dec) {
    return (sigma - 2.0 * dec * cov_ey.transpose() + dec * cov_yy * dec.transpose()).trace();
  };
  const double base = mse(step.decoder);
  CHECK(base == doctest::Approx(truth.trace()).epsilon(1e-10));
  for (int trial = 0; trial < 10; ++trial) {
    Matrix dl = rng.gaussian(4, 4);
    dl *= 1e-2 / dl.norm();
    CHECK(base < mse(step.decoder + dl));
  }
  // the empirical MSE agrees with the exact one
  double emp = 0.0;
  for (int i = 0; i < n; ++i) emp += (es[i] - step.decoder * ys[i]).squaredNorm();
  CHECK(emp / n == doctest::Approx(base).epsilon(0.02));
}

TEST_CASE("Sigma floor, zero entries and partial rank") {
  const ChannelSetup s = make_setup(Matrix::Identity(2, 2), Matrix::Identity(2, 2));
  CHECK(error_of([&] { cov_update_fa(Matrix::Zero(2, 2), Vector::Ones(2), s); }) ==
        ErrorCode::SigmaNearSingular);
  CHECK(error_of([&] { cov_update_fa(Matrix::Identity(2, 2), -Vector::Ones(2), s); }) ==
        ErrorCode::InvalidArgument);
  CHECK(error_of([&] { cov_update_fa(Matrix::Identity(2, 2), Vector::Ones(3), s); }) ==
        ErrorCode::DimensionMismatch);
  // a zero entry just stops learning in that direction
  const Matrix half = cov_update_fa(Matrix::Identity(2, 2), Vector{{1.0, 0.0}}, s);
  CHECK(min_eigenvalue(symmetrize(Matrix::Identity(2, 2) - half)) > -1e-12);
  CHECK(half.trace() == doctest::Approx(1.5));
  // rank-deficient Sigma: the dead direction is skipped, the rest still learns
  const Matrix r1 = col({1.0, 1.0}) * col({1.0, 1.0}).transpose();
  const Matrix next = cov_update_fa(r1, Vector::Ones(2), s);
  CHECK(min_eigenvalue(symmetrize(r1 - next)) > -1e-12);
  CHECK(min_eigenvalue(next) > -1e-12);
  CHECK(next.trace() < r1.trace());
}

TEST_CASE("ua_setup") {
  const ChannelSetup s = scalar_ua();
  CHECK(s.mode == ActuationMode::UnderActuated);
  CHECK(s.r == 1);
  CHECK(s.tau == 2);
  CHECK(s.svd.psi(0) == doctest::Approx(1.0));
  CHECK(s.Wbar1(0, 0) == doctest::Approx(1.0));
  CHECK(s.eig1.H(0) == doctest::Approx(1.0));
  CHECK(s.pi == doctest::Approx(1.0));

  const SystemModel m = preset_model("under-actuated-vi-b");
  const ChannelSetup p = make_setup(m.B1, m.W);
  CHECK(p.r == 2);
  CHECK(p.tau == 2);
  CHECK((p.svd.reconstruct() - m.B1).cwiseAbs().maxCoeff() < 1e-10);
  CHECK(min_eigenvalue(p.Wbar1) > 0.0);

  Matrix b(3, 2);
  b << 1, 0, 0, 1, 0, 0;
  CHECK(error_of([&] { ua_setup(b, Matrix::Identity(3, 3)); }) == ErrorCode::NonIntegerPeriod);
  CHECK(error_of([&] { ua_setup(Matrix::Identity(2, 2), Matrix::Identity(2, 2)); }) ==
        ErrorCode::InvalidArgument);
  CHECK(error_of([&] { ua_setup(col({1, 0}), Matrix::Identity(2, 2), {0, 0}); }) ==
        ErrorCode::InvalidArgument);
  const ChannelSetup rev = ua_setup(col({1, 0}), Matrix::Identity(2, 2), {1, 0});
  CHECK(rev.projection_at(0) == 1);
  CHECK(rev.projection_at(3) == 0);
}

TEST_CASE("projection_matrix") {
  CHECK((projection_matrix(0, 1, 2) - col({1, 0}).transpose()).norm() == 0.0);
  CHECK((projection_matrix(1, 1, 2) - col({0, 1}).transpose()).norm() == 0.0);
  Matrix sum = Matrix::Zero(6, 6);
  for (int k = 0; k < 3; ++k) {
    const Matrix p = projection_matrix(k, 2, 6);
    CHECK((p * p.transpose() - Matrix::Identity(2, 2)).norm() == 0.0);
    sum += p.transpose() * p;
  }
  CHECK((sum - Matrix::Identity(6, 6)).norm() == 0.0);
  CHECK(error_of([] { projection_matrix(3, 2, 6); }) == ErrorCode::IndexOutOfRange);
  CHECK(error_of([] { projection_matrix(-1, 2, 6); }) == ErrorCode::IndexOutOfRange);
}

TEST_CASE("under-actuated hand cases") {
  const ChannelSetup s = scalar_ua();
  const Matrix id = Matrix::Identity(2, 2);
  const Vector one = Vector::Ones(1);
  CHECK(encode_ua(Vector::Zero(2), id, one, 0, s).norm() == 0.0);
  const Vector sig = encode_ua(Vector{{3.0, 5.0}}, id, one, 0, s);
  REQUIRE(sig.size() == 1);
  CHECK(sig(0) == doctest::Approx(3.0));

  CHECK(decode_ua(Vector::Zero(2), id, one, 0, s).norm() == 0.0);
  const Vector eh = decode_ua(Vector{{2.0, 0.0}}, id, one, 0, s);
  CHECK(eh(0) == doctest::Approx(1.0));
  CHECK(std::abs(eh(1)) < 1e-14);

  CHECK((cov_update_ua(id, Vector::Zero(1), 0, s) - id).norm() < 1e-14);
  const Matrix s1 = cov_update_ua(id, one, 0, s);
  CHECK((s1 - Vector{{0.5, 1.0}}.asDiagonal().toDenseMatrix()).norm() < 1e-12);
  const Matrix s2 = cov_update_ua(s1, one, 1, s);
  CHECK((s2 - 0.5 * id).norm() < 1e-12);
}

TEST_CASE("decode_ua equals the conditional Gaussian mean") {
  const SystemModel m = preset_model("under-actuated-vi-b");
  const ChannelSetup s = make_setup(m.B1, m.W);
  oracle::Rng rng(22);
  const Matrix sigma = rng.pd(4, 0.5);
  const Vector lam{{0.7, 1.9}};
  for (int k = 0; k < 2; ++k) {
    const int r = s.r;
    const Matrix root = psd_sqrt(sigma);
    const Matrix ssq = psd_sqrt(s.eig1.U * lam.asDiagonal() * s.eig1.U.transpose());
    const Matrix enc = ssq * projection_matrix(k, r, 4) * root.inverse();  // s~ = enc e
    const Matrix psi = s.svd.Psi1();
    const Matrix cov_ey = sigma * enc.transpose() * psi;
    const Matrix cov_y = psi * enc * sigma * enc.transpose() * psi + s.Wbar1;
    for (int trial = 0; trial < 5; ++trial) {
      const Vector y = rng.gaussian(4, 1);
      const Vector yr = (s.svd.Gamma0.transpose() * y).head(r);
      const Vector expect = cov_ey * cov_y.ldlt().solve(yr);
      REQUIRE((decode_ua(y, sigma, lam, k, s) - expect).norm() < 1e-10 * (1.0 + expect.norm()));
    }
  }
}

TEST_CASE("under-actuated Monte Carlo: signal covariance and error covariance") {
  const SystemModel m = preset_model("under-actuated-vi-b");
  const ChannelSetup s = make_setup(m.B1, m.W);
  const Vector lam{{1.0, 0.6}};
  const Matrix sigma = m.Sigma0;
  const Matrix ls = covariance_factor(sigma), lw = covariance_factor(m.W);
  oracle::Rng rng(23);
  const int n = 50000;
  for (int k = 0; k < 2; ++k) {
    Matrix cov_st = Matrix::Zero(2, 2), cov_next = Matrix::Zero(4, 4);
    for (int i = 0; i < n; ++i) {
      const Vector e = ls * rng.gaussian(4, 1);
      const Vector sig = encode_ua(e, sigma, lam, k, s);
      const Vector st = (s.svd.Gamma1.transpose() * sig).head(s.r);
      const Vector y = m.B1 * sig + lw * rng.gaussian(4, 1);
      const Vector next = e - decode_ua(y, sigma, lam, k, s);
      cov_st += st * st.transpose();
      cov_next += next * next.transpose();
    }
    const Matrix sm = s.eig1.U * lam.asDiagonal() * s.eig1.U.transpose();
    const double z = oracle::family_z(2 * (oracle::unique_entries(2) + oracle::unique_entries(4)));
    CHECK(oracle::worst_cov_z(cov_st / n, sm, n) <= z);
    CHECK(oracle::worst_cov_z(cov_next / n, cov_update_ua(sigma, lam, k, s), n) <= z);
  }
}

TEST_CASE("contraction properties on small random instances") {
  oracle::Rng rng(24);
  for (int inst = 0; inst < 20; ++inst) {
    const int d0 = rng.integer(1, 4);
    Matrix b1 = rng.gaussian(d0, d0);
    const Matrix w = rng.pd(d0, 0.5);
    b1 *= std::sqrt(5.0 / make_setup(b1, w).eig.H.maxCoeff());
    const ChannelSetup s = make_setup(b1, w);
    Matrix sigma = rng.pd(d0, 0.5);
    const double tr0 = sigma.trace();
    for (int t = 0; t < 10; ++t) {
      const Matrix next = cov_update_fa(sigma, rng.uniform_vec(d0, 0.1, 0.5), s);
      REQUIRE(min_eigenvalue(symmetrize(sigma - next)) > 0.0);
      REQUIRE(next.trace() <= tr0 / std::pow(1.0 + 0.1 * s.psi, t + 1) * (1.0 + 1e-12));
      sigma = next;
    }
  }
}
