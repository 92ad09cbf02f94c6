#include "imcomm/power_opt.hpp"

#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

namespace imcomm {

namespace {

Matrix tilde_i(const SystemModel& model) {
  Matrix it = Matrix::Zero(model.d(), model.d1());
  it.topRows(model.d1()).setIdentity();
  return it;
}

double trace_prod(const Matrix& a, const Matrix& b) { return (a.array() * b.transpose().array()).sum(); }

struct StepDetail {
  MdpState next;
  Matrix E;  // encoder, d1 x d0
  double stage = 0.0;
};

// Shared by the FA and UA transitions; k < 0 means "pick from t".
StepDetail step_detail(const MdpState& s, const Vector& lambda, int k, const GainSchedule& gains,
                       const ChannelSetup& setup, const SystemModel& model, int t) {
  if (t < 0 || t >= gains.horizon()) throw Error(ErrorCode::IndexOutOfRange, "step outside horizon");
  if (k < 0) k = setup.projection_at(t);
  ChannelStep ch;
  if (setup.mode == ActuationMode::FullyActuated) {
    ch = channel_step(setup, s.Sigma, lambda, t);
  } else {
    ch = channel_step_ua(setup, s.Sigma, lambda, k);
  }
  const Matrix b = model.B();
  const Matrix g = model.G();
  const Matrix& abar = gains.Abar[t];
  const Matrix& kt = gains.K[t];
  const Matrix& dt = gains.D[t];
  const Matrix bd = b * dt;
  const Matrix c = model.B1 * ch.E - bd;
  const Matrix omega = s.L * s.Sigma;

  StepDetail out;
  out.E = ch.E;
  Matrix z = abar * s.Z * abar.transpose() + abar * omega * c.transpose() +
             c * omega.transpose() * abar.transpose() + c * s.Sigma * c.transpose() + model.W;
  out.next.Z = symmetrize(z);
  out.next.Sigma = ch.Sigma_next;
  out.next.L = abar * s.L - bd;
  if (setup.mode == ActuationMode::UnderActuated &&
      setup.Wbar3.size() > 0 && setup.Wbar3.cwiseAbs().maxCoeff() > 0.0) {
    const int r = setup.r;
    const Matrix& u1 = setup.eig1.U;
    const Matrix ss = u1 * lambda.cwiseSqrt().asDiagonal() * u1.transpose();
    const Matrix psi1 = setup.svd.Psi1();
    Matrix cw = Matrix::Zero(setup.d0, setup.d0);
    cw.bottomRows(setup.d0 - r) = setup.Wbar3.transpose() *
                                  spd_solve(setup.Wbar1, psi1 * ss * projection_matrix(k, r, setup.d0));
    out.next.L -= setup.svd.Gamma0 * cw * ch.whiten;
  }

  // l_t with the Lambda-independent constants dropped
  const Matrix ie = tilde_i(model) * ch.E;
  const Matrix dkl = dt + kt * s.L;
  out.stage = trace_prod(model.F + kt.transpose() * g * kt, s.Z) +
              trace_prod(model.G1, ch.E * s.Sigma * ch.E.transpose()) +
              trace_prod(dt.transpose() * g * dt, s.Sigma) +
              2.0 * trace_prod(dt.transpose() * g * kt * s.L, s.Sigma) -
              2.0 * trace_prod(dkl.transpose() * g * ie, s.Sigma);
  return out;
}

}  // namespace

PowerSchedule heuristic_schedule(double theta, int n, int dim) {
  if (!(theta > 0.0 && theta <= 1.0)) {
    std::ostringstream os;
    os << "theta must lie in (0, 1], got " << theta;
    throw Error(ErrorCode::InvalidTheta, os.str());
  }
  if (n < 0 || dim < 1) throw Error(ErrorCode::InvalidArgument, "bad schedule shape");
  PowerSchedule s;
  s.mode = PowerMode::Heuristic;
  s.theta = theta;
  for (int t = 0; t < n; ++t) s.Lambda.push_back(Vector::Constant(dim, std::pow(theta, t)));
  return s;
}

MdpState mdp_initial(const SystemModel& model) {
  return {symmetrize(model.X0 + model.Sigma0), model.Sigma0,
          -Matrix::Identity(model.d0(), model.d0())};
}

MdpState mdp_step(const MdpState& state, const Vector& lambda, const GainSchedule& gains,
                  const ChannelSetup& setup, const SystemModel& model, int t) {
  return step_detail(state, lambda, -1, gains, setup, model, t).next;
}

MdpState mdp_step_fa(const MdpState& state, const Vector& lambda, const GainSchedule& gains,
                     const ChannelSetup& setup, const SystemModel& model, int t) {
  if (setup.mode != ActuationMode::FullyActuated) {
    throw Error(ErrorCode::InvalidArgument, "fully actuated step on an under-actuated setup");
  }
  return step_detail(state, lambda, -1, gains, setup, model, t).next;
}

MdpState mdp_step_ua(const MdpState& state, const Vector& lambda, int k,
                     const GainSchedule& gains, const ChannelSetup& setup,
                     const SystemModel& model, int t) {
  if (setup.mode != ActuationMode::UnderActuated) {
    throw Error(ErrorCode::InvalidArgument, "under-actuated step on a fully actuated setup");
  }
  if (k < 0 || k >= setup.tau) throw Error(ErrorCode::IndexOutOfRange, "projection index");
  return step_detail(state, lambda, k, gains, setup, model, t).next;
}

double stage_cost(const MdpState& state, const Vector& lambda, const GainSchedule& gains,
                  const ChannelSetup& setup, const SystemModel& model, int t) {
  return step_detail(state, lambda, -1, gains, setup, model, t).stage;
}

double stage_cost_fa(const MdpState& state, const Vector& lambda, const GainSchedule& gains,
                     const ChannelSetup& setup, const SystemModel& model, int t) {
  if (setup.mode != ActuationMode::FullyActuated) {
    throw Error(ErrorCode::InvalidArgument, "fully actuated cost on an under-actuated setup");
  }
  return stage_cost(state, lambda, gains, setup, model, t);
}

double terminal_cost(const MdpState& state, const SystemModel& model) {
  return trace_prod(state.Z, model.Fn);
}

double MdpTrajectory::mdp_cost() const {
  return std::accumulate(stage.begin(), stage.end(), 0.0) + terminal;
}

double MdpTrajectory::expected_cost() const {
  return mdp_cost() + std::accumulate(reconstructed.begin(), reconstructed.end(), 0.0);
}

MdpTrajectory mdp_rollout(const PowerSchedule& schedule, const GainSchedule& gains,
                          const ChannelSetup& setup, const SystemModel& model) {
  const int n = gains.horizon();
  if (schedule.horizon() != n) {
    throw Error(ErrorCode::HorizonMismatch, "power schedule and gains differ in horizon");
  }
  const Matrix b = model.B();
  const Matrix g = model.G();
  const Matrix it = tilde_i(model);
  const Matrix eye = Matrix::Identity(model.d0(), model.d0());
  const Matrix& s0 = model.Sigma0;

  MdpTrajectory tr;
  tr.states.push_back(mdp_initial(model));
  // z_t = zeta_t + Gam x_*, P = Cov(zeta_t, x_*); Cov(e_t, x_*) = Sigma_t.
  Matrix gam = Matrix::Zero(model.d0(), model.d0());
  Matrix p = -s0;
  for (int t = 0; t < n; ++t) {
    const MdpState& s = tr.states.back();
    StepDetail st = step_detail(s, schedule.Lambda[t], -1, gains, setup, model, t);
    const Matrix& kt = gains.K[t];
    const Matrix& dt = gains.D[t];
    const Matrix j = dt - kt - kt * gam;
    const Matrix ied = it * st.E - dt;
    double extra = 2.0 * trace_prod(model.F * gam, p.transpose()) +
                   trace_prod(gam.transpose() * model.F * gam, s0) +
                   trace_prod(j.transpose() * g * j, s0) -
                   2.0 * trace_prod(kt.transpose() * g * j, p.transpose()) +
                   2.0 * trace_prod(j.transpose() * g * ied, s.Sigma);
    tr.reconstructed.push_back(extra);
    tr.stage.push_back(st.stage);
    p = gains.Abar[t] * p + (model.B1 * st.E - b * dt) * s.Sigma;
    gam = gains.Abar[t] * gam + gains.Abar[t] + b * dt - eye;
    tr.states.push_back(std::move(st.next));
  }
  tr.terminal = terminal_cost(tr.states.back(), model);
  tr.reconstructed.push_back(2.0 * trace_prod(model.Fn * gam, p.transpose()) +
                             trace_prod(gam.transpose() * model.Fn * gam, s0));
  return tr;
}

double mdp_cost(const PowerSchedule& schedule, const GainSchedule& gains,
                const ChannelSetup& setup, const SystemModel& model) {
  const int n = gains.horizon();
  if (schedule.horizon() != n) {
    throw Error(ErrorCode::HorizonMismatch, "power schedule and gains differ in horizon");
  }
  MdpState s = mdp_initial(model);
  double total = 0.0;
  for (int t = 0; t < n; ++t) {
    StepDetail st = step_detail(s, schedule.Lambda[t], -1, gains, setup, model, t);
    total += st.stage;
    s = std::move(st.next);
  }
  return total + terminal_cost(s, model);
}

double ua_schedule_cost(const PowerSchedule& schedule, const GainSchedule& gains,
                        const ChannelSetup& setup, const SystemModel& model) {
  if (setup.mode != ActuationMode::UnderActuated) {
    throw Error(ErrorCode::InvalidArgument, "under-actuated cost on a fully actuated setup");
  }
  return mdp_cost(schedule, gains, setup, model);
}

std::vector<Matrix> l_sequence(const GainSchedule& gains, const SystemModel& model) {
  const Matrix b = model.B();
  std::vector<Matrix> l{-Matrix::Identity(model.d0(), model.d0())};
  for (int t = 0; t < gains.horizon(); ++t) l.push_back(gains.Abar[t] * l.back() - b * gains.D[t]);
  return l;
}

std::vector<Matrix> costate_Z(const GainSchedule& gains, const SystemModel& model) {
  const int n = gains.horizon();
  const Matrix g = model.G();
  std::vector<Matrix> th(n + 1);
  th[n] = model.Fn;
  for (int t = n - 1; t >= 0; --t) {
    th[t] = symmetrize(model.F + gains.K[t].transpose() * g * gains.K[t] +
                       gains.Abar[t].transpose() * th[t + 1] * gains.Abar[t]);
  }
  return th;
}

namespace {

// Pieces shared by the Hamiltonian, its Lambda gradient and the Sigma costate.
struct FaTerms {
  Matrix R;       // Sigma^1/2
  Matrix Lnext;   // L_{t+1}
  Matrix dkl;     // D_t + K_t L_t
  Matrix giq;     // G I~ Q
  Matrix ssqrt;   // S^1/2
  Matrix V;       // U (I + Lambda H)^-1 U^T
};

FaTerms fa_terms(const Matrix& sigma, const Matrix& l_t, const Vector& lambda,
                 const GainSchedule& gains, const ChannelSetup& setup,
                 const SystemModel& model, int t) {
  if (setup.mode != ActuationMode::FullyActuated) {
    throw Error(ErrorCode::InvalidArgument, "fully actuated evaluator on an under-actuated setup");
  }
  FaTerms f;
  const double lo = min_eigenvalue(sigma);
  if (lo < kSigmaFloor) throw Error(ErrorCode::SigmaNearSingular, "Sigma is numerically singular");
  f.R = pd_sqrt_pair(sigma, kSigmaFloor).sqrt;
  f.Lnext = gains.Abar[t] * l_t - model.B() * gains.D[t];
  f.dkl = gains.D[t] + gains.K[t] * l_t;
  f.giq = model.G() * tilde_i(model) * setup.Q;
  const Matrix& u = setup.eig.U;
  f.ssqrt = u * lambda.cwiseSqrt().asDiagonal() * u.transpose();
  const Vector v = (1.0 + lambda.array() * setup.eig.H.array()).inverse().matrix();
  f.V = u * v.asDiagonal() * u.transpose();
  return f;
}

}  // namespace

SigmaCostate theta_sigma_step(const Matrix& sigma, const Matrix& l_t, const Vector& lambda,
                              const Matrix& theta_sigma_next, const Matrix& theta_z_next,
                              const GainSchedule& gains, const ChannelSetup& setup,
                              const SystemModel& model, int t) {
  const FaTerms f = fa_terms(sigma, l_t, lambda, gains, setup, model, t);
  const Matrix g = model.G();
  const Matrix& dt = gains.D[t];
  const Matrix& kt = gains.K[t];
  const Matrix bd = model.B() * dt;
  const Matrix& th = theta_z_next;

  SigmaCostate out;
  out.Theta1 = solve_sylvester_lyapunov(
      f.R, symmetrize(theta_sigma_next * f.R * f.V + f.V * f.R * theta_sigma_next));
  const Matrix c2 = f.Lnext.transpose() * th * setup.Q1 * f.ssqrt;
  out.Theta2 = solve_sylvester_lyapunov(f.R, symmetrize(c2));
  const Matrix c3 = f.dkl.transpose() * f.giq * f.ssqrt;
  out.Theta3 = solve_sylvester_lyapunov(f.R, symmetrize(c3));

  const Matrix dgkl = dt.transpose() * g * kt * l_t;
  const Matrix cross = bd.transpose() * th * gains.Abar[t] * l_t;
  out.theta = dt.transpose() * g * dt + dgkl + dgkl.transpose() - cross - cross.transpose() +
              bd.transpose() * th * bd + out.Theta1 + 2.0 * out.Theta2 - 2.0 * out.Theta3;
  out.theta = symmetrize(out.theta);
  return out;
}

double hamiltonian_fa(const Matrix& z, const Matrix& sigma, const Matrix& l_t,
                      const Vector& lambda, const Matrix& theta_z_next,
                      const Matrix& theta_sigma_next, const GainSchedule& gains,
                      const ChannelSetup& setup, const SystemModel& model, int t) {
  const MdpState s{z, sigma, l_t};
  const StepDetail st = step_detail(s, lambda, -1, gains, setup, model, t);
  return st.stage + trace_prod(st.next.Z, theta_z_next.transpose()) +
         trace_prod(st.next.Sigma, theta_sigma_next.transpose());
}

double hamiltonian_fa_expanded(const Matrix& z, const Matrix& sigma, const Matrix& l_t,
                               const Vector& lambda, const Matrix& theta_z_next,
                               const Matrix& theta_sigma_next, const GainSchedule& gains,
                               const ChannelSetup& setup, const SystemModel& model, int t) {
  const FaTerms f = fa_terms(sigma, l_t, lambda, gains, setup, model, t);
  const Matrix g = model.G();
  const Matrix& kt = gains.K[t];
  const Matrix& dt = gains.D[t];
  const Matrix& abar = gains.Abar[t];
  const Matrix& u = setup.eig.U;
  const Matrix& th = theta_z_next;
  const Matrix bd = model.B() * dt;
  const Matrix lam_half = lambda.cwiseSqrt().asDiagonal();
  const Matrix lam = lambda.asDiagonal();

  double h = trace_prod(model.F + kt.transpose() * g * kt, z);
  h += trace_prod(abar * z * abar.transpose(), th);
  h += trace_prod(model.W, th);
  h += 2.0 * (lam_half * u.transpose() * f.R * f.Lnext.transpose() * th * setup.Q1 * u).trace();
  h -= 2.0 * (lam_half * u.transpose() * f.R * f.dkl.transpose() * f.giq * u).trace();
  h += trace_prod(f.R * f.V * f.R, theta_sigma_next);
  h += (lam * u.transpose() *
        (setup.Q1.transpose() * th * setup.Q1 + setup.Q.transpose() * model.G1 * setup.Q) * u)
           .trace();
  h -= (bd * sigma * (f.Lnext.transpose() + l_t.transpose() * abar.transpose()) * th).trace();
  h += trace_prod(dt.transpose() * g * dt, sigma);
  h += 2.0 * trace_prod(dt.transpose() * g * kt * l_t, sigma);
  return h;
}

LambdaGradientTerms gradient_terms_fa(const Matrix& sigma, const Matrix& l_t,
                                      const Matrix& theta_z_next,
                                      const Matrix& theta_sigma_next,
                                      const GainSchedule& gains, const ChannelSetup& setup,
                                      const SystemModel& model, int t) {
  const Vector zero = Vector::Zero(setup.d0);
  const FaTerms f = fa_terms(sigma, l_t, zero, gains, setup, model, t);
  const Matrix& u = setup.eig.U;
  const Matrix& th = theta_z_next;
  LambdaGradientTerms m;
  m.M1 = u.transpose() * f.R *
         (f.Lnext.transpose() * th * setup.Q1 - f.dkl.transpose() * f.giq) * u;
  m.M2 = u.transpose() * f.R * theta_sigma_next * f.R * u;
  m.M3 = u.transpose() *
         (setup.Q1.transpose() * th * setup.Q1 + setup.Q.transpose() * model.G1 * setup.Q) * u;
  return m;
}

Vector grad_lambda_fa(const Matrix& sigma, const Matrix& l_t, const Vector& lambda,
                      const Matrix& theta_z_next, const Matrix& theta_sigma_next,
                      const GainSchedule& gains, const ChannelSetup& setup,
                      const SystemModel& model, int t) {
  if (lambda.size() != setup.d0) throw Error(ErrorCode::DimensionMismatch, "Lambda size");
  if ((lambda.array() <= 1e-12).any()) {
    throw Error(ErrorCode::ZeroLambdaEntry, "gradient needs every Lambda entry > 1e-12");
  }
  const LambdaGradientTerms m =
      gradient_terms_fa(sigma, l_t, theta_z_next, theta_sigma_next, gains, setup, model, t);
  const Vector& hv = setup.eig.H;
  Vector grad(lambda.size());
  for (Eigen::Index j = 0; j < lambda.size(); ++j) {
    const double den = 1.0 + lambda(j) * hv(j);
    grad(j) = m.M1(j, j) / std::sqrt(lambda(j)) - hv(j) * m.M2(j, j) / (den * den) + m.M3(j, j);
  }
  return grad;
}

ScalarConstants scalar_constants(const GainSchedule& gains, const ChannelSetup& setup,
                                 const SystemModel& model) {
  if (setup.mode != ActuationMode::FullyActuated) {
    throw Error(ErrorCode::InvalidArgument, "scalar power constants need a fully actuated setup");
  }
  if ((setup.eig.H.array() <= 0.0).any()) {
    throw Error(ErrorCode::RankDeficient, "channel eigenvalues must be positive");
  }
  const Matrix& u = setup.eig.U;
  const Matrix hinv = u * setup.eig.H.cwiseInverse().asDiagonal() * u.transpose();
  const Matrix hinv_half = u * setup.eig.H.cwiseSqrt().cwiseInverse().asDiagonal() * u.transpose();
  const Matrix s0_half = psd_sqrt(model.Sigma0);
  const Matrix g = model.G();
  const Matrix b = model.B();
  const Matrix giq = g * tilde_i(model) * setup.Q;
  const std::vector<Matrix> l = l_sequence(gains, model);

  ScalarConstants c;
  c.Qa = symmetrize(setup.Q1 * hinv * setup.Q1.transpose());
  c.ra = trace_prod(setup.Q.transpose() * model.G1 * setup.Q, hinv);
  for (int t = 0; t < gains.horizon(); ++t) {
    const Matrix bd = b * gains.D[t];
    const Matrix& lt = l[t];
    const Matrix& ln = l[t + 1];
    c.Qb.push_back(bd * model.Sigma0 * ln.transpose() +
                   gains.Abar[t] * lt * model.Sigma0 * bd.transpose());
    const Matrix x = setup.Q1 * hinv_half * s0_half * ln.transpose();
    c.Qab.push_back(x + x.transpose());
    const Matrix& dt = gains.D[t];
    c.rb.push_back(trace_prod(dt.transpose() * g, dt * model.Sigma0 +
                                                      2.0 * gains.K[t] * lt * model.Sigma0));
    c.rab.push_back(
        trace_prod((dt + gains.K[t] * lt).transpose() * giq, hinv_half * s0_half));
  }
  return c;
}

double scalar_stationarity(const ScalarConstants& c, const Matrix& theta_z_next, int t,
                           double a, double b_next, double theta_b_next) {
  const double c1 = trace_prod(c.Qab[t], theta_z_next.transpose()) - 2.0 * c.rab[t];
  return c.ra + trace_prod(c.Qa, theta_z_next.transpose()) +
         std::sqrt(b_next * (1.0 + a)) / (2.0 * std::sqrt(a)) * c1 -
         b_next * theta_b_next / (1.0 + a);
}

namespace {

struct BackwardPass {
  std::vector<double> a, b, theta_b, residuals;
};

BackwardPass scalar_pass(const ScalarConstants& c, const std::vector<Matrix>& theta_z,
                         const ScalarSolveOptions& opt, double epsilon) {
  const int n = static_cast<int>(c.Qb.size());
  BackwardPass p;
  p.a.assign(n, 0.0);
  p.residuals.assign(n, 0.0);
  p.b.assign(n + 1, 0.0);
  p.theta_b.assign(n + 1, 0.0);
  p.b[n] = epsilon;
  p.theta_b[n] = 0.0;

  const double llo = std::log(opt.grid_lo);
  const double lhi = std::log(opt.grid_hi);
  const int m = std::max(opt.grid_points, 2);

  for (int t = n - 1; t >= 0; --t) {
    const Matrix& th = theta_z[t + 1];
    const double bn = p.b[t + 1];
    const double tbn = p.theta_b[t + 1];
    auto gfun = [&](double a) { return scalar_stationarity(c, th, t, a, bn, tbn); };
    const double alpha = c.ra + trace_prod(c.Qa, th.transpose());
    const double c1 = trace_prod(c.Qab[t], th.transpose()) - 2.0 * c.rab[t];
    const double beta = c.rb[t] - trace_prod(c.Qb[t], th.transpose());
    auto hfun = [&](double a) {
      return a * alpha + std::sqrt(a * bn * (1.0 + a)) * c1 + bn * (1.0 + a) * beta;
    };

    std::vector<double> grid(m), vals(m);
    for (int i = 0; i < m; ++i) {
      grid[i] = std::exp(llo + (lhi - llo) * i / (m - 1));
      vals[i] = gfun(grid[i]);
    }
    double best_a = -1.0;
    double best_h = std::numeric_limits<double>::infinity();
    double best_res = 0.0;
    for (int i = 0; i + 1 < m; ++i) {
      if (!(std::signbit(vals[i]) != std::signbit(vals[i + 1])) && vals[i] != 0.0) continue;
      double lo = grid[i], hi = grid[i + 1];
      double glo = vals[i];
      for (int it = 0; it < 200 && hi - lo > 1e-15 * hi; ++it) {
        const double mid = 0.5 * (lo + hi);
        const double gm = gfun(mid);
        if (gm == 0.0) {
          lo = hi = mid;
          break;
        }
        if (std::signbit(gm) == std::signbit(glo)) {
          lo = mid;
          glo = gm;
        } else {
          hi = mid;
        }
      }
      const double root = std::abs(gfun(lo)) <= std::abs(gfun(hi)) ? lo : hi;
      const double hv = hfun(root);
      if (hv < best_h) {
        best_h = hv;
        best_a = root;
        best_res = gfun(root);
      }
    }
    if (best_a <= 0.0) {
      std::ostringstream os;
      os << "no sign change of the stationarity condition at t = " << t << " on a in ["
         << opt.grid_lo << ", " << opt.grid_hi << "]; g(lo) = " << vals.front()
         << ", g(mid) = " << vals[m / 2] << ", g(hi) = " << vals.back();
      throw Error(ErrorCode::NoRootFound, os.str());
    }
    const double a = best_a;
    p.a[t] = a;
    p.residuals[t] = best_res;
    p.b[t] = bn * (1.0 + a);
    p.theta_b[t] = beta + tbn / (1.0 + a) + std::sqrt(a) / (2.0 * std::sqrt(p.b[t])) * c1;
  }
  return p;
}

}  // namespace

PowerSchedule scalar_backward_solve(const ScalarConstants& c,
                                    const std::vector<Matrix>& theta_z,
                                    const ChannelSetup& setup,
                                    const ScalarSolveOptions& options) {
  if (!(options.epsilon > 0.0)) throw Error(ErrorCode::InvalidArgument, "epsilon must be positive");
  const int n = static_cast<int>(c.Qb.size());
  if (static_cast<int>(theta_z.size()) != n + 1) {
    throw Error(ErrorCode::HorizonMismatch, "theta_Z must have n+1 entries");
  }
  double eps = options.epsilon;
  auto in_range = [](const BackwardPass& p) { return p.b[0] >= 0.5 && p.b[0] <= 2.0; };
  BackwardPass pass;
  bool have = false;
  try {
    pass = scalar_pass(c, theta_z, options, eps);
    have = true;
  } catch (const Error& e) {
    if (!options.shooting || e.code() != ErrorCode::NoRootFound) throw;
  }
  if (options.shooting && !(have && in_range(pass))) {
    // b_0 grows with epsilon until the root disappears; a missing root counts as too large
    double lo = 1e-12, hi = 1.0;
    if (have) (pass.b[0] < 0.5 ? lo : hi) = eps;
    else hi = eps;
    BackwardPass best = pass;
    double best_eps = eps;
    bool have_best = have;
    for (int it = 0; it < 80 && hi / lo > 1.0 + 1e-12; ++it) {
      const double e = std::sqrt(lo * hi);
      try {
        BackwardPass trial = scalar_pass(c, theta_z, options, e);
        const bool closer = !have_best || std::abs(std::log(trial.b[0])) < std::abs(std::log(best.b[0]));
        if (closer) {
          best = trial;
          best_eps = e;
          have_best = true;
        }
        if (in_range(trial)) break;
        (trial.b[0] < 0.5 ? lo : hi) = e;
      } catch (const Error& err) {
        if (err.code() != ErrorCode::NoRootFound) throw;
        hi = e;
      }
    }
    if (!have_best) {
      throw Error(ErrorCode::NoRootFound, "shooting found no epsilon with a complete backward pass");
    }
    pass = std::move(best);
    eps = best_eps;
  }

  PowerSchedule s;
  s.mode = PowerMode::Scalar;
  s.epsilon = eps;
  s.a = pass.a;
  s.b_backward = pass.b;
  s.theta_b = pass.theta_b;
  s.residuals = pass.residuals;
  s.b.assign(n + 1, 1.0);
  const Vector hinv = setup.eig.H.cwiseInverse();
  for (int t = 0; t < n; ++t) {
    s.b[t + 1] = s.b[t] / (1.0 + s.a[t]);
    s.Lambda.push_back(s.a[t] * hinv);
  }
  s.achieved_terminal_ratio = s.b[n];
  return s;
}

PowerSchedule ua_optimize(const PowerSchedule& init, const GainSchedule& gains,
                          const ChannelSetup& setup, const SystemModel& model, int budget) {
  const int n = gains.horizon();
  if (init.horizon() != n) throw Error(ErrorCode::HorizonMismatch, "initial schedule horizon");
  for (const Vector& l : init.Lambda) {
    if ((l.array() <= 0.0).any()) {
      throw Error(ErrorCode::ZeroLambdaEntry, "optimizer needs strictly positive initial powers");
    }
  }
  PowerSchedule best = init;
  best.mode = PowerMode::FullMatrix;
  best.evaluations = 0;
  best.budget_exhausted = false;

  // states[t] and prefix[t] = sum of stage costs before t for the incumbent
  std::vector<MdpState> states(n + 1);
  std::vector<double> prefix(n + 1, 0.0);
  auto rebuild_from = [&](int t0) {
    for (int t = t0; t < n; ++t) {
      StepDetail st = step_detail(states[t], best.Lambda[t], -1, gains, setup, model, t);
      prefix[t + 1] = prefix[t] + st.stage;
      states[t + 1] = std::move(st.next);
    }
    return prefix[n] + terminal_cost(states[n], model);
  };
  auto suffix_cost = [&](int t0, const Vector& lam) {
    MdpState s = states[t0];
    double total = prefix[t0];
    for (int t = t0; t < n; ++t) {
      StepDetail st = step_detail(s, t == t0 ? lam : best.Lambda[t], -1, gains, setup, model, t);
      total += st.stage;
      s = std::move(st.next);
    }
    return total + terminal_cost(s, model);
  };

  states[0] = mdp_initial(model);
  double cost = rebuild_from(0);
  best.evaluations = 1;
  const double factors[] = {4.0, 2.0, 1.25, 1.06};

  bool improved = true;
  while (improved && !best.budget_exhausted) {
    improved = false;
    for (int t = 0; t < n && !best.budget_exhausted; ++t) {
      for (Eigen::Index j = 0; j < best.Lambda[t].size() && !best.budget_exhausted; ++j) {
        for (;;) {
          double probe_best = cost;
          double probe_val = 0.0;
          for (double f : factors) {
            for (double scale : {f, 1.0 / f}) {
              if (best.evaluations >= budget) {
                best.budget_exhausted = true;
                break;
              }
              Vector lam = best.Lambda[t];
              lam(j) *= scale;
              const double cst = suffix_cost(t, lam);
              ++best.evaluations;
              if (cst < probe_best) {
                probe_best = cst;
                probe_val = lam(j);
              }
            }
            if (best.budget_exhausted) break;
          }
          if (probe_best < cost - 1e-12 * std::abs(cost)) {
            best.Lambda[t](j) = probe_val;
            cost = rebuild_from(t);
            improved = true;
            if (best.budget_exhausted) break;
          } else {
            break;
          }
        }
      }
    }
  }
  return best;
}

}  // namespace imcomm
