#include "imcomm/sim_harness.hpp"

#include <cmath>
#include <numeric>
#include <sstream>

namespace imcomm {

namespace {

constexpr std::uint64_t kTargetSalt = 0x7a5c3e1f9b8d6042ULL;

template <std::size_t N>
double poly(const double (&c)[N], double x) {
  double acc = c[N - 1];
  for (std::size_t i = N - 1; i-- > 0;) acc = acc * x + c[i];
  return acc;
}

}  // namespace

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t run_seed(std::uint64_t master, std::uint64_t index) {
  return splitmix64(master ^ splitmix64(index));
}

double normal_quantile(double p) {
  static const double a[] = {3.3871328727963666080e0, 1.3314166789178437745e+2,
                             1.9715909503065514427e+3, 1.3731693765509461125e+4,
                             4.5921953931549871457e+4, 6.7265770927008700853e+4,
                             3.3430575583588128105e+4, 2.5090809287301226727e+3};
  static const double b[] = {1.0,
                             4.2313330701600911252e+1, 6.8718700749205790830e+2,
                             5.3941960214247511077e+3, 2.1213794301586595867e+4,
                             3.9307895800092710610e+4, 2.8729085735721942674e+4,
                             5.2264952788528545610e+3};
  static const double c[] = {1.42343711074968357734e0, 4.63033784615654529590e0,
                             5.76949722146069140550e0, 3.64784832476320460504e0,
                             1.27045825245236838258e0, 2.41780725177450611770e-1,
                             2.27238449892691845833e-2, 7.74545014278341407640e-4};
  static const double d[] = {1.0,
                             2.05319162663775882187e0, 1.67638483018380384940e0,
                             6.89767334985100004550e-1, 1.48103976427480074590e-1,
                             1.51986665636164571966e-2, 5.47593808499534494600e-4,
                             1.05075007164441684324e-9};
  static const double e[] = {6.65790464350110377720e0, 5.46378491116411436990e0,
                             1.78482653991729133580e0, 2.96560571828504891230e-1,
                             2.65321895265761230930e-2, 1.24266094738807843860e-3,
                             2.71155556874348757815e-5, 2.01033439929228813265e-7};
  static const double f[] = {1.0,
                             5.99832206555887937690e-1, 1.36929880922735805310e-1,
                             1.48753612908506148525e-2, 7.86869131145613259100e-4,
                             1.84631831751005468180e-5, 1.42151175831644588870e-7,
                             2.04426310338993978564e-15};
  if (!(p > 0.0 && p < 1.0)) throw Error(ErrorCode::InvalidArgument, "quantile needs p in (0, 1)");
  const double q = p - 0.5;
  if (std::abs(q) <= 0.425) {
    const double r = 0.180625 - q * q;
    return q * poly(a, r) / poly(b, r);
  }
  double r = std::sqrt(-std::log(q < 0.0 ? p : 1.0 - p));
  double val;
  if (r <= 5.0) {
    r -= 1.6;
    val = poly(c, r) / poly(d, r);
  } else {
    r -= 5.0;
    val = poly(e, r) / poly(f, r);
  }
  return q < 0.0 ? -val : val;
}

double GaussianStream::uniform() {
  return (static_cast<double>(engine_() >> 11) + 0.5) * 0x1.0p-53;
}

double GaussianStream::next() { return normal_quantile(uniform()); }

Vector GaussianStream::next_vector(Eigen::Index dim) {
  Vector v(dim);
  for (Eigen::Index i = 0; i < dim; ++i) v(i) = next();
  return v;
}

Vector GaussianStream::draw(const Matrix& factor) { return factor * next_vector(factor.cols()); }

namespace {

Policy base_policy(PolicyTag tag, const SystemModel& model, std::string name) {
  model.validate();
  Policy p;
  p.tag = tag;
  p.name = name.empty() ? std::string(to_string(tag)) : std::move(name);
  p.model = model;
  p.W_factor = covariance_factor(model.W);
  p.X0_factor = covariance_factor(model.X0);
  p.Sigma0_factor = covariance_factor(model.Sigma0);
  return p;
}

}  // namespace

Policy make_baseline(PolicyTag tag, const SystemModel& model, std::string name) {
  if (tag == PolicyTag::ImCommFA || tag == PolicyTag::ImCommUA) {
    throw Error(ErrorCode::InvalidArgument, "use make_imcomm for signaling policies");
  }
  Policy p = base_policy(tag, model, std::move(name));
  p.gains = tag == PolicyTag::LeaderOnly ? leader_only_gains(model) : backward_riccati(model);
  return p;
}

Policy make_imcomm(const SystemModel& model, PowerSchedule power, std::string name) {
  Policy p = base_policy(PolicyTag::ImCommFA, model, std::move(name));
  p.setup = make_setup(model.B1, model.W);
  p.tag = p.setup.mode == ActuationMode::FullyActuated ? PolicyTag::ImCommFA : PolicyTag::ImCommUA;
  if (p.name.empty() || p.name == "imcomm-fa") p.name = std::string(to_string(p.tag));
  p.gains = backward_riccati(model);
  if (power.horizon() != model.n) {
    throw Error(ErrorCode::HorizonMismatch, "power schedule length differs from the horizon");
  }
  p.power = std::move(power);
  p.plan = build_plan(p.setup, p.power, model.Sigma0);
  return p;
}

double RolloutTrace::total_cost() const {
  return std::accumulate(stage_costs.begin(), stage_costs.end(), 0.0) + terminal_cost;
}

RolloutTrace rollout(const Policy& policy, const TargetSpec& target, std::uint64_t seed) {
  const SystemModel& m = policy.model;
  const int n = m.n;
  RolloutTrace tr;
  tr.seed = seed;
  if (target.sampled) {
    GaussianStream ts(splitmix64(seed ^ kTargetSalt));
    tr.x_star = ts.draw(policy.Sigma0_factor);
  } else {
    if (target.fixed.size() != m.d0()) {
      throw Error(ErrorCode::DimensionMismatch, "target size differs from the state dimension");
    }
    tr.x_star = target.fixed;
  }
  const Vector& xs = tr.x_star;
  GaussianStream noise(seed);
  Vector x = noise.draw(policy.X0_factor);
  tr.states.push_back(x);

  const bool sig = policy.signaling();
  std::optional<CoordinationState> coord;
  if (sig) {
    coord.emplace(policy.gains, policy.plan, m.B(), xs);
    tr.errors.push_back(coord->msg().e);
    tr.estimates.push_back(coord->msg().x_star_hat);
  }
  const double trace0 = m.Sigma0.trace();
  auto sigma_trace = [&](int t) {
    if (sig) return policy.plan.Sigma[t].trace();
    return policy.tag == PolicyTag::ExComm ? 0.0 : trace0;
  };
  tr.z_norms.push_back((x - xs).norm());
  tr.sigma_traces.push_back(sigma_trace(0));

  for (int t = 0; t < n; ++t) {
    const AgentInputs in =
        sig ? coord->compute_inputs(x) : baseline_inputs(policy.tag, policy.gains, t, x, xs);
    const Vector w = noise.draw(policy.W_factor);
    const Vector z = x - xs;
    tr.stage_costs.push_back(z.dot(m.F * z) + in.v.dot(m.G1 * in.v) + in.q.dot(m.G2 * in.q));
    Vector x_next = m.A * x + m.B1 * in.v + m.B2 * in.q + w;
    if (sig) {
      tr.outputs.push_back(coord->observe_and_update(x, x_next));
      tr.errors.push_back(coord->msg().e);
      tr.estimates.push_back(coord->msg().x_star_hat);
    }
    tr.inputs_v.push_back(in.v);
    tr.inputs_q.push_back(in.q);
    tr.signals.push_back(in.s);
    tr.noises.push_back(w);
    x = std::move(x_next);
    tr.states.push_back(x);
    tr.z_norms.push_back((x - xs).norm());
    tr.sigma_traces.push_back(sigma_trace(t + 1));
  }
  const Vector zn = x - xs;
  tr.terminal_cost = zn.dot(m.Fn * zn);
  return tr;
}

double AggregateReport::std_error() const {
  return runs > 0 ? std_total_cost / std::sqrt(static_cast<double>(runs)) : 0.0;
}

double AggregateReport::mean_final_z_norm() const {
  return mean_z_norm.empty() ? 0.0 : mean_z_norm.back();
}

AggregateReport monte_carlo(const Policy& policy, const TargetSpec& target, int runs,
                            std::uint64_t master_seed) {
  if (runs < 1) throw Error(ErrorCode::ValidationError, "runs must be at least 1");
  const int n = policy.model.n;
  AggregateReport rep;
  rep.policy = policy.name;
  rep.runs = runs;
  rep.mean_z_norm.assign(n + 1, 0.0);
  rep.mean_sigma_trace.assign(n + 1, 0.0);
  rep.mean_stage_cost.assign(n + 1, 0.0);
  for (int i = 0; i < runs; ++i) {
    RolloutTrace tr;
    try {
      tr = rollout(policy, target, run_seed(master_seed, static_cast<std::uint64_t>(i)));
    } catch (const Error& err) {
      std::ostringstream os;
      os << "run " << i << " failed: " << err.what();
      throw Error(err.code(), os.str());
    }
    rep.totals.push_back(tr.total_cost());
    rep.final_z_norms.push_back(tr.z_norms.back());
    for (int t = 0; t <= n; ++t) {
      rep.mean_z_norm[t] += tr.z_norms[t];
      rep.mean_sigma_trace[t] += tr.sigma_traces[t];
      rep.mean_stage_cost[t] += t < n ? tr.stage_costs[t] : tr.terminal_cost;
    }
  }
  const double inv = 1.0 / runs;
  for (int t = 0; t <= n; ++t) {
    rep.mean_z_norm[t] *= inv;
    rep.mean_sigma_trace[t] *= inv;
    rep.mean_stage_cost[t] *= inv;
  }
  rep.mean_total_cost = std::accumulate(rep.totals.begin(), rep.totals.end(), 0.0) * inv;
  if (runs > 1) {
    double ss = 0.0;
    for (double v : rep.totals) ss += (v - rep.mean_total_cost) * (v - rep.mean_total_cost);
    rep.std_total_cost = std::sqrt(ss / (runs - 1));
  }
  if (policy.signaling()) {
    rep.achieved_terminal_ratio = policy.plan.Sigma.back().trace() / policy.plan.Sigma.front().trace();
    rep.optimizer_evaluations = policy.power.evaluations;
  }
  return rep;
}

}  // namespace imcomm
