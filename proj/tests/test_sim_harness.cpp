#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"
#include "oracles.hpp"

using namespace imcomm;
using oracle::error_of;

namespace {

const char* kFa = "fully-actuated-vi-a";

TargetSpec setting(const char* preset, const char* name) {
  return TargetSpec::fixed_at(preset_target(preset, name));
}

}  // namespace

TEST_CASE("seed mixing and the normal quantile") {
  CHECK(splitmix64(0) == 0xe220a8397b1dcdafULL);
  CHECK(run_seed(5, 3) == splitmix64(5 ^ splitmix64(3)));
  CHECK(run_seed(5, 3) != run_seed(5, 4));
  CHECK(normal_quantile(0.5) == doctest::Approx(0.0).epsilon(1e-15));
  CHECK(normal_quantile(0.975) == doctest::Approx(1.959963984540054).epsilon(1e-14));
  CHECK(normal_quantile(1e-10) == doctest::Approx(-6.361340902404056).epsilon(1e-12));
  // 1 - p rounds, so symmetry only holds to about 1e-10 in the far tail
  for (double p : {1e-6, 0.01, 0.2, 0.4}) {
    CHECK(normal_quantile(p) == doctest::Approx(-normal_quantile(1.0 - p)).epsilon(1e-9));
  }
}

TEST_CASE("Gaussian stream moments and determinism") {
  GaussianStream a(42), b(42), c(43);
  for (int i = 0; i < 100; ++i) {
    const double x = a.next();
    REQUIRE(x == b.next());
  }
  CHECK(a.next() != c.next());

  oracle::Rng rng(1);
  const Matrix cov = rng.pd(3);
  const Matrix f = covariance_factor(cov);
  GaussianStream s(7);
  const int n = 40000;
  Vector mean = Vector::Zero(3);
  Matrix acc = Matrix::Zero(3, 3);
  for (int i = 0; i < n; ++i) {
    const Vector v = s.draw(f);
    mean += v;
    acc += v * v.transpose();
  }
  mean /= n;
  const int family = 3 + oracle::unique_entries(3);
  for (int i = 0; i < 3; ++i) {
    CHECK(std::abs(mean(i)) / std::sqrt(cov(i, i) / n) < oracle::family_z(family));
  }
  CHECK(oracle::worst_cov_z(acc / n, cov, n) < oracle::family_z(family));
  for (int i = 0; i < 1000; ++i) {
    const double u = s.uniform();
    REQUIRE(u > 0.0);
    REQUIRE(u < 1.0);
  }
}

TEST_CASE("noise-free equilibrium stays put") {
  SystemModel m = preset_model(kFa);
  m.W = 1e-30 * Matrix::Identity(4, 4);
  m.X0 = 1e-30 * Matrix::Identity(4, 4);
  const TargetSpec origin = TargetSpec::fixed_at(Vector::Zero(4));
  for (PolicyTag tag : {PolicyTag::ExComm, PolicyTag::NoComm, PolicyTag::LeaderOnly}) {
    const RolloutTrace r = rollout(make_baseline(tag, m), origin, 3);
    CHECK(r.total_cost() < 1e-20);
    for (const Vector& x : r.states) REQUIRE(x.norm() < 1e-12);
  }
}

TEST_CASE("rollouts replay exactly and respect the dynamics and the cost") {
  const SystemModel m = preset_model(kFa);
  const Policy p = make_imcomm(m, heuristic_schedule(0.88, m.n, 4));
  const RolloutTrace a = rollout(p, TargetSpec::random(), 11);
  const RolloutTrace b = rollout(p, TargetSpec::random(), 11);
  const RolloutTrace c = rollout(p, TargetSpec::random(), 12);
  REQUIRE(a.states.size() == 31);
  CHECK(a.x_star == b.x_star);
  CHECK(a.x_star != c.x_star);
  for (int t = 0; t <= m.n; ++t) REQUIRE(a.states[t] == b.states[t]);
  CHECK(a.total_cost() == b.total_cost());

  double total = 0.0;
  for (int t = 0; t < m.n; ++t) {
    const Vector& x = a.states[t];
    const Vector& v = a.inputs_v[t];
    const Vector& q = a.inputs_q[t];
    const Vector next = m.A * x + m.B1 * v + m.B2 * q + a.noises[t];
    REQUIRE((next - a.states[t + 1]).norm() < 1e-12);
    const Vector z = x - a.x_star;
    const double stage = z.dot(m.F * z) + v.dot(m.G1 * v) + q.dot(m.G2 * q);
    REQUIRE(stage == doctest::Approx(a.stage_costs[t]).epsilon(1e-12));
    REQUIRE(a.z_norms[t] == doctest::Approx(z.norm()));
    // what the follower sees is the signal through B1 plus the process noise
    REQUIRE((a.outputs[t] - (m.B1 * a.signals[t] + a.noises[t])).norm() < 1e-10);
    REQUIRE((a.estimates[t] + a.errors[t] - a.x_star).norm() < 1e-10);
    total += stage;
  }
  const Vector zn = a.states.back() - a.x_star;
  CHECK(a.terminal_cost == doctest::Approx(zn.dot(m.Fn * zn)));
  CHECK(a.total_cost() == doctest::Approx(total + a.terminal_cost));
}

TEST_CASE("channel identity holds under-actuated too") {
  const SystemModel m = preset_model("under-actuated-vi-b");
  const Policy p = make_imcomm(m, heuristic_schedule(0.88, m.n, 2));
  const RolloutTrace a = rollout(p, setting("under-actuated-vi-b", "C"), 5);
  for (int t = 0; t < m.n; ++t) {
    REQUIRE((a.outputs[t] - (m.B1 * a.signals[t] + a.noises[t])).norm() < 1e-10);
  }
  CHECK(error_of([&] { rollout(p, TargetSpec::fixed_at(Vector::Zero(3)), 1); }) ==
        ErrorCode::DimensionMismatch);
}

TEST_CASE("Monte Carlo aggregation") {
  const SystemModel m = preset_model(kFa);
  const Policy ex = make_baseline(PolicyTag::ExComm, m);
  const TargetSpec a = setting(kFa, "A");
  const AggregateReport one = monte_carlo(ex, a, 1, 9);
  CHECK(one.runs == 1);
  CHECK(one.std_total_cost == 0.0);
  CHECK(one.mean_total_cost == doctest::Approx(rollout(ex, a, run_seed(9, 0)).total_cost()));
  CHECK(error_of([&] { monte_carlo(ex, a, 0, 9); }) == ErrorCode::ValidationError);

  const AggregateReport r1 = monte_carlo(ex, a, 400, 1);
  const AggregateReport r2 = monte_carlo(ex, a, 400, 2);
  REQUIRE(r1.horizon() == 30);
  CHECK(r1.totals.size() == 400);
  CHECK(std::abs(r1.mean_total_cost - r2.mean_total_cost) <
        4.0 * std::hypot(r1.std_error(), r2.std_error()));
  double stage_sum = 0.0;
  for (double s : r1.mean_stage_cost) stage_sum += s;
  CHECK(stage_sum == doctest::Approx(r1.mean_total_cost).epsilon(1e-10));
  CHECK(monte_carlo(ex, a, 400, 1).mean_total_cost == r1.mean_total_cost);
}

TEST_CASE("baseline sigma traces") {
  const SystemModel m = preset_model(kFa);
  const TargetSpec a = setting(kFa, "A");
  const RolloutTrace lo = rollout(make_baseline(PolicyTag::LeaderOnly, m), a, 1);
  const RolloutTrace ex = rollout(make_baseline(PolicyTag::ExComm, m), a, 1);
  for (int t = 0; t <= m.n; ++t) {
    REQUIRE(lo.sigma_traces[t] == doctest::Approx(20.0));
    REQUIRE(ex.sigma_traces[t] == 0.0);
  }
  for (const Vector& q : lo.inputs_q) REQUIRE(q.norm() == 0.0);
}

TEST_CASE("leader-only pays for the idle follower") {
  const SystemModel m = preset_model(kFa);
  const TargetSpec a = setting(kFa, "A");
  const AggregateReport ex = monte_carlo(make_baseline(PolicyTag::ExComm, m), a, 200, 4);
  const AggregateReport lo = monte_carlo(make_baseline(PolicyTag::LeaderOnly, m), a, 200, 4);
  CHECK(lo.mean_total_cost >= 1.8 * ex.mean_total_cost);
  // the leader alone still reaches the target, up to the noise floor
  CHECK(lo.mean_final_z_norm() <= 1.2 * ex.mean_final_z_norm());
}
