#include "imcomm/coordination.hpp"

namespace imcomm {

std::string_view to_string(PolicyTag tag) noexcept {
  switch (tag) {
    case PolicyTag::ExComm: return "excomm";
    case PolicyTag::LeaderOnly: return "leader-only";
    case PolicyTag::NoComm: return "no-comm";
    case PolicyTag::ImCommFA: return "imcomm-fa";
    case PolicyTag::ImCommUA: return "imcomm-ua";
  }
  return "unknown";
}

CoordinationPlan build_plan(const ChannelSetup& setup, const PowerSchedule& power,
                            const Matrix& sigma0) {
  CoordinationPlan plan;
  plan.Sigma.push_back(sigma0);
  for (int t = 0; t < power.horizon(); ++t) {
    plan.steps.push_back(channel_step(setup, plan.Sigma.back(), power.Lambda[t], t));
    plan.Sigma.push_back(plan.steps.back().Sigma_next);
  }
  return plan;
}

CoordinationState::CoordinationState(const GainSchedule& gains, const CoordinationPlan& plan,
                                     const Matrix& b, const Vector& x_star)
    : gains_(&gains), plan_(&plan), b_(b) {
  if (static_cast<int>(plan.steps.size()) != gains.horizon()) {
    throw Error(ErrorCode::HorizonMismatch, "plan and gains differ in horizon");
  }
  msg_.e = x_star;
  msg_.Sigma = plan.Sigma.front();
  msg_.x_star_hat = Vector::Zero(x_star.size());
}

AgentInputs CoordinationState::compute_inputs(const Vector& x_t) const {
  if (t_ >= gains_->horizon()) throw Error(ErrorCode::IndexOutOfRange, "rollout is finished");
  const GainSchedule& g = *gains_;
  AgentInputs in;
  in.s = plan_->steps[t_].E * msg_.e;
  in.v = -g.K_l[t_] * x_t + g.D_l[t_] * msg_.x_star_hat + in.s;
  in.q = -g.K_f[t_] * x_t + g.D_f[t_] * msg_.x_star_hat;
  return in;
}

Vector CoordinationState::observe_and_update(const Vector& x_t, const Vector& x_next) {
  if (t_ >= gains_->horizon()) throw Error(ErrorCode::IndexOutOfRange, "rollout is finished");
  const Vector y =
      channel_output(x_next, x_t, gains_->Abar[t_], b_, gains_->D[t_], msg_.x_star_hat);
  const Vector e_hat = plan_->steps[t_].decoder * y;
  msg_.e -= e_hat;
  msg_.x_star_hat += e_hat;
  ++t_;
  msg_.Sigma = plan_->Sigma[t_];
  return y;
}

AgentInputs baseline_inputs(PolicyTag tag, const GainSchedule& g, int t, const Vector& x_t,
                            const Vector& x_star) {
  if (t < 0 || t >= g.horizon()) throw Error(ErrorCode::IndexOutOfRange, "step outside horizon");
  AgentInputs in;
  in.s = Vector::Zero(g.K_l[t].rows());
  switch (tag) {
    case PolicyTag::ExComm:
      in.v = -g.K_l[t] * x_t + g.D_l[t] * x_star;
      in.q = -g.K_f[t] * x_t + g.D_f[t] * x_star;
      break;
    case PolicyTag::LeaderOnly:
      in.v = -g.K_l[t] * x_t + g.D_l[t] * x_star;
      in.q = Vector::Zero(g.K_f[t].rows());
      break;
    case PolicyTag::NoComm:
      // the follower steers to the prior mean of the target, which is 0
      in.v = -g.K_l[t] * x_t + g.D_l[t] * x_star;
      in.q = -g.K_f[t] * x_t;
      break;
    default:
      throw Error(ErrorCode::InvalidArgument, "baseline_inputs called for a signaling policy");
  }
  return in;
}

}  // namespace imcomm
