#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "imcomm/implicit_channel.hpp"
#include "imcomm/lqg_gains.hpp"
#include "imcomm/power_opt.hpp"

namespace imcomm {

enum class PolicyTag { ExComm, LeaderOnly, NoComm, ImCommFA, ImCommUA };

std::string_view to_string(PolicyTag tag) noexcept;

/// Channel maps for every step of a power schedule. Sigma_t does not depend
/// on the data, so the whole plan is fixed before any rollout starts.
struct CoordinationPlan {
  std::vector<ChannelStep> steps;  // n
  std::vector<Matrix> Sigma;       // n+1
};

CoordinationPlan build_plan(const ChannelSetup& setup, const PowerSchedule& power,
                            const Matrix& sigma0);

struct MessageState {
  Vector e;           // e_t = x_* - x_star_hat
  Matrix Sigma;       // Cov(e_t)
  Vector x_star_hat;  // follower estimate of x_*
};

struct AgentInputs {
  Vector v;  // leader
  Vector q;  // follower
  Vector s;  // signaling part of v (zero for baselines)
};

/// Live state of the implicit coordination scheme for one rollout.
class CoordinationState {
 public:
  CoordinationState(const GainSchedule& gains, const CoordinationPlan& plan, const Matrix& b,
                    const Vector& x_star);

  AgentInputs compute_inputs(const Vector& x_t) const;

  /// Computes y_t from the observed transition, decodes and advances t.
  /// Returns y_t.
  Vector observe_and_update(const Vector& x_t, const Vector& x_next);

  const MessageState& msg() const { return msg_; }
  int t() const { return t_; }

 private:
  const GainSchedule* gains_;
  const CoordinationPlan* plan_;
  Matrix b_;
  MessageState msg_;
  int t_ = 0;
};

/// Inputs of the non-signaling policies. LeaderOnly expects the schedule
/// from leader_only_gains.
AgentInputs baseline_inputs(PolicyTag tag, const GainSchedule& gains, int t, const Vector& x_t,
                            const Vector& x_star);

}  // namespace imcomm
