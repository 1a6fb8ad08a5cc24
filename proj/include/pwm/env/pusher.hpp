#pragma once

#include <array>
#include <span>

#include "pwm/data/trajectory.hpp"
#include "pwm/env/config.hpp"

namespace pwm::env {

// 12-dimensional observation: fingertip position, joint angle encodings and
// rates (q2 relative to the upper link), ball position and velocity.
struct PusherState {
  double tip_x = 0, tip_y = 0;
  double cos_q1 = 1, sin_q1 = 0, q1_dot = 0;
  double cos_q2 = 1, sin_q2 = 0, q2_dot = 0;
  double ball_x = 0, ball_y = 0, ball_vx = 0, ball_vy = 0;

  data::Vector to_vector() const;
  static PusherState from_vector(std::span<const double> v);
  // Arm at angles (q1, q2) at rest, ball at rest at `ball`.
  static PusherState at_rest(double q1, double q2, std::array<double, 2> ball, const PusherParams& p);
  friend bool operator==(const PusherState&, const PusherState&) = default;
};

namespace pusher_index {
inline constexpr std::size_t tip_x = 0, tip_y = 1, q1_dot = 4, q2_dot = 7, ball_x = 8, ball_y = 9, ball_vx = 10,
                             ball_vy = 11;
}

std::array<double, 2> fingertip(double c1, double s1, double c2, double s2, const PusherParams& p);

// Force the fingertip exerts on the ball (zero outside the contact radius).
// Spring-damper along the contact normal; never pulls.
std::array<double, 2> contact_force(std::array<double, 2> tip, std::array<double, 2> tip_vel,
                                    std::array<double, 2> ball, std::array<double, 2> ball_vel,
                                    const PusherParams& p);

// Arm kinetic energy 1/2 qdot^T M(q2) qdot.
double arm_kinetic_energy(const PusherState& s, const PusherParams& p);

// One control period (cfg.dt) of arm + ball dynamics integrated with
// cfg.pusher.substeps semi-implicit Euler substeps. `torques` are controls in
// [-action_limit, action_limit] (clamped), scaled by torque_gain.
PusherState pusher_step(const PusherState& s, std::array<double, 2> torques, const EnvConfig& cfg);

bool pusher_at_target(std::span<const double> state, const EnvConfig& cfg, bool position_only = false);
// Some state has the ball inside the target radius below the target speed.
bool pusher_success(const data::Trajectory& traj, const EnvConfig& cfg);

}  // namespace pwm::env
