#pragma once

#include <span>

#include "pwm/data/trajectory.hpp"
#include "pwm/env/config.hpp"

namespace pwm::env {

struct CartPoleState {
  double x = 0.0;          // m
  double x_dot = 0.0;      // m/s
  double theta = 0.0;      // rad from vertical
  double theta_dot = 0.0;  // rad/s

  data::Vector to_vector() const { return {x, x_dot, theta, theta_dot}; }
  static CartPoleState from_vector(std::span<const double> v);
  friend bool operator==(const CartPoleState&, const CartPoleState&) = default;
};

// One semi-implicit Euler step of the classic pole-on-cart equations.
// The force is clamped to +-force_limit.
CartPoleState cartpole_step(const CartPoleState& s, double force, const EnvConfig& cfg);

// |theta| < theta_limit and |x| < x_limit at every state, and the trajectory
// covers the full horizon.
bool cartpole_success(const data::Trajectory& traj, const EnvConfig& cfg);

// Number of leading steps before the first limit violation, in seconds.
double cartpole_upright_duration(const data::Trajectory& traj, const EnvConfig& cfg);

}  // namespace pwm::env
