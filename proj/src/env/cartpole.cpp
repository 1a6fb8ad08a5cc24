#include "pwm/env/cartpole.hpp"

#include <algorithm>
#include <cmath>

#include "pwm/errors.hpp"

namespace pwm::env {

CartPoleState CartPoleState::from_vector(std::span<const double> v) {
  if (v.size() != 4) throw DimensionError("cartpole state must have 4 entries");
  return {v[0], v[1], v[2], v[3]};
}

CartPoleState cartpole_step(const CartPoleState& s, double force, const EnvConfig& cfg) {
  if (!(std::isfinite(s.x) && std::isfinite(s.x_dot) && std::isfinite(s.theta) && std::isfinite(s.theta_dot) &&
        std::isfinite(force)))
    throw ContractError("cartpole_step: non-finite input");
  const auto& p = cfg.cartpole;
  const double f = std::clamp(force, -p.force_limit, p.force_limit);
  const double total_mass = p.cart_mass + p.pole_mass;
  const double pml = p.pole_mass * p.pole_half_length;
  const double cos_t = std::cos(s.theta);
  const double sin_t = std::sin(s.theta);

  const double temp = (f + pml * s.theta_dot * s.theta_dot * sin_t) / total_mass;
  const double theta_acc = (p.gravity * sin_t - cos_t * temp) /
                           (p.pole_half_length * (4.0 / 3.0 - p.pole_mass * cos_t * cos_t / total_mass));
  const double x_acc = temp - pml * theta_acc * cos_t / total_mass;

  CartPoleState n;
  n.x_dot = s.x_dot + cfg.dt * x_acc;
  n.x = s.x + cfg.dt * n.x_dot;
  n.theta_dot = s.theta_dot + cfg.dt * theta_acc;
  n.theta = s.theta + cfg.dt * n.theta_dot;
  return n;
}

namespace {
bool upright(const data::Vector& s, const CartPoleParams& p) {
  return std::abs(s[2]) < p.theta_limit && std::abs(s[0]) < p.x_limit;
}
}  // namespace

bool cartpole_success(const data::Trajectory& traj, const EnvConfig& cfg) {
  if (traj.diverged) return false;
  if (traj.steps() < static_cast<std::size_t>(cfg.horizon)) return false;
  return std::all_of(traj.states.begin(), traj.states.end(),
                     [&](const data::Vector& s) { return upright(s, cfg.cartpole); });
}

double cartpole_upright_duration(const data::Trajectory& traj, const EnvConfig& cfg) {
  std::size_t n = 0;
  for (const auto& s : traj.states) {
    if (!upright(s, cfg.cartpole)) break;
    ++n;
  }
  // A trajectory that never violates the limits survives its whole length.
  return cfg.dt * static_cast<double>(std::min(n, traj.steps()));
}

}  // namespace pwm::env
