#include "pwm/env/environment.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "pwm/errors.hpp"

namespace pwm::env {

data::Vector apply_action_noise(std::span<const double> a, double frac, double limit, Rng& rng) {
  data::Vector out(a.begin(), a.end());
  if (frac == 0.0) return out;
  const double sd = frac * 2.0 * limit;
  for (auto& v : out) v = std::clamp(v + sd * rng.normal(), -limit, limit);
  return out;
}

std::array<double, 2> apply_arm_strength(std::array<double, 2> torques, double strength) {
  return {torques[0] * strength, torques[1] * strength};
}

namespace {

std::array<double, 2> sample_annulus(double r_min, double r_max, Rng& rng) {
  // Uniform over the annulus area.
  const double r = std::sqrt(rng.uniform(r_min * r_min, r_max * r_max));
  const double phi = rng.uniform(-std::numbers::pi, std::numbers::pi);
  return {r * std::cos(phi), r * std::sin(phi)};
}

}  // namespace

InitialCondition sample_initial_condition(const EnvConfig& cfg, const NoiseConfig& nc, Rng& rng) {
  InitialCondition ic;
  if (cfg.id == EnvId::CartPole) {
    const double r = cfg.cartpole.init_range;
    ic.state = {rng.uniform(-r, r), rng.uniform(-r, r), rng.uniform(-r, r), rng.uniform(-r, r)};
    return ic;
  }
  const auto& p = cfg.pusher;
  const double q1 = rng.uniform(-std::numbers::pi, std::numbers::pi);
  const double q2 = rng.uniform(-std::numbers::pi, std::numbers::pi);
  const auto ball = sample_annulus(p.ball_r_min, p.ball_r_max, rng);
  const auto target = sample_annulus(p.target_r_min, p.target_r_max, rng);
  ic.state = PusherState::at_rest(q1, q2, ball, p).to_vector();
  ic.target = {target[0], target[1]};
  // Always drawn so the stream layout does not depend on the observability flag.
  const double strength = rng.uniform(nc.strength_min, nc.strength_max);
  ic.arm_strength = nc.partially_observable ? strength : 1.0;
  return ic;
}

EnvConfig task_config(const EnvConfig& cfg, const InitialCondition& ic) {
  EnvConfig c = cfg;
  if (cfg.id == EnvId::Pusher && ic.target.size() == 2) c.pusher.target = {ic.target[0], ic.target[1]};
  return c;
}

Simulator::Simulator(const EnvConfig& cfg, const NoiseConfig& nc, InitialCondition ic, std::uint64_t noise_seed)
    : cfg_(task_config(cfg, ic)), noise_(nc), strength_(ic.arm_strength), state_(std::move(ic.state)),
      rng_(noise_seed) {
  if (state_.size() != cfg_.state_dim()) throw DimensionError("initial state has wrong dimension");
}

const data::Vector& Simulator::step(std::span<const double> action) {
  if (action.size() != cfg_.action_dim()) throw DimensionError("action has wrong dimension");
  const auto noisy = apply_action_noise(action, noise_, cfg_.action_limit(), rng_);
  if (cfg_.id == EnvId::CartPole) {
    state_ = cartpole_step(CartPoleState::from_vector(state_), noisy[0], cfg_).to_vector();
  } else {
    const auto tau = apply_arm_strength({noisy[0], noisy[1]}, strength_);
    state_ = pusher_step(PusherState::from_vector(state_), tau, cfg_).to_vector();
  }
  ++steps_;
  return state_;
}

data::Vector env_step(const EnvConfig& cfg, std::span<const double> state, std::span<const double> action) {
  if (cfg.id == EnvId::CartPole) return cartpole_step(CartPoleState::from_vector(state), action[0], cfg).to_vector();
  return pusher_step(PusherState::from_vector(state), {action[0], action[1]}, cfg).to_vector();
}

bool task_success(const data::Trajectory& traj, const EnvConfig& cfg) {
  return cfg.id == EnvId::CartPole ? cartpole_success(traj, cfg) : pusher_success(traj, cfg);
}

}  // namespace pwm::env
