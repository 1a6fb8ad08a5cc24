#include "pwm/env/config.hpp"

#include "pwm/errors.hpp"

namespace pwm::env {

const char* to_string(EnvId id) { return id == EnvId::CartPole ? "cartpole" : "pusher"; }

EnvId env_id_from_string(const std::string& s) {
  if (s == "cartpole") return EnvId::CartPole;
  if (s == "pusher") return EnvId::Pusher;
  throw ConfigError("unknown environment id '" + s + "'");
}

EnvConfig EnvConfig::cartpole_default() {
  EnvConfig c;
  c.id = EnvId::CartPole;
  c.dt = 0.02;
  c.horizon = 100;
  return c;
}

EnvConfig EnvConfig::pusher_default() {
  EnvConfig c;
  c.id = EnvId::Pusher;
  c.dt = 0.05;
  c.horizon = 100;
  return c;
}

void EnvConfig::validate() const {
  if (!(dt > 0)) throw ConfigError("env.dt must be positive");
  if (horizon < 1) throw ConfigError("env.horizon must be >= 1");
  const auto& c = cartpole;
  if (!(c.cart_mass > 0 && c.pole_mass > 0 && c.pole_half_length > 0 && c.force_limit > 0 && c.theta_limit > 0 &&
        c.x_limit > 0 && c.init_range >= 0))
    throw ConfigError("cartpole constants must be positive");
  const auto& p = pusher;
  if (!(p.link1 > 0 && p.link2 > 0 && p.mass1 > 0 && p.mass2 > 0 && p.joint_damping >= 0 && p.action_limit > 0 &&
        p.torque_gain > 0 && p.contact_radius > 0 && p.contact_stiffness >= 0 && p.contact_damping >= 0 &&
        p.ball_mass > 0 && p.ball_friction >= 0 && p.substeps >= 1 && p.target_radius > 0 && p.target_speed > 0))
    throw ConfigError("pusher constants out of range");
  if (!(p.ball_r_min >= 0 && p.ball_r_max > p.ball_r_min && p.target_r_min >= 0 && p.target_r_max > p.target_r_min))
    throw ConfigError("pusher sampling annuli must be non-empty");
}

void NoiseConfig::validate() const {
  if (!(action_noise_frac >= 0.0 && action_noise_frac <= 0.2))
    throw ConfigError("noise.action_noise_frac must lie in [0, 0.2]");
  if (!(strength_min >= 0.5 && strength_max <= 1.0 && strength_min <= strength_max))
    throw ConfigError("noise arm strength range must lie within [0.5, 1.0]");
}

}  // namespace pwm::env
