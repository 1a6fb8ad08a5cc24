#pragma once

#include <array>
#include <span>

#include "pwm/data/trajectory.hpp"
#include "pwm/env/cartpole.hpp"
#include "pwm/env/config.hpp"
#include "pwm/env/pusher.hpp"
#include "pwm/rng.hpp"

namespace pwm::env {

// a + eps, eps ~ N(0, (frac * range)^2) per dimension, clamped to +-limit.
// frac == 0 returns `a` untouched and draws nothing.
data::Vector apply_action_noise(std::span<const double> a, double frac, double limit, Rng& rng);
inline data::Vector apply_action_noise(std::span<const double> a, const NoiseConfig& nc, double limit, Rng& rng) {
  return apply_action_noise(a, nc.action_noise_frac, limit, rng);
}

std::array<double, 2> apply_arm_strength(std::array<double, 2> torques, double strength);

// Everything needed to start one episode. `arm_strength` is the hidden
// multiplier; it is never written into a Trajectory.
struct InitialCondition {
  data::Vector state;
  data::Vector target;  // pusher only
  double arm_strength = 1.0;
};

InitialCondition sample_initial_condition(const EnvConfig& cfg, const NoiseConfig& nc, Rng& rng);

// Copy of `cfg` with the episode's task parameters (pusher target) applied.
EnvConfig task_config(const EnvConfig& cfg, const InitialCondition& ic);

// The ground-truth system for one episode. Owns its noise stream.
class Simulator {
 public:
  Simulator(const EnvConfig& cfg, const NoiseConfig& nc, InitialCondition ic, std::uint64_t noise_seed);

  const data::Vector& state() const { return state_; }
  const EnvConfig& config() const { return cfg_; }
  // Applies noise / hidden strength to the commanded action and advances one step.
  const data::Vector& step(std::span<const double> action);
  std::size_t steps_taken() const { return steps_; }

 private:
  EnvConfig cfg_;
  NoiseConfig noise_;
  double strength_;
  data::Vector state_;
  Rng rng_;
  std::size_t steps_ = 0;
};

// Deterministic dynamics in vector form (no noise, unit strength).
data::Vector env_step(const EnvConfig& cfg, std::span<const double> state, std::span<const double> action);

bool task_success(const data::Trajectory& traj, const EnvConfig& cfg);

}  // namespace pwm::env
