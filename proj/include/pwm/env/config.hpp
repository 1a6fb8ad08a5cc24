#pragma once

#include <array>
#include <cstdint>
#include <numbers>
#include <string>

namespace pwm::env {

enum class EnvId : std::uint8_t { CartPole, Pusher };

const char* to_string(EnvId id);
EnvId env_id_from_string(const std::string& s);

struct CartPoleParams {
  double cart_mass = 1.0;          // kg
  double pole_mass = 0.1;          // kg
  double pole_half_length = 0.5;   // m
  double gravity = 9.8;            // m/s^2
  double force_limit = 10.0;       // N
  double theta_limit = 12.0 * std::numbers::pi / 180.0;  // rad
  double x_limit = 2.4;            // m
  double init_range = 0.05;        // initial state uniform in +-init_range
};

// Planar two-link arm with point masses at the elbow and the fingertip,
// moving in the horizontal plane, plus a ball on the ground plane.
struct PusherParams {
  double link1 = 0.1;              // m
  double link2 = 0.11;             // m
  double mass1 = 0.05;             // kg, at the elbow
  double mass2 = 0.05;             // kg, at the fingertip
  double joint_damping = 0.01;     // N m s / rad
  double action_limit = 1.0;       // |control| per joint
  double torque_gain = 0.05;       // N m per unit control
  double contact_radius = 0.035;   // m
  double contact_stiffness = 500;  // N/m
  double contact_damping = 2.0;    // N s/m
  double ball_mass = 0.05;         // kg
  double ball_friction = 0.5;      // 1/s, exponential velocity decay
  int substeps = 10;
  std::array<double, 2> target{0.1, 0.0};  // m
  double target_radius = 0.05;     // m
  double target_speed = 0.10;      // m/s
  // Initial-condition law.
  double ball_r_min = 0.06, ball_r_max = 0.16;
  double target_r_min = 0.05, target_r_max = 0.17;
};

struct EnvConfig {
  EnvId id = EnvId::CartPole;
  double dt = 0.02;   // s
  int horizon = 100;  // steps
  CartPoleParams cartpole;
  PusherParams pusher;

  static EnvConfig cartpole_default();
  static EnvConfig pusher_default();

  std::size_t state_dim() const { return id == EnvId::CartPole ? 4 : 12; }
  std::size_t action_dim() const { return id == EnvId::CartPole ? 1 : 2; }
  double action_limit() const { return id == EnvId::CartPole ? cartpole.force_limit : pusher.action_limit; }
  // Throws ConfigError when a constant is out of range.
  void validate() const;
};

struct NoiseConfig {
  double action_noise_frac = 0.0;  // std as a fraction of the action range, in [0, 0.2]
  bool partially_observable = false;
  double strength_min = 0.5;       // hidden arm-strength range (pusher only)
  double strength_max = 1.0;
  std::uint64_t seed = 0;

  void validate() const;
};

}  // namespace pwm::env
