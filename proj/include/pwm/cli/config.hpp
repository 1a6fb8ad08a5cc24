#pragma once

#include <filesystem>
#include <string>

#include "pwm/env/config.hpp"
#include "pwm/models/models.hpp"
#include "pwm/planning/planning.hpp"
#include "pwm/training/training.hpp"

namespace pwm::cli {

// Everything a run needs. Read from a sectioned key = value text file:
//
//   [env]        id, horizon, theta_limit_deg, x_limit, target_radius, target_speed
//   [noise]      action_noise_frac, partially_observable, strength_min, strength_max
//   [data]       episodes, validation_fraction
//   [model]      latent, hidden, mlp_hidden, residual
//   [training]   epochs, batch_size, learning_rate, grad_clip
//   [beta]       mode, beta_max, warmup, cycles
//   [planner]    candidates, horizon, iterations, filter, sigma_frac, gamma
//   [forecast]   samples
//   [assessment] instances, real_rollouts, bins, position_only
//   [run]        seed, out
//
// '#' and ';' start comments. Unknown sections or keys are errors.
struct RunConfig {
  env::EnvConfig env = env::EnvConfig::cartpole_default();
  env::NoiseConfig noise;
  std::size_t episodes = 2000;
  double validation_fraction = 0.1;
  models::ModelDims dims;
  training::TrainConfig train;
  training::BetaSchedule beta;
  planning::PlannerConfig planner;
  std::size_t samples = 100;
  std::size_t instances = 200;
  std::size_t real_rollouts = 1;
  std::size_t bins = 10;
  bool position_only = false;
  std::uint64_t seed = 0;
  std::filesystem::path out = "out";

  // Validates every section; throws ConfigError.
  void validate() const;
  // Canonical key = value listing of every setting except the output location.
  std::string canonical() const;
  // 16-hex-digit digest of canonical().
  std::string hash() const;

  // Seeds of the pipeline stages, all derived from `seed`.
  std::uint64_t collect_seed() const;
  std::uint64_t train_seed(models::ModelKind kind) const;
  std::uint64_t evaluate_seed() const;
};

RunConfig parse_config(const std::string& text);
RunConfig load_config(const std::filesystem::path& path);

}  // namespace pwm::cli
