#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "pwm/data/trajectory.hpp"
#include "pwm/env/config.hpp"

namespace pwm::data {

inline constexpr int kDatasetFormatVersion = 1;
inline constexpr double kStdFloor = 1e-6;

struct NormStats {
  Vector state_mean, state_std;
  Vector action_mean, action_std;

  Vector normalize_state(std::span<const double> s) const;
  Vector denormalize_state(std::span<const double> s) const;
  Vector normalize_action(std::span<const double> a) const;
  Vector denormalize_action(std::span<const double> a) const;
  friend bool operator==(const NormStats&, const NormStats&) = default;
};

// (x - mean) / std, and its inverse.
Vector normalize(std::span<const double> x, std::span<const double> mean, std::span<const double> std);
Vector denormalize(std::span<const double> x, std::span<const double> mean, std::span<const double> std);

// Per-dimension moments over every state / action of `trajs`; std floored at kStdFloor.
NormStats compute_stats(std::span<const Trajectory> trajs);

struct Dataset {
  std::string env_id;
  std::size_t state_dim = 0;
  std::size_t action_dim = 0;
  double dt = 0.0;
  int horizon = 0;
  std::uint64_t seed = 0;
  double action_noise_frac = 0.0;
  bool partially_observable = false;
  // The last round(validation_fraction * n) trajectories form the validation split.
  double validation_fraction = 0.1;
  NormStats stats;  // over the training split only
  std::vector<Trajectory> trajectories;
  std::string config_hash;  // stamp of the run configuration that produced the file

  std::size_t train_count() const;
  std::string fingerprint() const;
  friend bool operator==(const Dataset&, const Dataset&) = default;
};

std::string env_fingerprint(const env::EnvConfig& cfg);
// Throws FingerprintError when the dataset was collected for another environment.
void require_fingerprint(const Dataset& ds, const env::EnvConfig& cfg);

// Random-action episodes: randomized initial state, i.i.d. uniform commanded
// actions within the limits for `cfg.horizon` steps. Episode i draws from
// streams derived from (seed, i), so the result is independent of threading.
Dataset collect_random(const env::EnvConfig& cfg, const env::NoiseConfig& nc, std::size_t n_episodes,
                       std::uint64_t seed, double validation_fraction = 0.1);

// Structured-text format: one JSON header line then one JSON record per
// trajectory; reals written with 17 significant digits.
void save_dataset(const std::filesystem::path& path, const Dataset& ds);
Dataset load_dataset(const std::filesystem::path& path);

// Shared trajectory record encoding (also used by forecast ensembles).
std::string encode_trajectory(const Trajectory& t);
Trajectory decode_trajectory(const std::string& line, std::size_t state_dim, std::size_t action_dim);
std::string format_real(double v);
std::string format_reals(std::span<const double> v);

}  // namespace pwm::data
