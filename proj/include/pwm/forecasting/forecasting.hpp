#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "pwm/data/trajectory.hpp"
#include "pwm/env/config.hpp"
#include "pwm/models/models.hpp"
#include "pwm/planning/planning.hpp"

namespace pwm::forecasting {

using data::Trajectory;
using data::Vector;

inline constexpr int kEnsembleFormatVersion = 1;

struct ForecastConfig {
  std::size_t samples = 100;  // N
  std::size_t horizon = 100;  // T
  std::uint64_t seed = 0;

  void validate() const;
};

// Action selection shared by every forecast sample. The planner's random
// stream is seeded from `seed` alone, so samples differ only through the
// world model's own noise.
struct Planner {
  const models::WorldModel* model = nullptr;  // DetRNN planning model
  planning::PlannerConfig config;
  planning::RewardFunction reward;
  std::uint64_t seed = 0;

  std::string hash() const;
};

struct Provenance {
  std::string model_id;
  std::string model_kind;
  std::string planner_model_id;
  std::string planner_hash;
  std::uint64_t seed = 0;
  std::string config_hash;

  friend bool operator==(const Provenance&, const Provenance&) = default;
};

struct ForecastEnsemble {
  std::string env_id;
  std::size_t state_dim = 0;
  std::size_t action_dim = 0;
  double dt = 0.0;
  Vector s0;      // raw
  Vector target;  // task target (pusher), empty otherwise
  std::vector<Trajectory> trajectories;
  Provenance provenance;

  std::size_t size() const { return trajectories.size(); }
  friend bool operator==(const ForecastEnsemble&, const ForecastEnsemble&) = default;
};

// Digest of a model's kind, dimensions, statistics and 32-bit-rounded parameters.
std::string model_id(const models::WorldModel& m);

// Closed-loop rollout of the planner against the world model from the single
// observation s0. States are normalized internally and returned raw. A
// non-finite state or planner failure marks the trajectory diverged and the
// remaining steps repeat the last finite state with zero actions.
// NoiseMode::Zero replaces every model draw with 0 (mean rollout).
Trajectory forecast_one(const Vector& s0, const models::WorldModel& model, const Planner& planner,
                        std::size_t horizon, Rng& model_rng, models::NoiseMode noise = models::NoiseMode::Sample);

// N forecasts; sample k draws its model noise from stream (seed, k).
ForecastEnsemble forecast_ensemble(const Vector& s0, const models::WorldModel& model, const Planner& planner,
                                   const ForecastConfig& cfg, const env::EnvConfig& env);

// Structured-text file: provenance header line, then one trajectory record per line.
void save_ensemble(const std::filesystem::path& path, const ForecastEnsemble& ens);
ForecastEnsemble load_ensemble(const std::filesystem::path& path);
std::string encode_ensemble(const ForecastEnsemble& ens);

}  // namespace pwm::forecasting
