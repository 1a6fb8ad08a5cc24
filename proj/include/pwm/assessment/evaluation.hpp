#pragma once

#include <vector>

#include "pwm/assessment/assessment.hpp"
#include "pwm/env/environment.hpp"
#include "pwm/forecasting/forecasting.hpp"

namespace pwm::assessment {

// Closed-loop run of the planner on the true system from `ic`. The planner
// stream is seeded exactly as in forecast_one; the system's noise stream is
// independent.
data::Trajectory real_episode(const env::EnvConfig& env, const env::NoiseConfig& noise,
                              const env::InitialCondition& ic, const forecasting::Planner& planner,
                              std::size_t horizon, std::uint64_t noise_seed);

// N real episodes from one initial state, each with its own noise stream
// (seed, k). Under partial observability the hidden arm strength is redrawn
// per episode. Packaged like a forecast ensemble.
ForecastEnsemble real_ensemble(const env::EnvConfig& env, const env::NoiseConfig& noise,
                               const env::InitialCondition& ic, const forecasting::Planner& planner,
                               const forecasting::ForecastConfig& cfg);

struct EvaluationConfig {
  std::size_t instances = 200;
  std::size_t samples = 100;   // forecast ensemble size N
  std::size_t horizon = 100;   // T
  std::size_t real_rollouts = 1;  // records per instance; > 1 reduces outcome variance
  std::uint64_t seed = 0;

  void validate() const;
};

struct InstanceResult {
  std::size_t index = 0;
  data::Vector s0;
  data::Vector target;
  std::vector<int> outcomes;        // one per real rollout
  std::vector<double> forecasts;    // one per model
};

struct EvaluationResult {
  std::vector<InstanceResult> instances;
  // records[m] pairs model m's forecast with every real outcome.
  std::vector<std::vector<BrierRecord>> records;
};

// Everything evaluation instance i is built from: initial condition drawn
// from stream (seed, i), task, planner (seeded per instance, pusher reward
// aimed at the drawn target), and the seeds of its forecasts and real rollouts.
struct Instance {
  env::InitialCondition ic;
  env::EnvConfig task;
  forecasting::Planner planner;
  std::uint64_t forecast_seed = 0;
  std::uint64_t real_seed = 0;  // rollout k uses mix_seed(real_seed, k)
};

Instance make_instance(const env::EnvConfig& env, const env::NoiseConfig& noise,
                       const forecasting::Planner& planner_template, std::uint64_t seed, std::size_t i);

// Instance i: initial condition from stream (seed, i); the real outcome and
// each model's N-sample success probability from the same initial state.
EvaluationResult evaluate(const env::EnvConfig& env, const env::NoiseConfig& noise,
                          const std::vector<const models::WorldModel*>& models,
                          const forecasting::Planner& planner_template, const EvaluationConfig& cfg);

}  // namespace pwm::assessment
