#include "pwm/assessment/evaluation.hpp"

#include "pwm/errors.hpp"
#include "pwm/planning/planning.hpp"

namespace pwm::assessment {

data::Trajectory real_episode(const env::EnvConfig& env, const env::NoiseConfig& noise,
                              const env::InitialCondition& ic, const forecasting::Planner& planner,
                              std::size_t horizon, std::uint64_t noise_seed) {
  if (!planner.model) throw ContractError("real episode needs a planning model");
  env::Simulator sim(env, noise, ic, noise_seed);
  data::Trajectory t;
  t.env_id = env::to_string(env.id);
  t.seed = noise_seed;
  t.action_noise_frac = noise.action_noise_frac;
  t.partially_observable = noise.partially_observable;
  t.target = ic.target;
  t.states.push_back(sim.state());
  Rng plan_rng(planner.seed, 0);
  auto plan_state = planning::initial_plan_state(planner.config, *planner.model);
  for (std::size_t k = 0; k < horizon; ++k) {
    auto a = planning::plan_action(sim.state(), *planner.model, plan_state, planner.reward, planner.config, plan_rng);
    t.states.push_back(sim.step(a));
    t.actions.push_back(std::move(a));
  }
  return t;
}

ForecastEnsemble real_ensemble(const env::EnvConfig& env, const env::NoiseConfig& noise,
                               const env::InitialCondition& ic, const forecasting::Planner& planner,
                               const forecasting::ForecastConfig& cfg) {
  cfg.validate();
  ForecastEnsemble ens;
  ens.env_id = env::to_string(env.id);
  ens.state_dim = env.state_dim();
  ens.action_dim = env.action_dim();
  ens.dt = env.dt;
  ens.s0 = ic.state;
  ens.target = ic.target;
  ens.provenance = {"real", "real", forecasting::model_id(*planner.model), planner.hash(), cfg.seed, ""};
  ens.trajectories.resize(cfg.samples);
  const auto n = static_cast<std::ptrdiff_t>(cfg.samples);
#pragma omp parallel for schedule(dynamic)
  for (std::ptrdiff_t k = 0; k < n; ++k) {
    const auto run_seed = mix_seed(cfg.seed, static_cast<std::uint64_t>(k));
    env::InitialCondition run = ic;
    if (noise.partially_observable) {
      Rng rng(run_seed, 1);
      run.arm_strength = rng.uniform(noise.strength_min, noise.strength_max);
    }
    ens.trajectories[static_cast<std::size_t>(k)] = real_episode(env, noise, run, planner, cfg.horizon,
                                                                 mix_seed(run_seed, 0));
  }
  return ens;
}

Instance make_instance(const env::EnvConfig& env, const env::NoiseConfig& noise,
                       const forecasting::Planner& planner_template, std::uint64_t seed, std::size_t i) {
  const auto inst_seed = mix_seed(seed, i);
  Rng init_rng(inst_seed, 0);
  Instance inst;
  inst.ic = env::sample_initial_condition(env, noise, init_rng);
  inst.task = env::task_config(env, inst.ic);
  inst.planner = planner_template;
  if (env.id == env::EnvId::Pusher) inst.planner.reward.target = inst.ic.target;
  inst.planner.seed = mix_seed(inst_seed, 2);
  inst.real_seed = mix_seed(inst_seed, 1);
  inst.forecast_seed = mix_seed(inst_seed, 3);
  return inst;
}

void EvaluationConfig::validate() const {
  if (instances < 1) throw ConfigError("evaluation needs at least one instance");
  if (samples < 1) throw ConfigError("forecast ensemble size must be >= 1");
  if (horizon < 1) throw ConfigError("evaluation horizon must be >= 1");
  if (real_rollouts < 1) throw ConfigError("real rollouts per instance must be >= 1");
}

EvaluationResult evaluate(const env::EnvConfig& env, const env::NoiseConfig& noise,
                          const std::vector<const models::WorldModel*>& models,
                          const forecasting::Planner& planner_template, const EvaluationConfig& cfg) {
  cfg.validate();
  if (models.empty()) throw ConfigError("evaluation needs at least one model");
  EvaluationResult result;
  result.instances.resize(cfg.instances);
  const auto n = static_cast<std::ptrdiff_t>(cfg.instances);
#pragma omp parallel for schedule(dynamic)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    const auto inst = make_instance(env, noise, planner_template, cfg.seed, static_cast<std::size_t>(i));
    InstanceResult r;
    r.index = static_cast<std::size_t>(i);
    r.s0 = inst.ic.state;
    r.target = inst.ic.target;
    for (std::size_t k = 0; k < cfg.real_rollouts; ++k) {
      const auto t = real_episode(env, noise, inst.ic, inst.planner, cfg.horizon, mix_seed(inst.real_seed, k));
      r.outcomes.push_back(env::task_success(t, inst.task) ? 1 : 0);
    }
    const forecasting::ForecastConfig fc{cfg.samples, cfg.horizon, inst.forecast_seed};
    for (const auto* m : models) {
      const auto ens = forecasting::forecast_ensemble(inst.ic.state, *m, inst.planner, fc, env);
      r.forecasts.push_back(success_probability(ens, task_success_fn(inst.task)));
    }
    result.instances[static_cast<std::size_t>(i)] = std::move(r);
  }
  result.records.resize(models.size());
  for (const auto& r : result.instances)
    for (std::size_t m = 0; m < models.size(); ++m)
      for (int o : r.outcomes) result.records[m].push_back({r.forecasts[m], o, r.index});
  return result;
}

}  // namespace pwm::assessment
