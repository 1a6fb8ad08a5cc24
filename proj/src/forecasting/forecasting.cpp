#include "pwm/forecasting/forecasting.hpp"

#include <cmath>
#include <fstream>

#include "json.hpp"
#include "pwm/data/dataset.hpp"
#include "pwm/errors.hpp"
#include "pwm/hash.hpp"

namespace pwm::forecasting {

using nlohmann::json;
using nn::Tensor;

void ForecastConfig::validate() const {
  if (samples < 1) throw ConfigError("forecast ensemble size must be >= 1");
  if (horizon < 1) throw ConfigError("forecast horizon must be >= 1");
}

std::string Planner::hash() const {
  const auto& c = config;
  std::string s = "M=" + std::to_string(c.candidates) + ";h=" + std::to_string(c.horizon) +
                  ";R=" + std::to_string(c.iterations) + ";b=" + data::format_real(c.filter) +
                  ";sigma=" + data::format_real(c.sigma_frac) + ";gamma=" + data::format_real(c.gamma) +
                  ";limit=" + data::format_real(c.action_limit) + ";task=" + env::to_string(reward.task) +
                  ";target=" + data::format_reals(reward.target) + ";seed=" + std::to_string(seed);
  if (model) s += ";model=" + model_id(*model);
  return hash_hex(s);
}

std::string model_id(const models::WorldModel& m) {
  Fnv1a h;
  h.update(models::to_string(m.kind));
  for (auto d : {m.dims.state, m.dims.action, m.dims.latent, m.dims.hidden, m.dims.mlp_hidden}) h.update(&d, sizeof d);
  h.update(m.dims.residual ? "r" : "-");
  for (const auto* v : {&m.stats.state_mean, &m.stats.state_std, &m.stats.action_mean, &m.stats.action_std})
    h.update(data::format_reals(*v));
  for (const auto& [name, e] : m.params.entries()) {
    h.update(name);
    for (double x : e.value.span()) {
      const float f = static_cast<float>(x);
      h.update(&f, sizeof f);
    }
  }
  return h.hex();
}

namespace {

bool finite(const Vector& v) {
  for (double x : v)
    if (!std::isfinite(x)) return false;
  return true;
}

}  // namespace

Trajectory forecast_one(const Vector& s0, const models::WorldModel& model, const Planner& planner,
                        std::size_t horizon, Rng& model_rng, models::NoiseMode noise) {
  if (horizon < 1) throw ContractError("forecast horizon must be >= 1");
  if (!planner.model) throw ContractError("forecast needs a planning model");
  const auto& d = model.dims;
  if (s0.size() != d.state) throw DimensionError("initial state does not match the model");
  if (planner.config.action_dim != d.action) throw DimensionError("planner action dimension does not match the model");

  Trajectory traj;
  traj.target = planner.reward.target;
  if (planner.reward.task == env::EnvId::CartPole) traj.target.clear();
  traj.states.reserve(horizon + 1);
  traj.actions.reserve(horizon);
  traj.states.push_back(s0);

  models::Generator gen(model, 1, noise);
  Rng plan_rng(planner.seed, 0);
  auto plan_state = planning::initial_plan_state(planner.config, *planner.model);
  Vector s = s0;
  for (std::size_t t = 0; t < horizon && !traj.diverged; ++t) {
    try {
      Vector a = planning::plan_action(s, *planner.model, plan_state, planner.reward, planner.config, plan_rng);
      const Tensor next = gen.step(Tensor({1, d.state}, model.stats.normalize_state(s)),
                                   Tensor({1, d.action}, model.stats.normalize_action(a)), model_rng);
      Vector raw = model.stats.denormalize_state(next.span());
      if (!finite(raw)) throw ContractError("non-finite forecast state");
      traj.actions.push_back(std::move(a));
      traj.states.push_back(raw);
      s = std::move(raw);
    } catch (const ContractError&) {
      traj.diverged = true;
    } catch (const DivergenceError&) {
      traj.diverged = true;
    }
  }
  while (traj.actions.size() < horizon) {
    traj.actions.emplace_back(d.action, 0.0);
    traj.states.push_back(traj.states.back());
  }
  return traj;
}

ForecastEnsemble forecast_ensemble(const Vector& s0, const models::WorldModel& model, const Planner& planner,
                                   const ForecastConfig& cfg, const env::EnvConfig& env) {
  cfg.validate();
  if (env.state_dim() != model.dims.state || env.action_dim() != model.dims.action)
    throw FingerprintError(std::string("model does not match environment ") + env::to_string(env.id));
  ForecastEnsemble ens;
  ens.env_id = env::to_string(env.id);
  ens.state_dim = env.state_dim();
  ens.action_dim = env.action_dim();
  ens.dt = env.dt;
  ens.s0 = s0;
  if (env.id == env::EnvId::Pusher) ens.target = planner.reward.target;
  ens.provenance = {model_id(model), models::to_string(model.kind), model_id(*planner.model), planner.hash(),
                    cfg.seed, ""};
  ens.trajectories.resize(cfg.samples);

  auto run = [&](std::size_t k) {
    const auto sample_seed = mix_seed(cfg.seed, k);
    Rng rng(sample_seed);
    auto t = forecast_one(s0, model, planner, cfg.horizon, rng);
    t.env_id = ens.env_id;
    t.seed = sample_seed;
    return t;
  };
  if (model.kind == models::ModelKind::DetRnn) {
    // A point model consumes no noise: every sample is the same rollout.
    const auto t = run(0);
    for (std::size_t k = 0; k < cfg.samples; ++k) {
      ens.trajectories[k] = t;
      ens.trajectories[k].seed = mix_seed(cfg.seed, k);
    }
    return ens;
  }
  const auto n = static_cast<std::ptrdiff_t>(cfg.samples);
#pragma omp parallel for schedule(dynamic)
  for (std::ptrdiff_t k = 0; k < n; ++k) ens.trajectories[static_cast<std::size_t>(k)] = run(static_cast<std::size_t>(k));
  return ens;
}

std::string encode_ensemble(const ForecastEnsemble& e) {
  const auto& p = e.provenance;
  std::string s = "{\"format\":\"pwm-ensemble\",\"version\":" + std::to_string(kEnsembleFormatVersion) +
                  ",\"env\":\"" + e.env_id + "\",\"state_dim\":" + std::to_string(e.state_dim) +
                  ",\"action_dim\":" + std::to_string(e.action_dim) + ",\"dt\":" + data::format_real(e.dt) +
                  ",\"count\":" + std::to_string(e.size()) + ",\"s0\":" + data::format_reals(e.s0) +
                  ",\"target\":" + data::format_reals(e.target) + ",\"provenance\":{\"model_id\":\"" + p.model_id +
                  "\",\"model_kind\":\"" + p.model_kind + "\",\"planner_model_id\":\"" + p.planner_model_id +
                  "\",\"planner_hash\":\"" + p.planner_hash + "\",\"seed\":" + std::to_string(p.seed) +
                  ",\"config_hash\":\"" + p.config_hash + "\"}}\n";
  for (const auto& t : e.trajectories) s += data::encode_trajectory(t) + "\n";
  return s;
}

void save_ensemble(const std::filesystem::path& path, const ForecastEnsemble& ens) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot open " + path.string() + " for writing");
  out << encode_ensemble(ens);
  if (!out) throw FormatError("write failed for " + path.string());
}

ForecastEnsemble load_ensemble(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open ensemble " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw FormatError("empty ensemble file " + path.string());
  ForecastEnsemble e;
  std::size_t count = 0;
  try {
    const json h = json::parse(line);
    if (h.at("format").get<std::string>() != "pwm-ensemble") throw FormatError("not an ensemble file");
    if (h.at("version").get<int>() != kEnsembleFormatVersion) throw FormatError("unsupported ensemble version");
    e.env_id = h.at("env").get<std::string>();
    e.state_dim = h.at("state_dim").get<std::size_t>();
    e.action_dim = h.at("action_dim").get<std::size_t>();
    e.dt = h.at("dt").get<double>();
    count = h.at("count").get<std::size_t>();
    e.s0 = h.at("s0").get<Vector>();
    e.target = h.at("target").get<Vector>();
    const auto& p = h.at("provenance");
    e.provenance = {p.at("model_id").get<std::string>(),         p.at("model_kind").get<std::string>(),
                    p.at("planner_model_id").get<std::string>(), p.at("planner_hash").get<std::string>(),
                    p.at("seed").get<std::uint64_t>(),           p.at("config_hash").get<std::string>()};
  } catch (const json::exception& ex) {
    throw FormatError(std::string("ensemble header invalid: ") + ex.what());
  }
  if (e.s0.size() != e.state_dim) throw FormatError("ensemble initial state has the wrong dimension");
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    auto t = data::decode_trajectory(line, e.state_dim, e.action_dim);
    t.env_id = e.env_id;
    e.trajectories.push_back(std::move(t));
  }
  if (e.trajectories.size() != count) throw FormatError("ensemble truncated");
  return e;
}

}  // namespace pwm::forecasting
