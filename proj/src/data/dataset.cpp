#include "pwm/data/dataset.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "json.hpp"
#include "pwm/env/environment.hpp"
#include "pwm/errors.hpp"
#include "pwm/rng.hpp"

namespace pwm::data {

using nlohmann::json;

Vector normalize(std::span<const double> x, std::span<const double> mean, std::span<const double> std) {
  if (x.size() != mean.size() || x.size() != std.size()) throw DimensionError("normalize: dimension mismatch");
  Vector out(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = (x[i] - mean[i]) / std[i];
  return out;
}

Vector denormalize(std::span<const double> x, std::span<const double> mean, std::span<const double> std) {
  if (x.size() != mean.size() || x.size() != std.size()) throw DimensionError("denormalize: dimension mismatch");
  Vector out(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = x[i] * std[i] + mean[i];
  return out;
}

Vector NormStats::normalize_state(std::span<const double> s) const { return normalize(s, state_mean, state_std); }
Vector NormStats::denormalize_state(std::span<const double> s) const {
  return denormalize(s, state_mean, state_std);
}
Vector NormStats::normalize_action(std::span<const double> a) const {
  return normalize(a, action_mean, action_std);
}
Vector NormStats::denormalize_action(std::span<const double> a) const {
  return denormalize(a, action_mean, action_std);
}

namespace {

void moments(const std::vector<const Vector*>& rows, std::size_t dim, Vector& mean, Vector& sd) {
  mean.assign(dim, 0.0);
  sd.assign(dim, 0.0);
  if (rows.empty()) {
    sd.assign(dim, 1.0);
    return;
  }
  for (const auto* r : rows)
    for (std::size_t i = 0; i < dim; ++i) mean[i] += (*r)[i];
  for (auto& m : mean) m /= static_cast<double>(rows.size());
  for (const auto* r : rows)
    for (std::size_t i = 0; i < dim; ++i) {
      const double d = (*r)[i] - mean[i];
      sd[i] += d * d;
    }
  for (auto& v : sd) v = std::max(std::sqrt(v / static_cast<double>(rows.size())), kStdFloor);
}

}  // namespace

NormStats compute_stats(std::span<const Trajectory> trajs) {
  if (trajs.empty()) throw ContractError("compute_stats: no trajectories");
  std::vector<const Vector*> states, actions;
  for (const auto& t : trajs) {
    for (const auto& s : t.states) states.push_back(&s);
    for (const auto& a : t.actions) actions.push_back(&a);
  }
  NormStats st;
  moments(states, trajs[0].states.at(0).size(), st.state_mean, st.state_std);
  const std::size_t adim = trajs[0].actions.empty() ? 0 : trajs[0].actions[0].size();
  moments(actions, adim, st.action_mean, st.action_std);
  return st;
}

std::size_t Dataset::train_count() const {
  const auto n = trajectories.size();
  const auto val = static_cast<std::size_t>(std::llround(validation_fraction * static_cast<double>(n)));
  return n > val ? n - val : 0;
}

std::string Dataset::fingerprint() const {
  return env_id + "/" + std::to_string(state_dim) + "/" + std::to_string(action_dim) + "/" + format_real(dt) + "/" +
         std::to_string(horizon);
}

std::string env_fingerprint(const env::EnvConfig& cfg) {
  return std::string(env::to_string(cfg.id)) + "/" + std::to_string(cfg.state_dim()) + "/" +
         std::to_string(cfg.action_dim()) + "/" + format_real(cfg.dt) + "/" + std::to_string(cfg.horizon);
}

void require_fingerprint(const Dataset& ds, const env::EnvConfig& cfg) {
  const auto want = env_fingerprint(cfg);
  if (ds.fingerprint() != want)
    throw FingerprintError("dataset fingerprint " + ds.fingerprint() + " does not match environment " + want);
}

Dataset collect_random(const env::EnvConfig& cfg, const env::NoiseConfig& nc, std::size_t n_episodes,
                       std::uint64_t seed, double validation_fraction) {
  if (n_episodes < 1) throw ContractError("collect_random: need at least one episode");
  cfg.validate();
  nc.validate();
  Dataset ds;
  ds.env_id = env::to_string(cfg.id);
  ds.state_dim = cfg.state_dim();
  ds.action_dim = cfg.action_dim();
  ds.dt = cfg.dt;
  ds.horizon = cfg.horizon;
  ds.seed = seed;
  ds.action_noise_frac = nc.action_noise_frac;
  ds.partially_observable = nc.partially_observable;
  ds.validation_fraction = validation_fraction;
  ds.trajectories.resize(n_episodes);

  const double limit = cfg.action_limit();
  const auto n = static_cast<std::ptrdiff_t>(n_episodes);
#pragma omp parallel for schedule(dynamic)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    const auto episode_seed = mix_seed(seed, static_cast<std::uint64_t>(i));
    Rng init_rng(episode_seed, 0), action_rng(episode_seed, 1);
    auto ic = env::sample_initial_condition(cfg, nc, init_rng);
    Trajectory t;
    t.env_id = ds.env_id;
    t.seed = episode_seed;
    t.action_noise_frac = nc.action_noise_frac;
    t.partially_observable = nc.partially_observable;
    t.target = ic.target;
    env::Simulator sim(cfg, nc, ic, mix_seed(episode_seed, 2));
    t.states.push_back(sim.state());
    for (int k = 0; k < cfg.horizon; ++k) {
      Vector a(cfg.action_dim());
      for (auto& v : a) v = action_rng.uniform(-limit, limit);
      t.states.push_back(sim.step(a));
      t.actions.push_back(std::move(a));
    }
    ds.trajectories[static_cast<std::size_t>(i)] = std::move(t);
  }
  const auto n_train = std::max<std::size_t>(1, ds.train_count());
  ds.stats = compute_stats(std::span<const Trajectory>(ds.trajectories.data(), n_train));
  return ds;
}

std::string format_real(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string format_reals(std::span<const double> v) {
  std::string s = "[";
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) s += ',';
    s += format_real(v[i]);
  }
  return s + "]";
}

namespace {

std::string flat(const std::vector<Vector>& rows) {
  std::string s = "[";
  bool first = true;
  for (const auto& r : rows)
    for (double v : r) {
      if (!first) s += ',';
      first = false;
      s += format_real(v);
    }
  return s + "]";
}

std::vector<Vector> unflat(const json& arr, std::size_t dim, std::size_t rows) {
  if (!arr.is_array() || arr.size() != dim * rows) throw FormatError("trajectory array length does not match header");
  std::vector<Vector> out(rows, Vector(dim));
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t c = 0; c < dim; ++c) out[r][c] = arr[r * dim + c].get<double>();
  return out;
}

Vector to_vector(const json& j) { return j.get<Vector>(); }

}  // namespace

std::string encode_trajectory(const Trajectory& t) {
  std::string s = "{\"seed\":" + std::to_string(t.seed) + ",\"steps\":" + std::to_string(t.steps()) +
                  ",\"diverged\":" + (t.diverged ? "true" : "false") + ",\"target\":" + format_reals(t.target) +
                  ",\"states\":" + flat(t.states) + ",\"actions\":" + flat(t.actions) + "}";
  return s;
}

Trajectory decode_trajectory(const std::string& line, std::size_t state_dim, std::size_t action_dim) {
  json j;
  try {
    j = json::parse(line);
  } catch (const json::exception& e) {
    throw FormatError(std::string("malformed trajectory record: ") + e.what());
  }
  try {
    Trajectory t;
    t.seed = j.at("seed").get<std::uint64_t>();
    const auto steps = j.at("steps").get<std::size_t>();
    t.diverged = j.at("diverged").get<bool>();
    t.target = to_vector(j.at("target"));
    t.states = unflat(j.at("states"), state_dim, steps + 1);
    t.actions = unflat(j.at("actions"), action_dim, steps);
    return t;
  } catch (const json::exception& e) {
    throw FormatError(std::string("invalid trajectory record: ") + e.what());
  }
}

void save_dataset(const std::filesystem::path& path, const Dataset& ds) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot open " + path.string() + " for writing");
  out << "{\"format\":\"pwm-dataset\",\"version\":" << kDatasetFormatVersion << ",\"env\":\"" << ds.env_id
      << "\",\"state_dim\":" << ds.state_dim << ",\"action_dim\":" << ds.action_dim
      << ",\"dt\":" << format_real(ds.dt) << ",\"horizon\":" << ds.horizon << ",\"count\":" << ds.trajectories.size()
      << ",\"seed\":" << ds.seed << ",\"action_noise_frac\":" << format_real(ds.action_noise_frac)
      << ",\"partially_observable\":" << (ds.partially_observable ? "true" : "false")
      << ",\"validation_fraction\":" << format_real(ds.validation_fraction)
      << ",\"stats\":{\"state_mean\":" << format_reals(ds.stats.state_mean)
      << ",\"state_std\":" << format_reals(ds.stats.state_std)
      << ",\"action_mean\":" << format_reals(ds.stats.action_mean)
      << ",\"action_std\":" << format_reals(ds.stats.action_std) << "},\"config_hash\":\"" << ds.config_hash
      << "\"}\n";
  for (const auto& t : ds.trajectories) out << encode_trajectory(t) << '\n';
  if (!out) throw FormatError("write failed for " + path.string());
}

Dataset load_dataset(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open dataset " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw FormatError("empty dataset file " + path.string());
  json h;
  try {
    h = json::parse(line);
  } catch (const json::exception&) {
    throw FormatError("dataset header is not valid structured text");
  }
  Dataset ds;
  std::size_t count = 0;
  try {
    if (h.at("format").get<std::string>() != "pwm-dataset") throw FormatError("not a dataset file");
    if (h.at("version").get<int>() != kDatasetFormatVersion)
      throw FormatError("unsupported dataset version " + std::to_string(h.at("version").get<int>()));
    ds.env_id = h.at("env").get<std::string>();
    ds.state_dim = h.at("state_dim").get<std::size_t>();
    ds.action_dim = h.at("action_dim").get<std::size_t>();
    ds.dt = h.at("dt").get<double>();
    ds.horizon = h.at("horizon").get<int>();
    count = h.at("count").get<std::size_t>();
    ds.seed = h.at("seed").get<std::uint64_t>();
    ds.action_noise_frac = h.at("action_noise_frac").get<double>();
    ds.partially_observable = h.at("partially_observable").get<bool>();
    ds.validation_fraction = h.at("validation_fraction").get<double>();
    const auto& st = h.at("stats");
    ds.stats.state_mean = to_vector(st.at("state_mean"));
    ds.stats.state_std = to_vector(st.at("state_std"));
    ds.stats.action_mean = to_vector(st.at("action_mean"));
    ds.stats.action_std = to_vector(st.at("action_std"));
    ds.config_hash = h.value("config_hash", std::string());
  } catch (const json::exception& e) {
    throw FormatError(std::string("dataset header missing field: ") + e.what());
  }
  if (ds.stats.state_mean.size() != ds.state_dim || ds.stats.state_std.size() != ds.state_dim ||
      ds.stats.action_mean.size() != ds.action_dim || ds.stats.action_std.size() != ds.action_dim)
    throw FormatError("normalization stats do not match header dimensions");

  ds.trajectories.reserve(count);
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    auto t = decode_trajectory(line, ds.state_dim, ds.action_dim);
    t.env_id = ds.env_id;
    t.action_noise_frac = ds.action_noise_frac;
    t.partially_observable = ds.partially_observable;
    ds.trajectories.push_back(std::move(t));
  }
  if (ds.trajectories.size() != count)
    throw FormatError("dataset truncated: header declares " + std::to_string(count) + " trajectories, found " +
                      std::to_string(ds.trajectories.size()));
  return ds;
}

}  // namespace pwm::data
