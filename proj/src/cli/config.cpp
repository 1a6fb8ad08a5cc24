#include "pwm/cli/config.hpp"

#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <numbers>
#include <sstream>

#include "pwm/data/dataset.hpp"
#include "pwm/errors.hpp"
#include "pwm/hash.hpp"

namespace pwm::cli {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::uint64_t to_uint(const std::string& key, const std::string& v) {
  if (v.empty() || v.find_first_not_of("0123456789") != std::string::npos)
    throw ConfigError(key + ": expected a non-negative integer, got '" + v + "'");
  try {
    return std::stoull(v);
  } catch (const std::out_of_range&) {
    throw ConfigError(key + ": integer out of range");
  }
}

double to_real(const std::string& key, const std::string& v) {
  std::size_t used = 0;
  double x = 0.0;
  try {
    x = std::stod(v, &used);
  } catch (const std::logic_error&) {
    used = 0;
  }
  if (used == 0 || used != v.size() || !std::isfinite(x)) throw ConfigError(key + ": expected a number, got '" + v + "'");
  return x;
}

bool to_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  throw ConfigError(key + ": expected true or false, got '" + v + "'");
}

std::string real(double v) { return data::format_real(v); }
std::string boolean(bool b) { return b ? "true" : "false"; }

constexpr double kDeg = std::numbers::pi / 180.0;

struct Key {
  std::string name;  // section.key
  std::function<void(RunConfig&, const std::string&, const std::string&)> set;
  std::function<std::string(const RunConfig&)> get;
};

#define PWM_SIZE(NAME, FIELD)                                                                                    \
  Key {                                                                                                          \
    NAME, [](RunConfig& c, const std::string& k, const std::string& v) { c.FIELD = to_uint(k, v); },            \
        [](const RunConfig& c) { return std::to_string(c.FIELD); }                                               \
  }
#define PWM_REAL(NAME, FIELD)                                                                                    \
  Key {                                                                                                          \
    NAME, [](RunConfig& c, const std::string& k, const std::string& v) { c.FIELD = to_real(k, v); },            \
        [](const RunConfig& c) { return real(c.FIELD); }                                                         \
  }
#define PWM_BOOL(NAME, FIELD)                                                                                    \
  Key {                                                                                                          \
    NAME, [](RunConfig& c, const std::string& k, const std::string& v) { c.FIELD = to_bool(k, v); },            \
        [](const RunConfig& c) { return boolean(c.FIELD); }                                                      \
  }

const std::vector<Key>& keys() {
  static const std::vector<Key> k = {
      // env.id is applied before everything else (it selects the defaults)
      {"env.id", [](RunConfig&, const std::string&, const std::string&) {},
       [](const RunConfig& c) { return std::string(env::to_string(c.env.id)); }},
      {"env.horizon",
       [](RunConfig& c, const std::string& k, const std::string& v) {
         const auto h = to_uint(k, v);
         if (h < 1 || h > 100000) throw ConfigError(k + ": must be in [1, 100000]");
         c.env.horizon = static_cast<int>(h);
       },
       [](const RunConfig& c) { return std::to_string(c.env.horizon); }},
      {"env.theta_limit_deg",
       [](RunConfig& c, const std::string& k, const std::string& v) { c.env.cartpole.theta_limit = to_real(k, v) * kDeg; },
       [](const RunConfig& c) { return real(c.env.cartpole.theta_limit / kDeg); }},
      PWM_REAL("env.x_limit", env.cartpole.x_limit),
      PWM_REAL("env.target_radius", env.pusher.target_radius),
      PWM_REAL("env.target_speed", env.pusher.target_speed),
      PWM_REAL("noise.action_noise_frac", noise.action_noise_frac),
      PWM_BOOL("noise.partially_observable", noise.partially_observable),
      PWM_REAL("noise.strength_min", noise.strength_min),
      PWM_REAL("noise.strength_max", noise.strength_max),
      PWM_SIZE("data.episodes", episodes),
      PWM_REAL("data.validation_fraction", validation_fraction),
      PWM_SIZE("model.latent", dims.latent),
      PWM_SIZE("model.hidden", dims.hidden),
      PWM_SIZE("model.mlp_hidden", dims.mlp_hidden),
      PWM_BOOL("model.residual", dims.residual),
      {"training.epochs",
       [](RunConfig& c, const std::string& k, const std::string& v) {
         const auto e = to_uint(k, v);
         if (e > 1000000) throw ConfigError(k + ": too large");
         c.train.epochs = static_cast<int>(e);
       },
       [](const RunConfig& c) { return std::to_string(c.train.epochs); }},
      PWM_SIZE("training.batch_size", train.batch_size),
      PWM_REAL("training.learning_rate", train.learning_rate),
      PWM_REAL("training.grad_clip", train.grad_clip),
      {"beta.mode",
       [](RunConfig& c, const std::string&, const std::string& v) { c.beta.mode = training::beta_mode_from_string(v); },
       [](const RunConfig& c) { return std::string(training::to_string(c.beta.mode)); }},
      PWM_REAL("beta.beta_max", beta.beta_max),
      PWM_REAL("beta.warmup", beta.warmup),
      {"beta.cycles",
       [](RunConfig& c, const std::string& k, const std::string& v) {
         const auto n = to_uint(k, v);
         if (n > 1000000) throw ConfigError(k + ": too large");
         c.beta.cycles = static_cast<int>(n);
       },
       [](const RunConfig& c) { return std::to_string(c.beta.cycles); }},
      PWM_SIZE("planner.candidates", planner.candidates),
      PWM_SIZE("planner.horizon", planner.horizon),
      PWM_SIZE("planner.iterations", planner.iterations),
      PWM_REAL("planner.filter", planner.filter),
      PWM_REAL("planner.sigma_frac", planner.sigma_frac),
      PWM_REAL("planner.gamma", planner.gamma),
      PWM_SIZE("forecast.samples", samples),
      PWM_SIZE("assessment.instances", instances),
      PWM_SIZE("assessment.real_rollouts", real_rollouts),
      PWM_SIZE("assessment.bins", bins),
      PWM_BOOL("assessment.position_only", position_only),
      {"run.seed", [](RunConfig& c, const std::string& k, const std::string& v) { c.seed = to_uint(k, v); },
       [](const RunConfig& c) { return std::to_string(c.seed); }},
      {"run.out", [](RunConfig& c, const std::string&, const std::string& v) { c.out = v; },
       [](const RunConfig& c) { return c.out.string(); }},
  };
  return k;
}

#undef PWM_SIZE
#undef PWM_REAL
#undef PWM_BOOL

const Key* find_key(const std::string& name) {
  for (const auto& k : keys())
    if (k.name == name) return &k;
  return nullptr;
}

}  // namespace

void RunConfig::validate() const {
  env.validate();
  noise.validate();
  if (episodes < 1) throw ConfigError("data.episodes must be >= 1");
  if (dims.latent < 1 || dims.hidden < 1 || dims.mlp_hidden < 1) throw ConfigError("model sizes must be >= 1");
  if (dims.state != env.state_dim() || dims.action != env.action_dim())
    throw ConfigError("model dimensions do not match the environment");
  train.validate();
  beta.validate();
  planner.validate();
  if (samples < 1) throw ConfigError("forecast.samples must be >= 1");
  if (instances < 1) throw ConfigError("assessment.instances must be >= 1");
  if (real_rollouts < 1) throw ConfigError("assessment.real_rollouts must be >= 1");
  if (bins < 1) throw ConfigError("assessment.bins must be >= 1");
}

std::string RunConfig::canonical() const {
  std::string s;
  for (const auto& k : keys())
    if (k.name != "run.out") s += k.name + " = " + k.get(*this) + "\n";
  return s;
}

std::string RunConfig::hash() const { return hash_hex(canonical()); }

std::uint64_t RunConfig::collect_seed() const { return mix_seed(seed, 1); }
std::uint64_t RunConfig::train_seed(models::ModelKind kind) const {
  return mix_seed(mix_seed(seed, 2), static_cast<std::uint64_t>(kind));
}
std::uint64_t RunConfig::evaluate_seed() const { return mix_seed(seed, 4); }

RunConfig parse_config(const std::string& text) {
  std::map<std::string, std::pair<std::string, int>> values;
  std::istringstream in(text);
  std::string line, section;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto cut = line.find_first_of("#;");
    if (cut != std::string::npos) line.erase(cut);
    line = trim(line);
    if (line.empty()) continue;
    const auto where = " (line " + std::to_string(lineno) + ")";
    if (line.front() == '[') {
      if (line.back() != ']') throw ConfigError("malformed section header" + where);
      section = trim(line.substr(1, line.size() - 2));
      bool known = false;
      for (const auto& k : keys()) known = known || k.name.rfind(section + ".", 0) == 0;
      if (!known) throw ConfigError("unknown section [" + section + "]" + where);
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError("expected key = value" + where);
    if (section.empty()) throw ConfigError("key outside of any section" + where);
    const auto name = section + "." + trim(line.substr(0, eq));
    if (!find_key(name)) throw ConfigError("unknown key " + name + where);
    if (values.count(name)) throw ConfigError("duplicate key " + name + where);
    values[name] = {trim(line.substr(eq + 1)), lineno};
  }

  RunConfig c;
  if (auto it = values.find("env.id"); it != values.end()) {
    try {
      c.env = env::env_id_from_string(it->second.first) == env::EnvId::Pusher ? env::EnvConfig::pusher_default()
                                                                               : env::EnvConfig::cartpole_default();
    } catch (const std::exception&) {
      throw ConfigError("env.id: unknown environment '" + it->second.first + "'");
    }
  }
  for (const auto& [name, v] : values) {
    try {
      find_key(name)->set(c, name, v.first);
    } catch (const ConfigError& e) {
      throw ConfigError(std::string(e.what()) + " (line " + std::to_string(v.second) + ")");
    }
  }
  c.dims.state = c.env.state_dim();
  c.dims.action = c.env.action_dim();
  c.planner.action_limit = c.env.action_limit();
  c.planner.action_dim = c.env.action_dim();
  c.train.validation_fraction = c.validation_fraction;
  c.validate();
  return c;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read config " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

}  // namespace pwm::cli
