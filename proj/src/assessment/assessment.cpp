#include "pwm/assessment/assessment.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <regex>

#include "pwm/data/dataset.hpp"
#include "pwm/env/cartpole.hpp"
#include "pwm/env/environment.hpp"
#include "pwm/env/pusher.hpp"
#include "pwm/errors.hpp"

namespace pwm::assessment {

double success_probability(const ForecastEnsemble& ens, const SuccessFn& success) {
  if (ens.size() == 0) throw ContractError("success probability of an empty ensemble");
  std::size_t k = 0;
  for (const auto& t : ens.trajectories) k += success(t) ? 1 : 0;
  return static_cast<double>(k) / static_cast<double>(ens.size());
}

SuccessFn task_success_fn(const env::EnvConfig& env) {
  return [env](const data::Trajectory& t) { return env::task_success(t, env); };
}

const char* to_string(Criterion c) {
  switch (c) {
    case Criterion::TimeToTarget:
      return "time_to_target";
    case Criterion::StuckTime:
      return "stuck_time";
    case Criterion::FirstContactTime:
      return "first_contact_time";
    case Criterion::MaxBallSpeed:
      return "max_ball_speed";
    case Criterion::UprightDuration:
      return "upright_duration";
  }
  return "?";
}

Criterion criterion_from_string(const std::string& s) {
  for (auto c : {Criterion::TimeToTarget, Criterion::StuckTime, Criterion::FirstContactTime, Criterion::MaxBallSpeed,
                 Criterion::UprightDuration})
    if (s == to_string(c)) return c;
  if (s == "cartpole_upright_duration") return Criterion::UprightDuration;
  throw ConfigError("unknown outcome criterion '" + s + "'");
}

const char* units(Criterion c) { return c == Criterion::MaxBallSpeed ? "m/s" : "s"; }

const char* describe(Criterion c) {
  switch (c) {
    case Criterion::TimeToTarget:
      return "time to target";
    case Criterion::StuckTime:
      return "joint stuck time";
    case Criterion::FirstContactTime:
      return "time to first contact";
    case Criterion::MaxBallSpeed:
      return "maximum ball speed";
    case Criterion::UprightDuration:
      return "pole upright duration";
  }
  return "?";
}

bool compatible(Criterion c, env::EnvId env) {
  return (c == Criterion::UprightDuration) == (env == env::EnvId::CartPole);
}

std::vector<double> OutcomeDistribution::defined_samples() const {
  std::vector<double> out;
  for (std::size_t i = 0; i < samples.size(); ++i)
    if (defined[i]) out.push_back(samples[i]);
  return out;
}

std::optional<double> outcome(const data::Trajectory& traj, Criterion c, const env::EnvConfig& env_in,
                              const OutcomeOptions& opt) {
  if (!compatible(c, env_in.id))
    throw ConfigError(std::string("criterion ") + to_string(c) + " does not apply to " + env::to_string(env_in.id));
  namespace ix = env::pusher_index;
  env::EnvConfig env = env_in;
  if (env.id == env::EnvId::Pusher && traj.target.size() == 2) env.pusher.target = {traj.target[0], traj.target[1]};
  const double dt = env.dt;
  const auto& S = traj.states;
  switch (c) {
    case Criterion::UprightDuration:
      return env::cartpole_upright_duration(traj, env);
    case Criterion::TimeToTarget:
      if (traj.diverged) return std::nullopt;
      for (std::size_t t = 0; t < S.size(); ++t)
        if (env::pusher_at_target(S[t], env, opt.position_only)) return static_cast<double>(t) * dt;
      return std::nullopt;
    case Criterion::FirstContactTime:
      for (std::size_t t = 0; t < S.size(); ++t)
        if (std::hypot(S[t][ix::tip_x] - S[t][ix::ball_x], S[t][ix::tip_y] - S[t][ix::ball_y]) <
            env.pusher.contact_radius)
          return static_cast<double>(t) * dt;
      return std::nullopt;
    case Criterion::MaxBallSpeed: {
      double m = 0.0;
      for (const auto& s : S) m = std::max(m, std::hypot(s[ix::ball_vx], s[ix::ball_vy]));
      return m;
    }
    case Criterion::StuckTime: {
      const double torque = kStuckTorqueFrac * env.action_limit();
      std::size_t n = 0;
      for (std::size_t t = 0; t < traj.actions.size(); ++t) {
        const auto& a = traj.actions[t];
        const auto& next = S[t + 1];
        const bool j1 = std::abs(next[ix::q1_dot]) < kStuckSpeed && std::abs(a[0]) > torque;
        const bool j2 = std::abs(next[ix::q2_dot]) < kStuckSpeed && std::abs(a[1]) > torque;
        n += (j1 || j2) ? 1 : 0;
      }
      return static_cast<double>(n) * dt;
    }
  }
  return std::nullopt;
}

OutcomeDistribution abstract_outcome(const ForecastEnsemble& ens, Criterion c, const env::EnvConfig& env,
                                     const OutcomeOptions& opt) {
  OutcomeDistribution d;
  d.criterion = c;
  for (const auto& t : ens.trajectories) {
    const auto v = outcome(t, c, env, opt);
    d.samples.push_back(v.value_or(std::numeric_limits<double>::quiet_NaN()));
    d.defined.push_back(v.has_value());
  }
  return d;
}

double brier(const std::vector<BrierRecord>& records) {
  if (records.empty()) throw ContractError("Brier score of no records");
  double s = 0.0;
  for (const auto& r : records) {
    if (!(r.f >= 0.0 && r.f <= 1.0) || (r.o != 0 && r.o != 1)) throw ContractError("Brier record out of range");
    s += (r.f - r.o) * (r.f - r.o);
  }
  return s / static_cast<double>(records.size());
}

std::vector<CalibrationBin> calibration_curve(const std::vector<BrierRecord>& records, std::size_t bins) {
  if (bins < 1) throw ContractError("calibration needs at least one bin");
  std::vector<CalibrationBin> out(bins);
  std::vector<double> hits(bins, 0.0);
  const double w = 1.0 / static_cast<double>(bins);
  for (std::size_t b = 0; b < bins; ++b) {
    out[b].lo = static_cast<double>(b) * w;
    out[b].hi = b + 1 == bins ? 1.0 : static_cast<double>(b + 1) * w;
    out[b].center = out[b].lo + 0.5 * w;
  }
  for (const auto& r : records) {
    auto b = static_cast<std::size_t>(std::floor(r.f * static_cast<double>(bins)));
    b = std::min(b, bins - 1);
    out[b].count += 1;
    out[b].mean_forecast += r.f;
    hits[b] += r.o;
  }
  for (std::size_t b = 0; b < bins; ++b) {
    if (out[b].count == 0) continue;
    const auto n = static_cast<double>(out[b].count);
    out[b].mean_forecast /= n;
    out[b].frequency = hits[b] / n;
  }
  return out;
}

double max_calibration_gap(const std::vector<CalibrationBin>& curve) {
  double g = 0.0;
  for (const auto& b : curve)
    if (b.count > 0) g = std::max(g, std::abs(b.mean_forecast - *b.frequency));
  return g;
}

std::string calibration_csv(const std::vector<CalibrationBin>& curve, const std::string& series) {
  std::string s = "series,bin_lo,bin_hi,bin_center,count,mean_forecast,frequency\n";
  for (const auto& b : curve) {
    s += series + "," + data::format_real(b.lo) + "," + data::format_real(b.hi) + "," + data::format_real(b.center) +
         "," + std::to_string(b.count) + ",";
    if (b.count > 0) s += data::format_real(b.mean_forecast) + "," + data::format_real(*b.frequency);
    else s += ",";
    s += "\n";
  }
  return s;
}

const char* to_string(Comparator c) {
  switch (c) {
    case Comparator::Less:
      return "<";
    case Comparator::LessEqual:
      return "<=";
    case Comparator::Greater:
      return ">";
    case Comparator::GreaterEqual:
      return ">=";
  }
  return "?";
}

Comparator comparator_from_string(const std::string& s) {
  for (auto c : {Comparator::Less, Comparator::LessEqual, Comparator::Greater, Comparator::GreaterEqual})
    if (s == to_string(c)) return c;
  throw ConfigError("unknown comparator '" + s + "'");
}

Query parse_query(const std::string& text) {
  static const std::regex re(R"(^\s*([a-z_]+)\s*(<=|>=|<|>)\s*([-+0-9.eE]+)\s*$)");
  std::smatch m;
  if (!std::regex_match(text, m, re)) throw ConfigError("invalid query '" + text + "'");
  Query q;
  q.criterion = criterion_from_string(m[1]);
  q.comparator = comparator_from_string(m[2]);
  try {
    std::size_t used = 0;
    q.threshold = std::stod(m[3], &used);
    if (used != static_cast<std::size_t>(m[3].length())) throw ConfigError("invalid query threshold in '" + text + "'");
  } catch (const std::logic_error&) {
    throw ConfigError("invalid query threshold in '" + text + "'");
  }
  return q;
}

namespace {

bool satisfies(double v, const Query& q) {
  switch (q.comparator) {
    case Comparator::Less:
      return v < q.threshold;
    case Comparator::LessEqual:
      return v <= q.threshold;
    case Comparator::Greater:
      return v > q.threshold;
    case Comparator::GreaterEqual:
      return v >= q.threshold;
  }
  return false;
}

std::string percent(double p) {
  char buf[32];
  const double pct = 100.0 * p;
  if (std::abs(pct - std::round(pct)) < 1e-9) std::snprintf(buf, sizeof buf, "%.0f%%", pct);
  else std::snprintf(buf, sizeof buf, "%.1f%%", pct);
  return buf;
}

std::string number(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", v);
  return buf;
}

double quantile(const std::vector<double>& sorted, double q) {
  const double pos = q * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (pos - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

}  // namespace

CompetencyStatement render_statement(const OutcomeDistribution& dist, const Query& query) {
  if (dist.criterion != query.criterion) throw ConfigError("query criterion does not match the distribution");
  if (dist.size() == 0) throw ContractError("statement over an empty distribution");
  std::size_t k = 0;
  for (std::size_t i = 0; i < dist.size(); ++i) k += (dist.defined[i] && satisfies(dist.samples[i], query)) ? 1 : 0;
  CompetencyStatement s;
  s.query = query;
  s.n = dist.size();
  s.probability = static_cast<double>(k) / static_cast<double>(s.n);
  const char* cmp = query.comparator == Comparator::LessEqual      ? "≤"
                    : query.comparator == Comparator::GreaterEqual ? "≥"
                                                                   : to_string(query.comparator);
  s.text = percent(s.probability) + " confidence in " + describe(query.criterion) + " " + cmp + " " +
           number(query.threshold) + " " + units(query.criterion);
  return s;
}

std::string statement_json(const CompetencyStatement& s) {
  std::string esc;
  for (char c : s.text) {
    if (c == '"' || c == '\\') esc += '\\';
    esc += c;
  }
  return std::string("{\"criterion\":\"") + to_string(s.query.criterion) + "\",\"comparator\":\"" +
         to_string(s.query.comparator) + "\",\"threshold\":" + data::format_real(s.query.threshold) +
         ",\"units\":\"" + units(s.query.criterion) + "\",\"probability\":" + data::format_real(s.probability) +
         ",\"n\":" + std::to_string(s.n) + ",\"text\":\"" + esc + "\"}";
}

Histogram histogram(const OutcomeDistribution& dist, std::size_t bins) {
  if (bins < 1) throw ContractError("histogram needs at least one bin");
  Histogram h;
  auto v = dist.defined_samples();
  h.masked = dist.size() - v.size();
  if (v.empty()) return h;
  std::sort(v.begin(), v.end());
  double sum = 0.0;
  for (double x : v) sum += x;
  h.mean = sum / static_cast<double>(v.size());
  double ss = 0.0;
  for (double x : v) ss += (x - h.mean) * (x - h.mean);
  h.stddev = v.size() > 1 ? std::sqrt(ss / static_cast<double>(v.size() - 1)) : 0.0;
  h.p10 = quantile(v, 0.1);
  h.p50 = quantile(v, 0.5);
  h.p90 = quantile(v, 0.9);
  double lo = v.front(), hi = v.back();
  if (hi - lo < 1e-12) {
    h.edges = {lo - 0.5, lo + 0.5};
    h.counts = {v.size()};
    return h;
  }
  const double w = (hi - lo) / static_cast<double>(bins);
  for (std::size_t b = 0; b <= bins; ++b) h.edges.push_back(b == bins ? hi : lo + static_cast<double>(b) * w);
  h.counts.assign(bins, 0);
  for (double x : v) h.counts[std::min(bins - 1, static_cast<std::size_t>((x - lo) / w))] += 1;
  return h;
}

std::string histogram_json(const Histogram& h, Criterion c, const std::string& series) {
  std::string counts = "[";
  for (std::size_t i = 0; i < h.counts.size(); ++i) counts += (i ? "," : "") + std::to_string(h.counts[i]);
  counts += "]";
  return std::string("{\"series\":\"") + series + "\",\"criterion\":\"" + to_string(c) + "\",\"units\":\"" +
         units(c) + "\",\"edges\":" + data::format_reals(h.edges) + ",\"counts\":" + counts +
         ",\"masked\":" + std::to_string(h.masked) + ",\"mean\":" + data::format_real(h.mean) +
         ",\"std\":" + data::format_real(h.stddev) + ",\"p10\":" + data::format_real(h.p10) +
         ",\"p50\":" + data::format_real(h.p50) + ",\"p90\":" + data::format_real(h.p90) + "}";
}

}  // namespace pwm::assessment
