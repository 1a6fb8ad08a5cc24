#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "pwm/data/trajectory.hpp"
#include "pwm/env/config.hpp"
#include "pwm/forecasting/forecasting.hpp"

namespace pwm::assessment {

using forecasting::ForecastEnsemble;

using SuccessFn = std::function<bool(const data::Trajectory&)>;

// Fraction of the ensemble for which `success` holds: exactly k / N.
double success_probability(const ForecastEnsemble& ens, const SuccessFn& success);

// Task success predicate for `env` (pusher target taken from each trajectory).
SuccessFn task_success_fn(const env::EnvConfig& env);

enum class Criterion : std::uint8_t { TimeToTarget, StuckTime, FirstContactTime, MaxBallSpeed, UprightDuration };

const char* to_string(Criterion c);
Criterion criterion_from_string(const std::string& s);
const char* units(Criterion c);
// Human-readable phrase used in competency statements.
const char* describe(Criterion c);
bool compatible(Criterion c, env::EnvId env);

inline constexpr double kStuckSpeed = 0.05;        // rad/s
inline constexpr double kStuckTorqueFrac = 0.5;    // of the action limit

struct OutcomeOptions {
  bool position_only = false;  // time_to_target ignores the speed condition
};

struct OutcomeDistribution {
  Criterion criterion = Criterion::TimeToTarget;
  std::vector<double> samples;  // one per forecast; NaN where undefined
  std::vector<bool> defined;    // false = masked

  std::size_t size() const { return samples.size(); }
  std::vector<double> defined_samples() const;
};

// Per-trajectory scalar outcome; nullopt when undefined (never reached).
std::optional<double> outcome(const data::Trajectory& traj, Criterion c, const env::EnvConfig& env,
                              const OutcomeOptions& opt = {});
OutcomeDistribution abstract_outcome(const ForecastEnsemble& ens, Criterion c, const env::EnvConfig& env,
                                     const OutcomeOptions& opt = {});

struct BrierRecord {
  double f = 0.0;  // forecast probability
  int o = 0;       // realized outcome
  std::size_t instance = 0;
};

double brier(const std::vector<BrierRecord>& records);

struct CalibrationBin {
  double lo = 0.0, hi = 0.0, center = 0.0;
  std::size_t count = 0;
  double mean_forecast = 0.0;         // meaningful when count > 0
  std::optional<double> frequency;    // empty for empty bins
};

// Equal-width bins on f; f == 1 falls in the last bin.
std::vector<CalibrationBin> calibration_curve(const std::vector<BrierRecord>& records, std::size_t bins = 10);
// Largest |mean forecast - frequency| over occupied bins.
double max_calibration_gap(const std::vector<CalibrationBin>& curve);
std::string calibration_csv(const std::vector<CalibrationBin>& curve, const std::string& series);

enum class Comparator : std::uint8_t { Less, LessEqual, Greater, GreaterEqual };

const char* to_string(Comparator c);
Comparator comparator_from_string(const std::string& s);

struct Query {
  Criterion criterion = Criterion::TimeToTarget;
  Comparator comparator = Comparator::LessEqual;
  double threshold = 0.0;
};

// Parses "time_to_target<=15".
Query parse_query(const std::string& text);

struct CompetencyStatement {
  Query query;
  double probability = 0.0;
  std::size_t n = 0;
  std::string text;
};

// P(query) over the samples; masked samples never satisfy a query.
CompetencyStatement render_statement(const OutcomeDistribution& dist, const Query& query);
std::string statement_json(const CompetencyStatement& s);

struct Histogram {
  std::vector<double> edges;  // bins + 1
  std::vector<std::size_t> counts;
  std::size_t masked = 0;
  double mean = 0.0, stddev = 0.0;
  double p10 = 0.0, p50 = 0.0, p90 = 0.0;
};

// Histogram and summary statistics over unmasked samples. A degenerate range
// gets a single bin of width 1 centred on the value.
Histogram histogram(const OutcomeDistribution& dist, std::size_t bins = 20);
std::string histogram_json(const Histogram& h, Criterion c, const std::string& series);

}  // namespace pwm::assessment
