#include <cmath>
#include <limits>
#include <numeric>

#include "doctest.h"
#include "pwm/assessment/assessment.hpp"
#include "pwm/env/environment.hpp"
#include "pwm/errors.hpp"

using namespace pwm;
using namespace pwm::assessment;
using data::Trajectory;
using data::Vector;

namespace {

const env::EnvConfig kPusher = env::EnvConfig::pusher_default();
const env::EnvConfig kCartPole = env::EnvConfig::cartpole_default();

Vector pusher_state(double ball_x, double ball_y, double vx = 0.0, double vy = 0.0) {
  auto s = env::PusherState::at_rest(0.3, 1.2, {ball_x, ball_y}, kPusher.pusher);
  s.ball_vx = vx;
  s.ball_vy = vy;
  return s.to_vector();
}

Trajectory pusher_traj(std::vector<Vector> states, Vector target = {0.1, 0.0}) {
  Trajectory t;
  t.env_id = "pusher";
  t.target = std::move(target);
  t.states = std::move(states);
  t.actions.assign(t.states.size() - 1, Vector{0.0, 0.0});
  return t;
}

ForecastEnsemble ensemble_of(std::vector<Trajectory> ts) {
  ForecastEnsemble e;
  e.trajectories = std::move(ts);
  return e;
}

OutcomeDistribution dist_of(Criterion c, const std::vector<double>& v) {
  OutcomeDistribution d;
  d.criterion = c;
  for (double x : v) {
    d.samples.push_back(x);
    d.defined.push_back(!std::isnan(x));
  }
  return d;
}

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

}  // namespace

TEST_CASE("success probability counts successes") {
  Trajectory yes, no;
  yes.states = {{1}};
  no.states = {{0}};
  const SuccessFn fn = [](const Trajectory& t) { return t.states[0][0] > 0.5; };
  CHECK(success_probability(ensemble_of({yes, yes, yes}), fn) == 1.0);
  CHECK(success_probability(ensemble_of({yes, no, yes, yes}), fn) == 0.75);
  CHECK(success_probability(ensemble_of({no, no, yes}), fn) == 1.0 / 3.0);
  CHECK_THROWS_AS(success_probability(ensemble_of({}), fn), ContractError);

  // the task predicate reads each trajectory's own target
  auto at = pusher_traj({pusher_state(0.0, 0.15), pusher_state(0.0, 0.15)}, {0.0, 0.15});
  auto off = at;
  off.target = {0.1, -0.1};
  auto diverged = at;
  diverged.diverged = true;
  const auto task = task_success_fn(kPusher);
  CHECK(task(at));
  CHECK_FALSE(task(off));
  CHECK_FALSE(task(diverged));
  CHECK(success_probability(ensemble_of({at, off, diverged, at}), task) == 0.5);
}

TEST_CASE("Brier score") {
  CHECK(brier({{1, 1, 0}, {0, 0, 1}, {1, 1, 2}}) == 0.0);
  CHECK(brier({{0.5, 1, 0}, {0.5, 0, 1}, {0.5, 1, 2}}) == doctest::Approx(0.25).epsilon(1e-15));
  CHECK(brier({{0.5, 0, 0}}) == 0.25);
  CHECK(brier({{0.8, 1, 0}, {0.2, 1, 1}}) == doctest::Approx(0.34).epsilon(1e-14));
  CHECK_THROWS_AS(brier({}), ContractError);
  CHECK_THROWS_AS(brier({{1.5, 1, 0}}), ContractError);
  CHECK_THROWS_AS(brier({{0.5, 2, 0}}), ContractError);

  // constant forecasts: minimum at the base rate
  Rng rng(3);
  std::vector<int> outcomes(400);
  for (auto& o : outcomes) o = rng.uniform(0.0, 1.0) < 0.37 ? 1 : 0;
  const double base = std::accumulate(outcomes.begin(), outcomes.end(), 0.0) / 400.0;
  auto score = [&](double f) {
    std::vector<BrierRecord> r;
    for (int o : outcomes) r.push_back({f, o, 0});
    return brier(r);
  };
  double best_f = -1, best = 1e9;
  for (int i = 0; i <= 400; ++i) {
    const double f = i / 400.0;
    if (score(f) < best) best = score(f), best_f = f;
  }
  CHECK(best_f == doctest::Approx(base).epsilon(1e-12));
  CHECK(best == doctest::Approx(base * (1 - base)).epsilon(1e-12));
}

TEST_CASE("calibration curve") {
  SUBCASE("synthetic Bernoulli records are calibrated") {
    Rng rng(11);
    std::vector<BrierRecord> recs;
    for (std::size_t i = 0; i < 100000; ++i) {
      const double f = rng.uniform(0.0, 1.0);
      recs.push_back({f, rng.uniform(0.0, 1.0) < f ? 1 : 0, i});
    }
    const auto curve = calibration_curve(recs);
    REQUIRE(curve.size() == 10);
    std::size_t total = 0;
    for (std::size_t b = 0; b < curve.size(); ++b) {
      total += curve[b].count;
      CHECK(curve[b].lo == doctest::Approx(b / 10.0));
      CHECK(curve[b].hi == doctest::Approx((b + 1) / 10.0));
      if (b > 0) CHECK(curve[b].lo == curve[b - 1].hi);
    }
    CHECK(curve.front().lo == 0.0);
    CHECK(curve.back().hi == 1.0);
    CHECK(total == recs.size());
    CHECK(max_calibration_gap(curve) < 0.02);
  }
  SUBCASE("certain forecasts fill one bin") {
    const std::vector<BrierRecord> recs(25, BrierRecord{1.0, 1, 0});
    const auto curve = calibration_curve(recs);
    for (std::size_t b = 0; b + 1 < curve.size(); ++b) {
      CHECK(curve[b].count == 0);
      CHECK_FALSE(curve[b].frequency.has_value());
    }
    CHECK(curve.back().count == 25);
    CHECK(curve.back().mean_forecast == 1.0);
    CHECK(*curve.back().frequency == 1.0);
    CHECK(max_calibration_gap(curve) == 0.0);
  }
  SUBCASE("point forecasts occupy only the extreme bins") {
    std::vector<BrierRecord> recs;
    for (int i = 0; i < 30; ++i) recs.push_back({static_cast<double>(i % 2), i % 3 == 0 ? 1 : 0, 0});
    const auto curve = calibration_curve(recs);
    for (std::size_t b = 1; b + 1 < curve.size(); ++b) CHECK(curve[b].count == 0);
    CHECK(curve.front().count == 15);
    CHECK(curve.back().count == 15);
  }
  SUBCASE("table output") {
    const auto csv = calibration_csv(calibration_curve({{0.05, 1, 0}}, 2), "rvae");
    CHECK(csv ==
          "series,bin_lo,bin_hi,bin_center,count,mean_forecast,frequency\n"
          "rvae,0,0.5,0.25,1,0.050000000000000003,1\n"
          "rvae,0.5,1,0.75,0,,\n");
  }
}

TEST_CASE("outcome abstraction") {
  const double dt = kPusher.dt;
  SUBCASE("time to target") {
    const auto far = pusher_state(-0.15, 0.05);
    CHECK_FALSE(outcome(pusher_traj({far, far, far}), Criterion::TimeToTarget, kPusher).has_value());
    const auto near = pusher_traj({far, pusher_state(0.1, 0.02, 0.3, 0.0), pusher_state(0.1, 0.01, 0.05, 0.0)});
    CHECK(*outcome(near, Criterion::TimeToTarget, kPusher) == doctest::Approx(2 * dt));
    OutcomeOptions pos;
    pos.position_only = true;
    CHECK(*outcome(near, Criterion::TimeToTarget, kPusher, pos) == doctest::Approx(dt));
    auto div = near;
    div.diverged = true;
    CHECK_FALSE(outcome(div, Criterion::TimeToTarget, kPusher).has_value());
  }
  SUBCASE("first contact") {
    auto s0 = env::PusherState::at_rest(0.3, 1.2, {0.0, 0.0}, kPusher.pusher);
    auto touching = pusher_state(s0.tip_x + 0.01, s0.tip_y);
    CHECK(*outcome(pusher_traj({touching, touching}), Criterion::FirstContactTime, kPusher) == 0.0);
    auto apart = pusher_state(s0.tip_x + 0.2, s0.tip_y);
    CHECK(*outcome(pusher_traj({apart, apart, touching}), Criterion::FirstContactTime, kPusher) ==
          doctest::Approx(2 * dt));
    CHECK_FALSE(outcome(pusher_traj({apart, apart}), Criterion::FirstContactTime, kPusher).has_value());
  }
  SUBCASE("max ball speed") {
    std::vector<Vector> states;
    double hand_max = 0.0;
    for (int t = 0; t < 30; ++t) {
      const double vx = 0.4 * std::sin(0.3 * t), vy = 0.1 * std::cos(0.7 * t);
      hand_max = std::max(hand_max, std::sqrt(vx * vx + vy * vy));
      states.push_back(pusher_state(-0.1, 0.1, vx, vy));
    }
    CHECK(*outcome(pusher_traj(states), Criterion::MaxBallSpeed, kPusher) == doctest::Approx(hand_max).epsilon(1e-14));
  }
  SUBCASE("stuck time") {
    auto still = pusher_state(-0.1, 0.1);
    auto moving = still;
    moving[env::pusher_index::q1_dot] = 1.0;
    moving[env::pusher_index::q2_dot] = 1.0;
    auto t = pusher_traj({moving, still, moving, still, still});
    t.actions = {{0.9, 0.0}, {0.9, 0.0}, {0.1, -0.1}, {0.0, -0.8}};
    // steps 0 and 3 push a joint that does not move; step 1 pushes a moving joint
    CHECK(*outcome(t, Criterion::StuckTime, kPusher) == doctest::Approx(2 * dt));
  }
  SUBCASE("upright duration and compatibility") {
    Trajectory t;
    t.states = {{0, 0, 0, 0}, {0, 0, 0.1, 0}, {0, 0, 0.3, 0}, {0, 0, 0, 0}};
    t.actions.assign(3, Vector{0.0});
    CHECK(*outcome(t, Criterion::UprightDuration, kCartPole) == doctest::Approx(2 * kCartPole.dt));
    CHECK_THROWS_AS(outcome(t, Criterion::MaxBallSpeed, kCartPole), ConfigError);
    CHECK_THROWS_AS(outcome(pusher_traj({pusher_state(0, 0)}), Criterion::UprightDuration, kPusher), ConfigError);
  }
  SUBCASE("ensemble distribution keeps masks") {
    const auto far = pusher_state(-0.15, 0.05);
    const auto at = pusher_state(0.1, 0.0);
    const auto d = abstract_outcome(ensemble_of({pusher_traj({far, at}), pusher_traj({far, far})}),
                                    Criterion::TimeToTarget, kPusher);
    REQUIRE(d.size() == 2);
    CHECK(d.defined == std::vector<bool>{true, false});
    CHECK(d.samples[0] == doctest::Approx(dt));
    CHECK(std::isnan(d.samples[1]));
    CHECK(d.defined_samples() == std::vector<double>{d.samples[0]});
  }
}

TEST_CASE("queries and competency statements") {
  const auto q = parse_query("time_to_target<=15");
  CHECK(q.criterion == Criterion::TimeToTarget);
  CHECK(q.comparator == Comparator::LessEqual);
  CHECK(q.threshold == 15.0);
  CHECK(parse_query(" max_ball_speed > 0.25 ").comparator == Comparator::Greater);
  CHECK(parse_query("cartpole_upright_duration>=2").criterion == Criterion::UprightDuration);
  CHECK_THROWS_AS(parse_query("time_to_target"), ConfigError);
  CHECK_THROWS_AS(parse_query("speed<=1"), ConfigError);
  CHECK_THROWS_AS(parse_query("time_to_target<=1.2.3"), ConfigError);
  CHECK_THROWS_AS(parse_query("time_to_target==1"), ConfigError);

  std::vector<double> v;
  for (int i = 0; i < 100; ++i) v.push_back(i < 83 ? 5.0 + 0.1 * i : 20.0 + i);
  const auto d = dist_of(Criterion::TimeToTarget, v);
  const auto s = render_statement(d, q);
  CHECK(s.probability == 0.83);
  CHECK(s.n == 100);
  CHECK(s.text == "83% confidence in time to target ≤ 15 s");

  CHECK(render_statement(d, parse_query("time_to_target<=1")).probability == 0.0);
  CHECK(render_statement(d, parse_query("time_to_target<=1")).text.rfind("0% confidence", 0) == 0);
  CHECK(render_statement(d, parse_query("time_to_target<=1000")).probability == 1.0);
  CHECK(render_statement(d, parse_query("time_to_target<=1000")).text.rfind("100% confidence", 0) == 0);

  // masked samples satisfy no query
  const auto masked = dist_of(Criterion::TimeToTarget, {1.0, kNaN, 2.0, kNaN});
  CHECK(render_statement(masked, parse_query("time_to_target<=1000")).probability == 0.5);
  CHECK(render_statement(masked, parse_query("time_to_target>=0")).probability == 0.5);
  CHECK_THROWS_AS(render_statement(masked, parse_query("max_ball_speed<=1")), ConfigError);

  const auto one = render_statement(dist_of(Criterion::MaxBallSpeed, {0.1, 0.2, 0.3}), parse_query("max_ball_speed<0.25"));
  CHECK(one.text == "66.7% confidence in maximum ball speed < 0.25 m/s");
  CHECK(statement_json(one).find("\"probability\":0.66666666666666663") != std::string::npos);
}

TEST_CASE("histogram ignores masked samples") {
  const auto d = dist_of(Criterion::TimeToTarget, {1.0, kNaN, 2.0, 3.0, kNaN, 4.0});
  const auto h = histogram(d, 3);
  CHECK(h.masked == 2);
  CHECK(std::accumulate(h.counts.begin(), h.counts.end(), std::size_t{0}) == 4);
  CHECK(h.edges == std::vector<double>{1.0, 2.0, 3.0, 4.0});
  CHECK(h.counts == std::vector<std::size_t>{1, 1, 2});
  CHECK(h.mean == doctest::Approx(2.5));
  CHECK(h.stddev == doctest::Approx(std::sqrt(5.0 / 3.0)));
  CHECK(h.p50 == doctest::Approx(2.5));
  CHECK(h.p10 == doctest::Approx(1.3));
  CHECK(h.p90 == doctest::Approx(3.7));

  const auto point = histogram(dist_of(Criterion::MaxBallSpeed, {0.5, 0.5, 0.5}));
  CHECK(point.counts == std::vector<std::size_t>{3});
  CHECK(point.stddev == 0.0);
  CHECK(point.edges == std::vector<double>{0.0, 1.0});

  const auto none = histogram(dist_of(Criterion::TimeToTarget, {kNaN, kNaN}));
  CHECK(none.masked == 2);
  CHECK(none.counts.empty());
}
