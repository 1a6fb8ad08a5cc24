#include <cmath>

#include "doctest.h"
#include "pwm/errors.hpp"
#include "pwm/env/environment.hpp"
#include "pwm/planning/planning.hpp"

using namespace pwm;
using namespace pwm::planning;
using models::ModelDims;
using models::ModelKind;
using models::WorldModel;
using nn::Tensor;

namespace {

PlannerConfig scalar_planner(std::size_t M, std::size_t h) {
  PlannerConfig c;
  c.candidates = M;
  c.horizon = h;
  c.action_limit = 1e9;
  c.action_dim = 1;
  c.sigma_frac = 0.5e-9;  // sigma = 1
  return c;
}

// Exact moments of n_t = b eps_t + (1 - b) n_{t-1}, n_{-1} = 0, eps ~ N(0, 1).
double ar_variance(double b, int t) {
  double v = 0.0;
  for (int j = 0; j <= t; ++j) v += b * b * std::pow(1.0 - b, 2 * j);
  return v;
}

double lag1_correlation(double b, int t) {
  return (1.0 - b) * ar_variance(b, t - 1) / std::sqrt(ar_variance(b, t) * ar_variance(b, t - 1));
}

WorldModel planning_model(const env::EnvConfig& cfg, std::uint64_t seed, bool randomize) {
  ModelDims d;
  d.state = cfg.state_dim();
  d.action = cfg.action_dim();
  d.hidden = 8;
  auto m = WorldModel::create(ModelKind::DetRnn, d, seed);
  if (randomize) {
    Rng rng(seed + 1);
    for (auto& [_, e] : m.params.entries())
      for (auto& v : e.value.storage()) v = rng.uniform(-0.5, 0.5);
  }
  m.stats.state_mean.assign(d.state, 0.0);
  m.stats.state_std.assign(d.state, 1.0);
  m.stats.action_mean.assign(d.action, 0.0);
  m.stats.action_std.assign(d.action, cfg.action_limit() / std::sqrt(3.0));
  return m;
}

}  // namespace

TEST_CASE("rewards") {
  SUBCASE("cartpole") {
    const Vector zero{0, 0, 0, 0};
    CHECK(reward_cartpole(zero, Vector{0.0}) == 0.0);
    CHECK(reward_cartpole(Vector{0.1, 0, 0, 0}, Vector{0.0}) < 0.0);
    CHECK(reward_cartpole(Vector{0, 0, 0.01, 0}, Vector{0.0}) < 0.0);
    CHECK(reward_cartpole(zero, Vector{0.5}) < 0.0);
    CHECK(reward_cartpole(Vector{0.2, 1.0, 0.1, -2.0}, Vector{3.0}) ==
          doctest::Approx(-(0.01 + 0.01 * 0.04 + 0.001 * 9.0)));
  }
  SUBCASE("pusher") {
    const Vector target{0.1, 0.05};
    Vector s(12, 0.0);
    s[0] = 0.1;
    s[1] = 0.05;
    s[8] = 0.1;
    s[9] = 0.05;
    CHECK(reward_pusher(s, Vector{0, 0}, target) == 0.0);
    auto perturbed = [&](std::size_t i, double d) {
      auto p = s;
      p[i] += d;
      return reward_pusher(p, Vector{0, 0}, target);
    };
    for (std::size_t i : {0, 1, 8, 9, 10, 11}) CHECK(perturbed(i, 1e-3) < 0.0);
    CHECK(reward_pusher(s, Vector{0.1, 0}, target) < 0.0);
  }
  SUBCASE("dispatch and override") {
    RewardFunction r{env::EnvId::CartPole, {0.1, 0.0}, {}};
    CHECK(r(Vector{0, 0, 0.1, 0}, Vector{0.0}) == reward_cartpole(Vector{0, 0, 0.1, 0}, Vector{0.0}));
    r.custom = [](auto, auto) { return 3.0; };
    CHECK(r(Vector{0, 0, 0.1, 0}, Vector{0.0}) == 3.0);
  }
}

TEST_CASE("sample_filtered_actions") {
  SUBCASE("zero noise reproduces the mean") {
    auto c = scalar_planner(5, 4);
    c.sigma_frac = 0.0;
    const ActionSeq mean{{0.1}, {-0.2}, {0.3}, {0.0}};
    Rng rng(1);
    for (const auto& seq : sample_filtered_actions(mean, c, rng)) CHECK(seq == mean);
  }
  SUBCASE("b = 1 gives independent noise across steps") {
    auto c = scalar_planner(10000, 6);
    c.filter = 1.0;
    Rng rng(2);
    const auto cands = sample_filtered_actions(ActionSeq(6, Vector{0.0}), c, rng);
    for (int t = 1; t < 6; ++t) {
      double cov = 0.0;
      for (const auto& s : cands) cov += s[t][0] * s[t - 1][0];
      cov /= 10000.0;
      CHECK(std::abs(cov) < 4.0 / std::sqrt(10000.0));
    }
  }
  SUBCASE("b = 0.5 lag-1 autocorrelation follows the AR(1) moments") {
    const double b = 0.5;
    auto c = scalar_planner(100000, 21);
    c.filter = b;
    Rng rng(3);
    const auto cands = sample_filtered_actions(ActionSeq(21, Vector{0.0}), c, rng);
    for (int t : {1, 5, 20}) {
      double sxy = 0, sxx = 0, syy = 0;
      for (const auto& s : cands) {
        sxy += s[t][0] * s[t - 1][0];
        sxx += s[t - 1][0] * s[t - 1][0];
        syy += s[t][0] * s[t][0];
      }
      const double corr = sxy / std::sqrt(sxx * syy);
      const double expected = lag1_correlation(b, t);
      CHECK(std::abs(corr - expected) < 0.05 * expected);
      CHECK(syy / 100000.0 == doctest::Approx(ar_variance(b, t)).epsilon(0.02));
    }
    CHECK(lag1_correlation(b, 20) == doctest::Approx(1.0 - b).epsilon(1e-9));
  }
  SUBCASE("candidates stay within the action limits") {
    PlannerConfig c;
    c.action_limit = 2.0;
    c.action_dim = 2;
    c.sigma_frac = 1.0;
    Rng rng(4);
    for (const auto& seq : sample_filtered_actions(ActionSeq(c.horizon, Vector{1.9, -1.9}), c, rng))
      for (const auto& a : seq)
        for (double v : a) CHECK(std::abs(v) <= 2.0);
  }
  SUBCASE("mean length must equal the horizon") {
    PlannerConfig c;
    Rng rng(5);
    CHECK_THROWS_AS(sample_filtered_actions(ActionSeq(3, Vector{0.0}), c, rng), DimensionError);
  }
}

TEST_CASE("reward_weighted_mean") {
  const std::vector<ActionSeq> two{{{1.0}, {2.0}}, {{3.0}, {-2.0}}};
  SUBCASE("equal rewards give the arithmetic mean") {
    const std::vector<double> r{-1.5, -1.5};
    CHECK(reward_weighted_mean(two, r, 10.0) == ActionSeq{{2.0}, {0.0}});
  }
  SUBCASE("sharp temperature selects the unique best candidate") {
    const std::vector<double> r{-1.0, -1.5};
    const auto m = reward_weighted_mean(two, r, 1e3);
    CHECK(m[0][0] == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(m[1][0] == doctest::Approx(2.0).epsilon(1e-12));
  }
  SUBCASE("scalar oracle and shift invariance") {
    Rng rng(6);
    std::vector<ActionSeq> cands(7, ActionSeq(3, Vector(2)));
    std::vector<double> r(7);
    for (auto& c : cands)
      for (auto& a : c)
        for (auto& v : a) v = rng.uniform(-1, 1);
    for (auto& v : r) v = rng.uniform(-2, 0);
    const double gamma = 2.5;
    const auto m = reward_weighted_mean(cands, r, gamma);
    for (std::size_t t = 0; t < 3; ++t)
      for (std::size_t i = 0; i < 2; ++i) {
        double num = 0, den = 0;
        for (std::size_t k = 0; k < 7; ++k) {
          num += std::exp(gamma * r[k]) * cands[k][t][i];
          den += std::exp(gamma * r[k]);
        }
        CHECK(m[t][i] == doctest::Approx(num / den).epsilon(1e-12));
      }
    auto shifted = r;
    for (auto& v : shifted) v += 1234.5;
    const auto ms = reward_weighted_mean(cands, shifted, gamma);
    for (std::size_t t = 0; t < 3; ++t)
      for (std::size_t i = 0; i < 2; ++i) CHECK(ms[t][i] == doctest::Approx(m[t][i]).epsilon(1e-12));
  }
  SUBCASE("non-finite rewards") {
    const std::vector<double> one_bad{-INFINITY, -3.0};
    CHECK(reward_weighted_mean(two, one_bad, 10.0) == two[1]);
    const std::vector<double> all_bad{NAN, -INFINITY};
    CHECK_THROWS_AS(reward_weighted_mean(two, all_bad, 10.0), DivergenceError);
  }
}

TEST_CASE("score_candidates matches per-candidate rollouts") {
  const auto cfg = env::EnvConfig::pusher_default();
  const auto m = planning_model(cfg, 3, true);
  auto pc = planner_for(cfg);
  pc.candidates = 5;
  pc.horizon = 4;
  Rng rng(7);
  const auto cands = sample_filtered_actions(ActionSeq(4, Vector{0.0, 0.0}), pc, rng);
  const Tensor hidden = rng.normal({1, 8});
  Vector s(12);
  for (auto& v : s) v = rng.uniform(-0.1, 0.1);
  RewardFunction reward{env::EnvId::Pusher, {0.1, 0.02}, {}};
  const auto scores = score_candidates(cands, m, hidden, s, reward);

  models::Binding bind(m.params, false);
  for (std::size_t k = 0; k < cands.size(); ++k) {
    Tensor h = hidden, cur({1, 12}, s);
    double total = 0.0;
    for (const auto& a : cands[k]) {
      auto out = models::detrnn_step(bind, m.dims, models::Var::constant(cur),
                                     models::Var::constant(Tensor({1, 2}, m.stats.normalize_action(a))),
                                     models::Var::constant(h));
      h = out.h.value();
      cur = out.prediction.value();
      total += reward_pusher(m.stats.denormalize_state(cur.span()), a, reward.target);
    }
    CHECK(scores[k] == doctest::Approx(total).epsilon(1e-12));
  }
}

TEST_CASE("plan_action") {
  const auto cfg = env::EnvConfig::cartpole_default();
  auto pc = planner_for(cfg);
  pc.candidates = 16;
  pc.horizon = 6;
  pc.iterations = 2;
  const auto m = planning_model(cfg, 4, false);
  const Vector upright{0, 0, 0, 0};

  SUBCASE("constant reward has no preferred direction") {
    RewardFunction flat;
    flat.custom = [](auto, auto) { return -1.0; };
    const int n = 400;
    double sum = 0.0, sum2 = 0.0;
    for (int seed = 0; seed < n; ++seed) {
      auto st = initial_plan_state(pc, m);
      Rng rng(seed);
      const double a = plan_action(upright, m, st, flat, pc, rng)[0];
      sum += a;
      sum2 += a * a;
    }
    const double mean = sum / n, sd = std::sqrt(sum2 / n - mean * mean);
    CHECK(std::abs(mean) < 4.0 * sd / std::sqrt(n));
  }
  SUBCASE("force penalty keeps the upright cart quiet") {
    const auto defaults = planner_for(cfg);
    const RewardFunction quiet{env::EnvId::CartPole, {0.1, 0.0}, {}};
    for (int seed = 0; seed < 100; ++seed) {
      auto st = initial_plan_state(defaults, m);
      Rng rng(seed);
      CHECK(std::abs(plan_action(upright, m, st, quiet, defaults, rng)[0]) < 0.2 * cfg.action_limit());
    }
  }
  SUBCASE("deterministic, bounded, receding horizon") {
    RewardFunction reward{env::EnvId::CartPole, {0.1, 0.0}, {}};
    auto st1 = initial_plan_state(pc, m), st2 = initial_plan_state(pc, m);
    Rng r1(9), r2(9);
    Vector s{0.1, 0.2, -0.05, 0.3};
    for (int t = 0; t < 5; ++t) {
      const auto a1 = plan_action(s, m, st1, reward, pc, r1);
      const auto a2 = plan_action(s, m, st2, reward, pc, r2);
      CHECK(a1 == a2);
      CHECK(std::abs(a1[0]) <= cfg.action_limit());
      CHECK(st1.mean.size() == pc.horizon);
      CHECK(st1.mean.back() == Vector{0.0});
      CHECK(st1.hidden == st2.hidden);
      s = env::env_step(cfg, s, a1);
    }
  }
  SUBCASE("planning model must be a deterministic RNN") {
    ModelDims d;
    d.state = 4;
    d.action = 1;
    d.hidden = 4;
    const auto rvae = WorldModel::create(ModelKind::Rvae, d, 1);
    CHECK_THROWS_AS(initial_plan_state(pc, rvae), ContractError);
  }
}
