#include <cmath>

#include "doctest.h"
#include "pwm/env/environment.hpp"
#include "pwm/errors.hpp"

using namespace pwm;
using namespace pwm::env;

namespace {

// Independent transcription of the pole-on-cart equations (Barto et al. form).
std::array<double, 4> cartpole_oracle(std::array<double, 4> s, double f) {
  const double g = 9.8, mc = 1.0, mp = 0.1, l = 0.5, dt = 0.02;
  const double th = s[2], thd = s[3];
  const double num = g * std::sin(th) + std::cos(th) * ((-f - mp * l * thd * thd * std::sin(th)) / (mc + mp));
  const double den = l * (4.0 / 3.0 - mp * std::cos(th) * std::cos(th) / (mc + mp));
  const double thdd = num / den;
  const double xdd = (f + mp * l * (thd * thd * std::sin(th) - thdd * std::cos(th))) / (mc + mp);
  const double xd = s[1] + dt * xdd;
  const double thd2 = thd + dt * thdd;
  return {s[0] + dt * xd, xd, th + dt * thd2, thd2};
}

data::Trajectory flat_traj(std::size_t steps, data::Vector state, std::size_t adim) {
  data::Trajectory t;
  t.states.assign(steps + 1, state);
  t.actions.assign(steps, data::Vector(adim, 0.0));
  return t;
}

}  // namespace

TEST_CASE("cartpole_step") {
  const auto cfg = EnvConfig::cartpole_default();
  SUBCASE("upright equilibrium persists exactly") {
    CHECK(cartpole_step({}, 0.0, cfg) == CartPoleState{});
  }
  SUBCASE("pushing right accelerates the cart right and tips the pole left") {
    auto s = cartpole_step({}, 10.0, cfg);
    CHECK(s.x_dot > 0.0);
    CHECK(s.theta_dot < 0.0);
    // theta_acc = -F / (M l (4/3 - m / M)) at theta = 0.
    const double expect = -10.0 / 1.1 / (0.5 * (4.0 / 3.0 - 0.1 / 1.1));
    CHECK(s.theta_dot == doctest::Approx(0.02 * expect).epsilon(1e-12));
  }
  SUBCASE("two free steps match an independent transcription") {
    std::array<double, 4> o{0.3, -0.2, 0.1, 0.5};
    CartPoleState s{0.3, -0.2, 0.1, 0.5};
    for (int k = 0; k < 2; ++k) {
      o = cartpole_oracle(o, 0.0);
      s = cartpole_step(s, 0.0, cfg);
    }
    CHECK(s.x == doctest::Approx(o[0]).epsilon(1e-13));
    CHECK(s.x_dot == doctest::Approx(o[1]).epsilon(1e-13));
    CHECK(s.theta == doctest::Approx(o[2]).epsilon(1e-13));
    CHECK(s.theta_dot == doctest::Approx(o[3]).epsilon(1e-13));
  }
  SUBCASE("force is clamped") {
    CHECK(cartpole_step({}, 1e6, cfg) == cartpole_step({}, 10.0, cfg));
  }
  SUBCASE("non-finite input") {
    CHECK_THROWS_AS(cartpole_step({NAN, 0, 0, 0}, 0.0, cfg), ContractError);
  }
}

TEST_CASE("cartpole_success") {
  const auto cfg = EnvConfig::cartpole_default();
  CHECK(cartpole_success(flat_traj(100, {0, 0, 0, 0}, 1), cfg));
  auto t = flat_traj(100, {0, 0, 0, 0}, 1);
  t.states[40][2] = 0.3;
  CHECK_FALSE(cartpole_success(t, cfg));
  CHECK(cartpole_upright_duration(t, cfg) == doctest::Approx(40 * 0.02));
  CHECK_FALSE(cartpole_success(flat_traj(60, {0, 0, 0, 0}, 1), cfg));
  CHECK(cartpole_upright_duration(flat_traj(100, {0, 0, 0, 0}, 1), cfg) == doctest::Approx(2.0));
}

TEST_CASE("pusher_step") {
  const auto cfg = EnvConfig::pusher_default();
  const auto& p = cfg.pusher;

  SUBCASE("rest persists exactly") {
    auto s = PusherState::at_rest(0.7, -1.2, {-0.12, 0.05}, p);
    CHECK(pusher_step(s, {0, 0}, cfg) == s);
  }
  SUBCASE("contact-free ball velocity decays monotonically") {
    auto s = PusherState::at_rest(0.0, 0.0, {-0.15, 0.0}, p);
    s.ball_vx = 0.2;
    s.ball_vy = -0.1;
    double prev = std::hypot(s.ball_vx, s.ball_vy);
    for (int k = 0; k < 40; ++k) {
      s = pusher_step(s, {0, 0}, cfg);
      const double sp = std::hypot(s.ball_vx, s.ball_vy);
      CHECK(sp < prev);
      prev = sp;
    }
    CHECK(prev == doctest::Approx(std::hypot(0.2, 0.1) * std::exp(-0.5 * 40 * 0.05)).epsilon(1e-9));
  }
  SUBCASE("penalty force along the contact normal") {
    const std::array<double, 2> tip{0.1, 0.0}, ball{0.12, 0.0};
    auto f = contact_force(tip, {0.3, 0.0}, ball, {0.0, 0.0}, p);
    // k * (0.035 - 0.02) + c * 0.3
    CHECK(f[0] == doctest::Approx(500 * 0.015 + 2 * 0.3).epsilon(1e-12));
    CHECK(f[1] == 0.0);
    CHECK(contact_force(tip, {0, 0}, {0.2, 0.0}, {0, 0}, p) == std::array<double, 2>{0.0, 0.0});
    // Separating fast enough: no pulling force.
    CHECK(contact_force(tip, {-10.0, 0.0}, ball, {0, 0}, p)[0] == 0.0);

    // Fingertip overlapping the ball and closing: the ball picks up velocity
    // along the normal (tip -> ball).
    auto s = PusherState::at_rest(0.0, 0.0, {0.0, 0.0}, p);
    s.ball_x = s.tip_x + 0.02;
    s.ball_y = s.tip_y + 0.01;
    s.q1_dot = 0.0;
    auto n = pusher_step(s, {0, 0}, cfg);
    const double nx = 0.02 / std::hypot(0.02, 0.01), ny = 0.01 / std::hypot(0.02, 0.01);
    CHECK(n.ball_vx * nx + n.ball_vy * ny > 0.0);
  }
  SUBCASE("angle encodings stay normalized and energy never grows without input") {
    auto s = PusherState::at_rest(0.3, 1.1, {0.5, 0.5}, p);
    s.q1_dot = 4.0;
    s.q2_dot = -6.0;
    double e = arm_kinetic_energy(s, p);
    for (int k = 0; k < 200; ++k) {
      s = pusher_step(s, {0, 0}, cfg);
      CHECK(std::abs(s.cos_q1 * s.cos_q1 + s.sin_q1 * s.sin_q1 - 1.0) < 1e-9);
      CHECK(std::abs(s.cos_q2 * s.cos_q2 + s.sin_q2 * s.sin_q2 - 1.0) < 1e-9);
      const double e2 = arm_kinetic_energy(s, p);
      CHECK(e2 <= e);
      e = e2;
    }
    Rng rng(3);
    for (int k = 0; k < 300; ++k) {
      s = pusher_step(s, {rng.uniform(-1, 1), rng.uniform(-1, 1)}, cfg);
      CHECK(std::abs(s.cos_q1 * s.cos_q1 + s.sin_q1 * s.sin_q1 - 1.0) < 1e-9);
      CHECK(std::abs(s.cos_q2 * s.cos_q2 + s.sin_q2 * s.sin_q2 - 1.0) < 1e-9);
    }
  }
  SUBCASE("tip observation is consistent with the angles") {
    Rng rng(9);
    auto s = PusherState::at_rest(0.1, 0.2, {0.1, 0.1}, p);
    for (int k = 0; k < 50; ++k) s = pusher_step(s, {rng.uniform(-1, 1), rng.uniform(-1, 1)}, cfg);
    auto tip = fingertip(s.cos_q1, s.sin_q1, s.cos_q2, s.sin_q2, p);
    CHECK(s.tip_x == doctest::Approx(tip[0]).epsilon(1e-12));
    CHECK(s.tip_y == doctest::Approx(tip[1]).epsilon(1e-12));
  }
}

TEST_CASE("pusher_success") {
  auto cfg = EnvConfig::pusher_default();
  cfg.pusher.target = {0.1, 0.05};
  auto at = PusherState::at_rest(0, 0, {0.1, 0.05}, cfg.pusher).to_vector();
  CHECK(pusher_success(flat_traj(10, at, 2), cfg));
  auto far = PusherState::at_rest(0, 0, {-0.1, -0.05}, cfg.pusher).to_vector();
  CHECK_FALSE(pusher_success(flat_traj(10, far, 2), cfg));
  auto fast = at;
  fast[pusher_index::ball_vx] = 0.5;
  CHECK_FALSE(pusher_success(flat_traj(10, fast, 2), cfg));
  CHECK(pusher_at_target(fast, cfg, /*position_only=*/true));
  // The trajectory's own target takes precedence over the config default.
  auto t = flat_traj(10, far, 2);
  t.target = {-0.1, -0.05};
  CHECK(pusher_success(t, cfg));
}

TEST_CASE("apply_action_noise") {
  Rng rng(1);
  const data::Vector a{0.3, -0.4};
  CHECK(apply_action_noise(a, 0.0, 1.0, rng) == a);

  double s1 = 0, s2 = 0;
  const int n = 100000;
  for (int k = 0; k < n; ++k) {
    // Centered far from the limits of +-100 so clamping never triggers.
    const double v = apply_action_noise(std::vector<double>{0.0}, 0.2, 100.0, rng)[0] / 100.0;
    s1 += v;
    s2 += v * v;
  }
  // frac 0.2 with range 2 (limit 1 scaled by 100) -> std 0.4.
  const double sd = std::sqrt(s2 / n - (s1 / n) * (s1 / n));
  CHECK(std::abs(sd - 0.4) / 0.4 < 0.02);

  for (int k = 0; k < 100; ++k) {
    const double v = apply_action_noise(std::vector<double>{1.0}, 0.2, 1.0, rng)[0];
    CHECK(v <= 1.0);
    CHECK(v >= -1.0);
  }
}

TEST_CASE("apply_arm_strength") {
  CHECK(apply_arm_strength({2, -1}, 1.0) == std::array<double, 2>{2, -1});
  CHECK(apply_arm_strength({2, -1}, 0.5) == std::array<double, 2>{1, -0.5});
}

TEST_CASE("simulator") {
  SUBCASE("deterministic without noise") {
    auto cfg = EnvConfig::pusher_default();
    NoiseConfig nc;
    Rng init(5);
    auto ic = sample_initial_condition(cfg, nc, init);
    Simulator a(cfg, nc, ic, 17), b(cfg, nc, ic, 99);
    for (int k = 0; k < 50; ++k) {
      const std::vector<double> act{std::sin(0.1 * k), std::cos(0.3 * k)};
      CHECK(a.step(act) == b.step(act));
    }
  }
  SUBCASE("episode strength is constant and hidden") {
    auto cfg = EnvConfig::pusher_default();
    NoiseConfig nc;
    nc.partially_observable = true;
    Rng init(6);
    auto ic = sample_initial_condition(cfg, nc, init);
    CHECK(ic.arm_strength >= 0.5);
    CHECK(ic.arm_strength <= 1.0);
    CHECK(ic.state.size() == 12);
    // Stepping the simulator equals stepping the unit-strength dynamics with
    // every action scaled by the same episode multiplier.
    Simulator sim(cfg, nc, ic, 3);
    auto ref = PusherState::from_vector(ic.state);
    const auto task = task_config(cfg, ic);
    for (int k = 0; k < 30; ++k) {
      const std::array<double, 2> act{0.8 * std::sin(0.2 * k), -0.6};
      sim.step(act);
      ref = pusher_step(ref, apply_arm_strength(act, ic.arm_strength), task);
      CHECK(sim.state() == ref.to_vector());
    }
  }
  SUBCASE("cartpole initial states within the sampling box") {
    auto cfg = EnvConfig::cartpole_default();
    Rng init(2);
    for (int k = 0; k < 100; ++k) {
      auto ic = sample_initial_condition(cfg, {}, init);
      for (double v : ic.state) CHECK(std::abs(v) <= 0.05);
    }
  }
}
