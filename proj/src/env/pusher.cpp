#include "pwm/env/pusher.hpp"

#include <algorithm>
#include <cmath>

#include "pwm/errors.hpp"

namespace pwm::env {

data::Vector PusherState::to_vector() const {
  return {tip_x, tip_y, cos_q1, sin_q1, q1_dot, cos_q2, sin_q2, q2_dot, ball_x, ball_y, ball_vx, ball_vy};
}

PusherState PusherState::from_vector(std::span<const double> v) {
  if (v.size() != 12) throw DimensionError("pusher state must have 12 entries");
  return {v[0], v[1], v[2], v[3], v[4], v[5], v[6], v[7], v[8], v[9], v[10], v[11]};
}

std::array<double, 2> fingertip(double c1, double s1, double c2, double s2, const PusherParams& p) {
  const double c12 = c1 * c2 - s1 * s2;
  const double s12 = s1 * c2 + c1 * s2;
  return {p.link1 * c1 + p.link2 * c12, p.link1 * s1 + p.link2 * s12};
}

PusherState PusherState::at_rest(double q1, double q2, std::array<double, 2> ball, const PusherParams& p) {
  PusherState s;
  s.cos_q1 = std::cos(q1);
  s.sin_q1 = std::sin(q1);
  s.cos_q2 = std::cos(q2);
  s.sin_q2 = std::sin(q2);
  const auto tip = fingertip(s.cos_q1, s.sin_q1, s.cos_q2, s.sin_q2, p);
  s.tip_x = tip[0];
  s.tip_y = tip[1];
  s.ball_x = ball[0];
  s.ball_y = ball[1];
  return s;
}

std::array<double, 2> contact_force(std::array<double, 2> tip, std::array<double, 2> tip_vel,
                                    std::array<double, 2> ball, std::array<double, 2> ball_vel,
                                    const PusherParams& p) {
  const double dx = ball[0] - tip[0];
  const double dy = ball[1] - tip[1];
  const double dist = std::hypot(dx, dy);
  if (dist >= p.contact_radius || dist < 1e-12) return {0.0, 0.0};
  const double nx = dx / dist, ny = dy / dist;
  const double penetration = p.contact_radius - dist;
  const double closing = (tip_vel[0] - ball_vel[0]) * nx + (tip_vel[1] - ball_vel[1]) * ny;
  const double magnitude = std::max(0.0, p.contact_stiffness * penetration + p.contact_damping * closing);
  return {magnitude * nx, magnitude * ny};
}

namespace {

struct MassMatrix {
  double m11, m12, m22;
};

MassMatrix mass_matrix(double c2, const PusherParams& p) {
  const double a = p.mass2 * p.link1 * p.link2;
  return {(p.mass1 + p.mass2) * p.link1 * p.link1 + p.mass2 * p.link2 * p.link2 + 2 * a * c2,
          p.mass2 * p.link2 * p.link2 + a * c2, p.mass2 * p.link2 * p.link2};
}

// Rotates the (cos, sin) encoding by angle d.
void rotate(double& c, double& s, double d) {
  if (d == 0.0) return;
  const double cd = std::cos(d), sd = std::sin(d);
  const double nc = c * cd - s * sd;
  const double ns = s * cd + c * sd;
  c = nc;
  s = ns;
}

void renormalize(double& c, double& s) {
  const double n = std::hypot(c, s);
  c /= n;
  s /= n;
}

}  // namespace

double arm_kinetic_energy(const PusherState& s, const PusherParams& p) {
  const auto m = mass_matrix(s.cos_q2, p);
  return 0.5 * (m.m11 * s.q1_dot * s.q1_dot + 2 * m.m12 * s.q1_dot * s.q2_dot + m.m22 * s.q2_dot * s.q2_dot);
}

PusherState pusher_step(const PusherState& s, std::array<double, 2> torques, const EnvConfig& cfg) {
  const auto v = s.to_vector();
  if (!std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); }) || !std::isfinite(torques[0]) ||
      !std::isfinite(torques[1]))
    throw ContractError("pusher_step: non-finite input");
  const auto& p = cfg.pusher;
  const double tau1 = p.torque_gain * std::clamp(torques[0], -p.action_limit, p.action_limit);
  const double tau2 = p.torque_gain * std::clamp(torques[1], -p.action_limit, p.action_limit);
  const double h = cfg.dt / p.substeps;
  const double a = p.mass2 * p.link1 * p.link2;
  const double ball_decay = std::exp(-p.ball_friction * h);

  double c1 = s.cos_q1, s1 = s.sin_q1, c2 = s.cos_q2, s2 = s.sin_q2;
  double qd1 = s.q1_dot, qd2 = s.q2_dot;
  double bx = s.ball_x, by = s.ball_y, bvx = s.ball_vx, bvy = s.ball_vy;
  bool rotated = false;

  for (int k = 0; k < p.substeps; ++k) {
    const double c12 = c1 * c2 - s1 * s2;
    const double s12 = s1 * c2 + c1 * s2;
    const std::array<double, 2> tip{p.link1 * c1 + p.link2 * c12, p.link1 * s1 + p.link2 * s12};
    // Fingertip Jacobian columns.
    const double j11 = -p.link1 * s1 - p.link2 * s12, j12 = -p.link2 * s12;
    const double j21 = p.link1 * c1 + p.link2 * c12, j22 = p.link2 * c12;
    const std::array<double, 2> tip_vel{j11 * qd1 + j12 * qd2, j21 * qd1 + j22 * qd2};

    const auto f = contact_force(tip, tip_vel, {bx, by}, {bvx, bvy}, p);
    // Reaction on the fingertip, mapped to joint torques via J^T.
    const double tc1 = -(j11 * f[0] + j21 * f[1]);
    const double tc2 = -(j12 * f[0] + j22 * f[1]);

    const auto m = mass_matrix(c2, p);
    const double cor1 = -a * s2 * (2 * qd1 * qd2 + qd2 * qd2);
    const double cor2 = a * s2 * qd1 * qd1;
    const double r1 = tau1 + tc1 - cor1 - p.joint_damping * qd1;
    const double r2 = tau2 + tc2 - cor2 - p.joint_damping * qd2;
    const double det = m.m11 * m.m22 - m.m12 * m.m12;
    const double qdd1 = (m.m22 * r1 - m.m12 * r2) / det;
    const double qdd2 = (m.m11 * r2 - m.m12 * r1) / det;

    qd1 += h * qdd1;
    qd2 += h * qdd2;
    if (qd1 != 0.0 || qd2 != 0.0) rotated = true;
    rotate(c1, s1, h * qd1);
    rotate(c2, s2, h * qd2);

    bvx = (bvx + h * f[0] / p.ball_mass) * ball_decay;
    bvy = (bvy + h * f[1] / p.ball_mass) * ball_decay;
    bx += h * bvx;
    by += h * bvy;
  }
  if (rotated) {
    renormalize(c1, s1);
    renormalize(c2, s2);
  }

  PusherState n;
  const auto tip = rotated ? fingertip(c1, s1, c2, s2, p) : std::array<double, 2>{s.tip_x, s.tip_y};
  n.tip_x = tip[0];
  n.tip_y = tip[1];
  n.cos_q1 = c1;
  n.sin_q1 = s1;
  n.q1_dot = qd1;
  n.cos_q2 = c2;
  n.sin_q2 = s2;
  n.q2_dot = qd2;
  n.ball_x = bx;
  n.ball_y = by;
  n.ball_vx = bvx;
  n.ball_vy = bvy;
  return n;
}

bool pusher_at_target(std::span<const double> state, const EnvConfig& cfg, bool position_only) {
  using namespace pusher_index;
  const auto& p = cfg.pusher;
  const double d = std::hypot(state[ball_x] - p.target[0], state[ball_y] - p.target[1]);
  if (!(d < p.target_radius)) return false;
  return position_only || std::hypot(state[ball_vx], state[ball_vy]) < p.target_speed;
}

bool pusher_success(const data::Trajectory& traj, const EnvConfig& cfg) {
  if (traj.diverged) return false;
  EnvConfig c = cfg;
  if (traj.target.size() == 2) c.pusher.target = {traj.target[0], traj.target[1]};
  return std::any_of(traj.states.begin(), traj.states.end(),
                     [&](const data::Vector& s) { return pusher_at_target(s, c); });
}

}  // namespace pwm::env
