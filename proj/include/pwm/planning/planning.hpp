#pragma once

#include <functional>
#include <span>
#include <vector>

#include "pwm/data/trajectory.hpp"
#include "pwm/env/config.hpp"
#include "pwm/models/models.hpp"
#include "pwm/rng.hpp"

namespace pwm::planning {

using data::Vector;
using ActionSeq = std::vector<Vector>;  // [h][action_dim], raw units

struct PlannerConfig {
  std::size_t candidates = 64;  // M
  std::size_t horizon = 15;     // h
  std::size_t iterations = 3;   // R
  double filter = 0.7;          // b
  double sigma_frac = 0.3;      // noise std as a fraction of the action range
  double gamma = 10.0;          // reward temperature
  double action_limit = 1.0;
  std::size_t action_dim = 1;

  double sigma() const { return sigma_frac * 2.0 * action_limit; }
  void validate() const;
};

// Planner defaults with the action bounds of `env`.
PlannerConfig planner_for(const env::EnvConfig& env);

// Task reward on a raw state and the raw action that produced it.
struct RewardFunction {
  env::EnvId task = env::EnvId::CartPole;
  Vector target{0.1, 0.0};  // pusher ball target
  // Replaces the task reward when set.
  std::function<double(std::span<const double>, std::span<const double>)> custom;

  double operator()(std::span<const double> s, std::span<const double> a) const;
};

// -(theta^2 + 0.01 x^2 + 0.001 F^2)
double reward_cartpole(std::span<const double> s, std::span<const double> a);
// -(|tip - ball| + 1.25 |ball - target| + 0.1 |ball velocity| + 0.001 |a|^2)
double reward_pusher(std::span<const double> s, std::span<const double> a, std::span<const double> target);

// M candidates a_t = clamp(mean_t + n_t) with n_t = b eps_t + (1 - b) n_{t-1},
// eps_t ~ N(0, sigma^2 I), n_{-1} = 0. Draws are consumed candidate by
// candidate, step by step.
std::vector<ActionSeq> sample_filtered_actions(const ActionSeq& mean, const PlannerConfig& cfg, Rng& rng);

// sum_k exp(gamma R_k) a^k / sum_k exp(gamma R_k), computed with a max shift.
// Non-finite rewards get zero weight; if none is finite, throws DivergenceError.
ActionSeq reward_weighted_mean(const std::vector<ActionSeq>& candidates, std::span<const double> rewards,
                               double gamma);

// Cumulative rewards of each candidate rolled out through a frozen DetRNN
// from raw state s, starting from recurrent state `hidden` ([1, d_h]).
std::vector<double> score_candidates(const std::vector<ActionSeq>& candidates, const models::WorldModel& plan_model,
                                     const nn::Tensor& hidden, std::span<const double> s,
                                     const RewardFunction& reward);

// Receding-horizon state carried between plan_action calls.
struct PlanState {
  ActionSeq mean;      // length h
  nn::Tensor hidden;   // planning model recurrent state, [1, d_h]
};

PlanState initial_plan_state(const PlannerConfig& cfg, const models::WorldModel& plan_model);

ActionSeq refine(const ActionSeq& mean, const models::WorldModel& plan_model, const nn::Tensor& hidden,
                 const RewardFunction& reward, const PlannerConfig& cfg, std::span<const double> s, Rng& rng);

// Refines, returns the first mean action, shifts the mean one step with a
// zero tail, and advances the planning model's recurrent state with (s, a*).
Vector plan_action(std::span<const double> s, const models::WorldModel& plan_model, PlanState& state,
                   const RewardFunction& reward, const PlannerConfig& cfg, Rng& rng);

}  // namespace pwm::planning
