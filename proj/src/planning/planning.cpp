#include "pwm/planning/planning.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "pwm/env/pusher.hpp"
#include "pwm/errors.hpp"

namespace pwm::planning {

using nn::Tensor;

void PlannerConfig::validate() const {
  if (candidates < 2) throw ConfigError("planner needs at least 2 candidates");
  if (horizon < 1) throw ConfigError("planner horizon must be >= 1");
  if (iterations < 1) throw ConfigError("planner needs at least one refinement iteration");
  if (!(filter > 0.0 && filter <= 1.0)) throw ConfigError("planner filter coefficient must be in (0, 1]");
  if (!(sigma_frac >= 0.0)) throw ConfigError("planner noise scale must be >= 0");
  if (!(gamma > 0.0)) throw ConfigError("planner reward temperature must be positive");
  if (!(action_limit > 0.0) || action_dim < 1) throw ConfigError("planner action bounds invalid");
}

PlannerConfig planner_for(const env::EnvConfig& env) {
  PlannerConfig p;
  p.action_limit = env.action_limit();
  p.action_dim = env.action_dim();
  return p;
}

double reward_cartpole(std::span<const double> s, std::span<const double> a) {
  const double x = s[0], theta = s[2], f = a[0];
  return -(theta * theta + 0.01 * x * x + 0.001 * f * f);
}

double reward_pusher(std::span<const double> s, std::span<const double> a, std::span<const double> target) {
  namespace ix = env::pusher_index;
  const double bx = s[ix::ball_x], by = s[ix::ball_y];
  const double a2 = std::inner_product(a.begin(), a.end(), a.begin(), 0.0);
  return -(std::hypot(s[ix::tip_x] - bx, s[ix::tip_y] - by) + 1.25 * std::hypot(bx - target[0], by - target[1]) +
           0.1 * std::hypot(s[ix::ball_vx], s[ix::ball_vy]) + 0.001 * a2);
}

double RewardFunction::operator()(std::span<const double> s, std::span<const double> a) const {
  if (custom) return custom(s, a);
  return task == env::EnvId::CartPole ? reward_cartpole(s, a) : reward_pusher(s, a, target);
}

std::vector<ActionSeq> sample_filtered_actions(const ActionSeq& mean, const PlannerConfig& cfg, Rng& rng) {
  if (mean.size() != cfg.horizon) throw DimensionError("planner mean sequence must have length h");
  const double sigma = cfg.sigma(), b = cfg.filter, lim = cfg.action_limit;
  std::vector<ActionSeq> out(cfg.candidates, ActionSeq(cfg.horizon, Vector(cfg.action_dim)));
  Vector n(cfg.action_dim);
  for (auto& seq : out) {
    std::fill(n.begin(), n.end(), 0.0);
    for (std::size_t t = 0; t < cfg.horizon; ++t) {
      if (mean[t].size() != cfg.action_dim) throw DimensionError("planner mean action has the wrong dimension");
      for (std::size_t i = 0; i < cfg.action_dim; ++i) {
        n[i] = b * sigma * rng.normal() + (1.0 - b) * n[i];
        seq[t][i] = std::clamp(mean[t][i] + n[i], -lim, lim);
      }
    }
  }
  return out;
}

ActionSeq reward_weighted_mean(const std::vector<ActionSeq>& candidates, std::span<const double> rewards,
                               double gamma) {
  if (candidates.empty() || candidates.size() != rewards.size())
    throw DimensionError("one reward per candidate required");
  double best = -std::numeric_limits<double>::infinity();
  for (double r : rewards)
    if (std::isfinite(r)) best = std::max(best, r);
  if (!std::isfinite(best)) throw DivergenceError("planner: no candidate has a finite reward");
  ActionSeq mean(candidates.front().size(), Vector(candidates.front().front().size(), 0.0));
  double total = 0.0;
  for (std::size_t k = 0; k < candidates.size(); ++k) {
    if (!std::isfinite(rewards[k])) continue;
    const double w = std::exp(gamma * (rewards[k] - best));
    total += w;
    for (std::size_t t = 0; t < mean.size(); ++t)
      for (std::size_t i = 0; i < mean[t].size(); ++i) mean[t][i] += w * candidates[k][t][i];
  }
  for (auto& a : mean)
    for (auto& v : a) v /= total;
  return mean;
}

namespace {

void require_planning_model(const models::WorldModel& m) {
  if (m.kind != models::ModelKind::DetRnn) throw ContractError("the planning model must be a deterministic RNN");
}

}  // namespace

std::vector<double> score_candidates(const std::vector<ActionSeq>& candidates, const models::WorldModel& plan_model,
                                     const Tensor& hidden, std::span<const double> s, const RewardFunction& reward) {
  require_planning_model(plan_model);
  const std::size_t M = candidates.size(), H = candidates.front().size();
  const auto& st = plan_model.stats;
  const std::size_t sd = plan_model.dims.state, ad = plan_model.dims.action, dh = plan_model.dims.hidden;
  if (s.size() != sd) throw DimensionError("planner state has the wrong dimension");

  models::Generator gen(plan_model, M, models::NoiseMode::Zero);
  Tensor h({M, dh});
  for (std::size_t k = 0; k < M; ++k) std::copy(hidden.span().begin(), hidden.span().end(), &h.at(k, 0));
  gen.set_hidden(h);
  Tensor cur({M, sd});
  const auto s_norm = st.normalize_state(s);
  for (std::size_t k = 0; k < M; ++k) std::copy(s_norm.begin(), s_norm.end(), &cur.at(k, 0));

  std::vector<double> total(M, 0.0);
  Rng unused(0);
  Tensor a({M, ad});
  for (std::size_t t = 0; t < H; ++t) {
    for (std::size_t k = 0; k < M; ++k) {
      const auto an = st.normalize_action(candidates[k][t]);
      std::copy(an.begin(), an.end(), &a.at(k, 0));
    }
    Tensor next = gen.step(cur, a, unused);
    for (std::size_t k = 0; k < M; ++k) {
      const auto raw = st.denormalize_state(std::span<const double>(&next.at(k, 0), sd));
      total[k] += reward(raw, candidates[k][t]);
    }
    cur = std::move(next);
  }
  return total;
}

PlanState initial_plan_state(const PlannerConfig& cfg, const models::WorldModel& plan_model) {
  require_planning_model(plan_model);
  return {ActionSeq(cfg.horizon, Vector(cfg.action_dim, 0.0)), Tensor({1, plan_model.dims.hidden}, 0.0)};
}

ActionSeq refine(const ActionSeq& mean_in, const models::WorldModel& plan_model, const Tensor& hidden,
                 const RewardFunction& reward, const PlannerConfig& cfg, std::span<const double> s, Rng& rng) {
  ActionSeq mean = mean_in;
  for (std::size_t it = 0; it < cfg.iterations; ++it) {
    const auto cands = sample_filtered_actions(mean, cfg, rng);
    const auto rewards = score_candidates(cands, plan_model, hidden, s, reward);
    mean = reward_weighted_mean(cands, rewards, cfg.gamma);
  }
  return mean;
}

Vector plan_action(std::span<const double> s, const models::WorldModel& plan_model, PlanState& state,
                   const RewardFunction& reward, const PlannerConfig& cfg, Rng& rng) {
  state.mean = refine(state.mean, plan_model, state.hidden, reward, cfg, s, rng);
  Vector action = state.mean.front();
  for (auto& v : action) v = std::clamp(v, -cfg.action_limit, cfg.action_limit);
  state.mean.erase(state.mean.begin());
  state.mean.emplace_back(cfg.action_dim, 0.0);

  models::Binding bind(plan_model.params, false);
  const auto sn = plan_model.stats.normalize_state(s);
  const auto an = plan_model.stats.normalize_action(action);
  auto out = models::detrnn_step(bind, plan_model.dims, models::Var::constant(Tensor({1, sn.size()}, sn)),
                                 models::Var::constant(Tensor({1, an.size()}, an)), models::Var::view(state.hidden));
  state.hidden = out.h.value();
  return action;
}

}  // namespace pwm::planning
