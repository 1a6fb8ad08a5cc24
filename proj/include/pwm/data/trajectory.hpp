#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace pwm::data {

using Vector = std::vector<double>;

// Episode record: states[t] is s_t, actions[t] the commanded a_t that moved
// the system from s_t to s_{t+1}. Metadata never carries hidden dynamics
// parameters (the pusher arm strength in particular).
struct Trajectory {
  std::vector<Vector> states;
  std::vector<Vector> actions;
  std::string env_id;
  std::uint64_t seed = 0;
  double action_noise_frac = 0.0;
  bool partially_observable = false;
  // Task parameter the episode was judged against (pusher target); empty for cartpole.
  Vector target;
  // Set by the forecaster when a rollout produced a non-finite state.
  bool diverged = false;

  std::size_t steps() const { return actions.size(); }
  // Throws ContractError unless states.size() == actions.size() + 1 and dims are consistent.
  void validate(std::size_t state_dim, std::size_t action_dim) const;

  friend bool operator==(const Trajectory&, const Trajectory&) = default;
};

}  // namespace pwm::data
