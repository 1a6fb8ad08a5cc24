#include "pwm/data/trajectory.hpp"

#include "pwm/errors.hpp"

namespace pwm::data {

void Trajectory::validate(std::size_t state_dim, std::size_t action_dim) const {
  if (states.size() != actions.size() + 1)
    throw ContractError("trajectory must have exactly one more state than actions");
  for (const auto& s : states)
    if (s.size() != state_dim) throw DimensionError("trajectory state has wrong dimension");
  for (const auto& a : actions)
    if (a.size() != action_dim) throw DimensionError("trajectory action has wrong dimension");
}

}  // namespace pwm::data
