#include "pwm/numerics/adam.hpp"

#include <cmath>

namespace pwm::nn {

void adam_step(ParameterSet& params, AdamState& state) {
  ++state.step;
  const double t = static_cast<double>(state.step);
  const double c1 = 1.0 - std::pow(state.beta1, t);
  const double c2 = 1.0 - std::pow(state.beta2, t);
  for (auto& [name, e] : params.entries()) {
    auto& m = state.first_moment.try_emplace(name, e.value.shape(), 0.0).first->second;
    auto& v = state.second_moment.try_emplace(name, e.value.shape(), 0.0).first->second;
    for (std::size_t i = 0; i < e.value.size(); ++i) {
      const double g = e.grad[i];
      m[i] = state.beta1 * m[i] + (1.0 - state.beta1) * g;
      v[i] = state.beta2 * v[i] + (1.0 - state.beta2) * g * g;
      e.value[i] -= state.learning_rate * (m[i] / c1) / (std::sqrt(v[i] / c2) + state.epsilon);
    }
    e.grad.fill(0.0);
  }
}

}  // namespace pwm::nn
