#pragma once

#include <cstdint>
#include <map>
#include <string>

#include "pwm/numerics/parameters.hpp"

namespace pwm::nn {

struct AdamState {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  std::uint64_t step = 0;
  std::map<std::string, Tensor> first_moment;
  std::map<std::string, Tensor> second_moment;
};

// Bias-corrected Adam update over every entry of `params`; zeroes the
// gradients afterwards. Moment buffers are created lazily on first use.
void adam_step(ParameterSet& params, AdamState& state);

}  // namespace pwm::nn
