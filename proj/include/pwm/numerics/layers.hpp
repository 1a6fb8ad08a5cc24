#pragma once

#include <string>

#include "pwm/numerics/autodiff.hpp"
#include "pwm/numerics/parameters.hpp"
#include "pwm/rng.hpp"

namespace pwm::nn {

inline constexpr double kLogvarMin = -10.0;
inline constexpr double kLogvarMax = 6.0;

// Diagonal Gaussian; logvar is always clamped to [kLogvarMin, kLogvarMax].
struct GaussianParams {
  Var mean;
  Var logvar;
};

// Parameter naming: "<prefix>.weight" [out, in] and "<prefix>.bias" [out].
void init_affine(ParameterSet& ps, const std::string& prefix, std::size_t in, std::size_t out, ParamGroup group,
                 Rng& rng);
Var affine(Binding& bind, const std::string& prefix, const Var& x);

// "<prefix>.w_ih", "<prefix>.w_hh", "<prefix>.b_ih", "<prefix>.b_hh".
// Recurrent blocks are orthogonal, input weights small-uniform, biases zero.
void init_gru(ParameterSet& ps, const std::string& prefix, std::size_t in, std::size_t hidden, ParamGroup group,
              Rng& rng);
Var gru_step(Binding& bind, const std::string& prefix, const Var& x, const Var& h);

// Affine layer producing [mean | logvar] over `dim` outputs, logvar clamped.
void init_gaussian_head(ParameterSet& ps, const std::string& prefix, std::size_t in, std::size_t dim,
                        ParamGroup group, Rng& rng);
GaussianParams gaussian_head(Binding& bind, const std::string& prefix, const Var& h);

// Fills `m` ([rows, cols], rows <= cols) with orthonormal rows.
void orthogonal_fill(Tensor& m, std::size_t row_offset, std::size_t rows, Rng& rng);

}  // namespace pwm::nn
