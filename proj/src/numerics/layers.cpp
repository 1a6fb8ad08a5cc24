#include "pwm/numerics/layers.hpp"

#include <cmath>

#include "pwm/errors.hpp"

namespace pwm::nn {

void init_affine(ParameterSet& ps, const std::string& prefix, std::size_t in, std::size_t out, ParamGroup group,
                 Rng& rng) {
  const double a = 1.0 / std::sqrt(static_cast<double>(in));
  Tensor w({out, in});
  for (auto& v : w.storage()) v = rng.uniform(-a, a);
  ps.add(prefix + ".weight", std::move(w), group);
  ps.add(prefix + ".bias", Tensor({out}, 0.0), group);
}

Var affine(Binding& bind, const std::string& prefix, const Var& x) {
  return affine(x, bind(prefix + ".weight"), bind(prefix + ".bias"));
}

void orthogonal_fill(Tensor& m, std::size_t row_offset, std::size_t rows, Rng& rng) {
  const std::size_t cols = m.cols();
  if (rows > cols) throw DimensionError("orthogonal_fill: more rows than columns");
  for (std::size_t r = 0; r < rows; ++r) {
    double* row = m.data() + (row_offset + r) * cols;
    for (;;) {
      for (std::size_t c = 0; c < cols; ++c) row[c] = rng.normal();
      // Modified Gram-Schmidt against the rows already placed.
      for (std::size_t q = 0; q < r; ++q) {
        const double* prev = m.data() + (row_offset + q) * cols;
        double d = 0.0;
        for (std::size_t c = 0; c < cols; ++c) d += row[c] * prev[c];
        for (std::size_t c = 0; c < cols; ++c) row[c] -= d * prev[c];
      }
      double norm = 0.0;
      for (std::size_t c = 0; c < cols; ++c) norm += row[c] * row[c];
      norm = std::sqrt(norm);
      if (norm > 1e-6) {
        for (std::size_t c = 0; c < cols; ++c) row[c] /= norm;
        break;
      }
    }
  }
}

void init_gru(ParameterSet& ps, const std::string& prefix, std::size_t in, std::size_t hidden, ParamGroup group,
              Rng& rng) {
  const double a = 1.0 / std::sqrt(static_cast<double>(hidden));
  Tensor w_ih({3 * hidden, in});
  for (auto& v : w_ih.storage()) v = rng.uniform(-a, a);
  Tensor w_hh({3 * hidden, hidden});
  for (std::size_t gate = 0; gate < 3; ++gate) orthogonal_fill(w_hh, gate * hidden, hidden, rng);
  ps.add(prefix + ".w_ih", std::move(w_ih), group);
  ps.add(prefix + ".w_hh", std::move(w_hh), group);
  ps.add(prefix + ".b_ih", Tensor({3 * hidden}, 0.0), group);
  ps.add(prefix + ".b_hh", Tensor({3 * hidden}, 0.0), group);
}

Var gru_step(Binding& bind, const std::string& prefix, const Var& x, const Var& h) {
  GruWeights w{bind(prefix + ".w_ih"), bind(prefix + ".w_hh"), bind(prefix + ".b_ih"), bind(prefix + ".b_hh")};
  return gru_step(x, h, w);
}

void init_gaussian_head(ParameterSet& ps, const std::string& prefix, std::size_t in, std::size_t dim,
                        ParamGroup group, Rng& rng) {
  init_affine(ps, prefix, in, 2 * dim, group, rng);
}

GaussianParams gaussian_head(Binding& bind, const std::string& prefix, const Var& h) {
  Var out = affine(bind, prefix, h);
  const std::size_t dim = out.cols() / 2;
  return {slice_cols(out, 0, dim), clamp(slice_cols(out, dim, 2 * dim), kLogvarMin, kLogvarMax)};
}

}  // namespace pwm::nn
