#pragma once

#include <cstdint>
#include <string>

#include "pwm/data/dataset.hpp"
#include "pwm/numerics/layers.hpp"
#include "pwm/numerics/parameters.hpp"
#include "pwm/rng.hpp"

namespace pwm::models {

enum class ModelKind : std::uint8_t { Rvae, DetRnn, ProbMlp };

const char* to_string(ModelKind k);
ModelKind model_kind_from_string(const std::string& s);

struct ModelDims {
  std::size_t state = 0;
  std::size_t action = 0;
  std::size_t latent = 8;
  std::size_t hidden = 128;      // GRU width (RVAE encoder/decoder, DetRNN)
  std::size_t mlp_hidden = 256;  // ProbMLP hidden layers
  // Heads predict s_{t+1} - s_t (normalized space) instead of s_{t+1}.
  bool residual = true;

  friend bool operator==(const ModelDims&, const ModelDims&) = default;
};

// A world model: architecture tag, dimensions, parameters and the
// normalization statistics its inputs/outputs are expressed in.
struct WorldModel {
  ModelKind kind = ModelKind::Rvae;
  ModelDims dims;
  data::NormStats stats;
  std::string env_fingerprint;
  nn::ParameterSet params;

  static WorldModel create(ModelKind kind, const ModelDims& dims, std::uint64_t seed);
  std::size_t parameter_count() const { return params.count(); }
  // Parameters used at generation time (decoder path for the RVAE).
  std::size_t generative_parameter_count() const;
};

// DetRNN parameter count within +-20% of the RVAE decoder path for `dims`.
bool parameter_parity(const ModelDims& dims);

using nn::Binding;
using nn::GaussianParams;
using nn::Var;

struct EncodeOut {
  Var h;
  GaussianParams posterior;
};
struct DecodeOut {
  Var h;
  GaussianParams prediction;
};
struct PointOut {
  Var h;
  Var prediction;
};

// h' = GRU_enc([s, a], h); posterior head on h'.
EncodeOut rvae_encode_step(Binding& bind, const Var& s, const Var& a, const Var& h_enc);
// h' = GRU_dec([s, a, z], h); predictive head on h' (plus s when residual).
DecodeOut rvae_decode_step(Binding& bind, const ModelDims& dims, const Var& s, const Var& a, const Var& z,
                           const Var& h_dec);
PointOut detrnn_step(Binding& bind, const ModelDims& dims, const Var& s, const Var& a, const Var& h);
GaussianParams probmlp_head(Binding& bind, const ModelDims& dims, const Var& s, const Var& a);

enum class NoiseMode : std::uint8_t { Sample, Zero };

// Frozen, batched one-step generator in normalized space. Holds whatever
// recurrent state the model needs; reset() before each rollout.
//   RVAE:    z ~ N(0, I) from the prior, decoder step, s' sampled from the prediction
//   DetRNN:  point prediction
//   ProbMLP: s' sampled from the Gaussian head
// Random draws per step: latent noise (RVAE) then state noise, row-major.
class Generator {
 public:
  Generator(const WorldModel& model, std::size_t batch = 1, NoiseMode noise = NoiseMode::Sample);

  void reset();
  nn::Tensor step(const nn::Tensor& s_norm, const nn::Tensor& a_norm, Rng& rng);
  const nn::Tensor& hidden() const { return h_; }
  void set_hidden(const nn::Tensor& h) { h_ = h; }
  std::size_t batch() const { return batch_; }
  const WorldModel& model() const { return *model_; }

 private:
  const WorldModel* model_;
  nn::Binding bind_;
  std::size_t batch_;
  NoiseMode noise_;
  nn::Tensor h_;
};

}  // namespace pwm::models
