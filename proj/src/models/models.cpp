#include "pwm/models/models.hpp"

#include <cmath>

#include "pwm/errors.hpp"

namespace pwm::models {

using nn::ParamGroup;
using nn::Tensor;

const char* to_string(ModelKind k) {
  switch (k) {
    case ModelKind::Rvae:
      return "rvae";
    case ModelKind::DetRnn:
      return "detrnn";
    case ModelKind::ProbMlp:
      return "probmlp";
  }
  return "?";
}

ModelKind model_kind_from_string(const std::string& s) {
  if (s == "rvae") return ModelKind::Rvae;
  if (s == "detrnn") return ModelKind::DetRnn;
  if (s == "probmlp") return ModelKind::ProbMlp;
  throw ConfigError("unknown model kind '" + s + "'");
}

WorldModel WorldModel::create(ModelKind kind, const ModelDims& dims, std::uint64_t seed) {
  if (dims.state == 0 || dims.action == 0 || dims.hidden == 0 || dims.latent == 0 || dims.mlp_hidden == 0)
    throw ConfigError("model dimensions must be positive");
  WorldModel m;
  m.kind = kind;
  m.dims = dims;
  Rng rng(seed);
  const std::size_t sa = dims.state + dims.action;
  switch (kind) {
    case ModelKind::Rvae:
      nn::init_gru(m.params, "enc.gru", sa, dims.hidden, ParamGroup::Encoder, rng);
      nn::init_gaussian_head(m.params, "enc.post", dims.hidden, dims.latent, ParamGroup::Encoder, rng);
      nn::init_gru(m.params, "dec.gru", sa + dims.latent, dims.hidden, ParamGroup::Decoder, rng);
      nn::init_gaussian_head(m.params, "dec.pred", dims.hidden, dims.state, ParamGroup::Decoder, rng);
      break;
    case ModelKind::DetRnn:
      nn::init_gru(m.params, "rnn.gru", sa, dims.hidden, ParamGroup::Baseline, rng);
      nn::init_affine(m.params, "rnn.head", dims.hidden, dims.state, ParamGroup::Baseline, rng);
      break;
    case ModelKind::ProbMlp:
      nn::init_affine(m.params, "mlp.fc1", sa, dims.mlp_hidden, ParamGroup::Baseline, rng);
      nn::init_affine(m.params, "mlp.fc2", dims.mlp_hidden, dims.mlp_hidden, ParamGroup::Baseline, rng);
      nn::init_gaussian_head(m.params, "mlp.head", dims.mlp_hidden, dims.state, ParamGroup::Baseline, rng);
      break;
  }
  // Output heads start small so initial predictions stay near the input state.
  for (const char* head : {"enc.post.weight", "dec.pred.weight", "rnn.head.weight", "mlp.head.weight"})
    if (m.params.contains(head))
      for (auto& v : m.params.value(head).storage()) v *= 0.1;
  return m;
}

std::size_t WorldModel::generative_parameter_count() const {
  return kind == ModelKind::Rvae ? params.count(ParamGroup::Decoder) : params.count();
}

bool parameter_parity(const ModelDims& dims) {
  const auto rvae = WorldModel::create(ModelKind::Rvae, dims, 0);
  const auto det = WorldModel::create(ModelKind::DetRnn, dims, 0);
  const double dec = static_cast<double>(rvae.params.count(ParamGroup::Decoder));
  const double d = static_cast<double>(det.parameter_count());
  return std::abs(d - dec) <= 0.2 * dec;
}

namespace {

nn::GaussianParams residual_mean(const ModelDims& dims, const Var& s, nn::GaussianParams g) {
  if (dims.residual) g.mean = nn::add(g.mean, s);
  return g;
}

}  // namespace

EncodeOut rvae_encode_step(Binding& bind, const Var& s, const Var& a, const Var& h_enc) {
  Var h = nn::gru_step(bind, "enc.gru", nn::concat({s, a}), h_enc);
  return {h, nn::gaussian_head(bind, "enc.post", h)};
}

DecodeOut rvae_decode_step(Binding& bind, const ModelDims& dims, const Var& s, const Var& a, const Var& z,
                           const Var& h_dec) {
  Var h = nn::gru_step(bind, "dec.gru", nn::concat({s, a, z}), h_dec);
  return {h, residual_mean(dims, s, nn::gaussian_head(bind, "dec.pred", h))};
}

PointOut detrnn_step(Binding& bind, const ModelDims& dims, const Var& s, const Var& a, const Var& h_prev) {
  Var h = nn::gru_step(bind, "rnn.gru", nn::concat({s, a}), h_prev);
  Var out = nn::affine(bind, "rnn.head", h);
  if (dims.residual) out = nn::add(out, s);
  return {h, out};
}

GaussianParams probmlp_head(Binding& bind, const ModelDims& dims, const Var& s, const Var& a) {
  Var x = nn::tanh(nn::affine(bind, "mlp.fc1", nn::concat({s, a})));
  x = nn::tanh(nn::affine(bind, "mlp.fc2", x));
  return residual_mean(dims, s, nn::gaussian_head(bind, "mlp.head", x));
}

Generator::Generator(const WorldModel& model, std::size_t batch, NoiseMode noise)
    : model_(&model), bind_(model.params, false), batch_(batch), noise_(noise) {
  if (batch == 0) throw ContractError("generator batch must be positive");
  reset();
}

void Generator::reset() {
  if (model_->kind == ModelKind::ProbMlp)
    h_ = Tensor();
  else
    h_ = Tensor({batch_, model_->dims.hidden}, 0.0);
}

Tensor Generator::step(const Tensor& s_norm, const Tensor& a_norm, Rng& rng) {
  const auto& d = model_->dims;
  if (s_norm.shape() != nn::Shape{batch_, d.state} || a_norm.shape() != nn::Shape{batch_, d.action})
    throw DimensionError("generator step: expected [" + std::to_string(batch_) + ", dim] inputs");
  auto draw = [&](std::size_t cols) {
    Tensor t({batch_, cols}, 0.0);
    if (noise_ == NoiseMode::Sample) t = rng.normal(t.shape());
    return t;
  };
  Var s = Var::view(s_norm);
  Var a = Var::view(a_norm);
  switch (model_->kind) {
    case ModelKind::Rvae: {
      Tensor z = draw(d.latent);
      auto out = rvae_decode_step(bind_, d, s, a, Var::view(z), Var::view(h_));
      Tensor eps = draw(d.state);
      Tensor next = nn::gaussian_sample(out.prediction.mean, out.prediction.logvar, eps).value();
      h_ = out.h.value();
      return next;
    }
    case ModelKind::DetRnn: {
      auto out = detrnn_step(bind_, d, s, a, Var::view(h_));
      h_ = out.h.value();
      return out.prediction.value();
    }
    case ModelKind::ProbMlp: {
      auto g = probmlp_head(bind_, d, s, a);
      Tensor eps = draw(d.state);
      return nn::gaussian_sample(g.mean, g.logvar, eps).value();
    }
  }
  throw ContractError("unknown model kind");
}

}  // namespace pwm::models
