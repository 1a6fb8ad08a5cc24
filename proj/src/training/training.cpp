#include "pwm/training/training.hpp"

#include <cmath>
#include <numeric>

#include "pwm/errors.hpp"
#include "pwm/numerics/adam.hpp"

namespace pwm::training {

using models::Binding;
using models::ModelDims;
using models::ModelKind;
using nn::Tensor;
using nn::Var;

const char* to_string(BetaMode m) {
  switch (m) {
    case BetaMode::Constant:
      return "constant";
    case BetaMode::LinearAnneal:
      return "linear";
    case BetaMode::Cyclic:
      return "cyclic";
  }
  return "?";
}

BetaMode beta_mode_from_string(const std::string& s) {
  if (s == "constant") return BetaMode::Constant;
  if (s == "linear" || s == "linear-anneal") return BetaMode::LinearAnneal;
  if (s == "cyclic") return BetaMode::Cyclic;
  throw ConfigError("unknown beta schedule '" + s + "'");
}

void BetaSchedule::validate() const {
  if (!(beta_max >= 0.0) || !std::isfinite(beta_max)) throw ConfigError("beta_max must be >= 0");
  if (!(warmup > 0.0 && warmup <= 1.0)) throw ConfigError("beta warmup must be in (0, 1]");
  if (cycles < 1) throw ConfigError("beta cycles must be >= 1");
}

double beta_at(const BetaSchedule& s, std::uint64_t step, std::uint64_t total) {
  if (s.mode == BetaMode::Constant) return s.beta_max;
  if (total == 0) return 0.0;
  double pos = static_cast<double>(step) / static_cast<double>(total);
  if (s.mode == BetaMode::Cyclic) {
    const double phase = pos * s.cycles;
    pos = phase - std::floor(phase);
  }
  return s.beta_max * std::min(1.0, pos / s.warmup);
}

void TrainConfig::validate() const {
  if (epochs < 0) throw ConfigError("epochs must be >= 0");
  if (batch_size < 1) throw ConfigError("batch size must be >= 1");
  if (!(learning_rate > 0.0)) throw ConfigError("learning rate must be positive");
  if (!(grad_clip > 0.0)) throw ConfigError("gradient clip norm must be positive");
  if (!(validation_fraction > 0.0 && validation_fraction <= 0.5))
    throw ConfigError("validation fraction must be in (0, 0.5]");
}

std::size_t train_split(std::size_t n, double validation_fraction) {
  const auto val = static_cast<std::size_t>(std::llround(validation_fraction * static_cast<double>(n)));
  return n > val ? n - val : 0;
}

SequenceBatch make_batch(const std::vector<data::Trajectory>& trajs, const std::vector<std::size_t>& idx,
                         const data::NormStats& stats) {
  if (idx.empty()) throw ContractError("make_batch: empty index set");
  const auto& first = trajs.at(idx.front());
  const std::size_t T = first.steps();
  const std::size_t sd = stats.state_mean.size(), ad = stats.action_mean.size();
  const std::size_t B = idx.size();
  SequenceBatch b;
  b.states.assign(T + 1, Tensor({B, sd}, 0.0));
  b.actions.assign(T, Tensor({B, ad}, 0.0));
  for (std::size_t r = 0; r < B; ++r) {
    const auto& tr = trajs.at(idx[r]);
    if (tr.steps() != T) throw ContractError("make_batch: trajectories differ in length");
    for (std::size_t t = 0; t <= T; ++t) {
      const auto s = stats.normalize_state(tr.states[t]);
      std::copy(s.begin(), s.end(), b.states[t].storage().begin() + static_cast<std::ptrdiff_t>(r * sd));
    }
    for (std::size_t t = 0; t < T; ++t) {
      const auto a = stats.normalize_action(tr.actions[t]);
      std::copy(a.begin(), a.end(), b.actions[t].storage().begin() + static_cast<std::ptrdiff_t>(r * ad));
    }
  }
  return b;
}

namespace {

Var accumulate(const Var& total, const Var& term, bool first) { return first ? term : nn::add(total, term); }

}  // namespace

LossTerms rvae_sequence_loss(Binding& bind, const ModelDims& dims, const SequenceBatch& batch, double beta,
                             Rng& rng) {
  const std::size_t B = batch.batch(), T = batch.steps();
  if (T == 0) throw ContractError("sequence loss needs at least one step");
  Var h_enc = Var::constant(Tensor({B, dims.hidden}, 0.0));
  Var h_dec = Var::constant(Tensor({B, dims.hidden}, 0.0));
  LossTerms out;
  Var recon_total, kl_total;
  for (std::size_t t = 0; t < T; ++t) {
    Var s = Var::view(batch.states[t]);
    Var a = Var::view(batch.actions[t]);
    auto enc = models::rvae_encode_step(bind, s, a, h_enc);
    h_enc = enc.h;
    const Tensor eps = rng.normal({B, dims.latent});
    Var z = nn::gaussian_sample(enc.posterior.mean, enc.posterior.logvar, eps);
    auto dec = models::rvae_decode_step(bind, dims, s, a, z, h_dec);
    h_dec = dec.h;
    Var nll = nn::gaussian_nll(dec.prediction.mean, dec.prediction.logvar, batch.states[t + 1]);
    Var kl = nn::kl_to_standard_normal(enc.posterior.mean, enc.posterior.logvar);
    recon_total = accumulate(recon_total, nll, t == 0);
    kl_total = accumulate(kl_total, kl, t == 0);
  }
  out.recon = recon_total.value()[0];
  out.kl = kl_total.value()[0];
  out.loss = beta == 0.0 ? recon_total : nn::add(recon_total, nn::scale(kl_total, beta));
  return out;
}

LossTerms detrnn_sequence_loss(Binding& bind, const ModelDims& dims, const SequenceBatch& batch) {
  const std::size_t B = batch.batch(), T = batch.steps();
  if (T == 0) throw ContractError("sequence loss needs at least one step");
  Var h = Var::constant(Tensor({B, dims.hidden}, 0.0));
  Var total;
  for (std::size_t t = 0; t < T; ++t) {
    auto step = models::detrnn_step(bind, dims, Var::view(batch.states[t]), Var::view(batch.actions[t]), h);
    h = step.h;
    total = accumulate(total, nn::squared_error(step.prediction, batch.states[t + 1]), t == 0);
  }
  return {total, total.value()[0], 0.0};
}

LossTerms probmlp_sequence_loss(Binding& bind, const ModelDims& dims, const SequenceBatch& batch) {
  const std::size_t T = batch.steps();
  if (T == 0) throw ContractError("sequence loss needs at least one step");
  Var total;
  for (std::size_t t = 0; t < T; ++t) {
    auto g = models::probmlp_head(bind, dims, Var::view(batch.states[t]), Var::view(batch.actions[t]));
    total = accumulate(total, nn::gaussian_nll(g.mean, g.logvar, batch.states[t + 1]), t == 0);
  }
  return {total, total.value()[0], 0.0};
}

LossTerms sequence_loss(ModelKind kind, Binding& bind, const ModelDims& dims, const SequenceBatch& batch,
                        double beta, Rng& rng) {
  switch (kind) {
    case ModelKind::Rvae:
      return rvae_sequence_loss(bind, dims, batch, beta, rng);
    case ModelKind::DetRnn:
      return detrnn_sequence_loss(bind, dims, batch);
    case ModelKind::ProbMlp:
      return probmlp_sequence_loss(bind, dims, batch);
  }
  throw ContractError("unknown model kind");
}

std::string metrics_json(const EpochMetrics& m) {
  return "{\"epoch\":" + std::to_string(m.epoch) + ",\"train_recon\":" + data::format_real(m.train_recon) +
         ",\"train_kl\":" + data::format_real(m.train_kl) + ",\"beta\":" + data::format_real(m.beta) +
         ",\"val_recon\":" + data::format_real(m.val_recon) + ",\"val_kl\":" + data::format_real(m.val_kl) + "}";
}

namespace {

std::vector<std::vector<std::size_t>> chunk(const std::vector<std::size_t>& order, std::size_t size) {
  std::vector<std::vector<std::size_t>> out;
  for (std::size_t i = 0; i < order.size(); i += size)
    out.emplace_back(order.begin() + static_cast<std::ptrdiff_t>(i),
                     order.begin() + static_cast<std::ptrdiff_t>(std::min(order.size(), i + size)));
  return out;
}

void shuffle(std::vector<std::size_t>& v, Rng& rng) {
  for (std::size_t i = v.size(); i > 1; --i) std::swap(v[i - 1], v[rng.next_u64() % i]);
}

struct Means {
  double recon = 0.0, kl = 0.0;
};

Means validate(const models::WorldModel& m, const std::vector<SequenceBatch>& batches, std::uint64_t seed) {
  Binding bind(m.params, false);
  Rng rng(seed, 3);
  double recon = 0.0, kl = 0.0, count = 0.0;
  for (const auto& b : batches) {
    auto terms = sequence_loss(m.kind, bind, m.dims, b, 1.0, rng);
    recon += terms.recon;
    kl += terms.kl;
    count += static_cast<double>(b.batch() * b.steps());
  }
  return {recon / count, kl / count};
}

}  // namespace

TrainResult train_model(ModelKind kind, const ModelDims& dims_in, const data::Dataset& ds, const TrainConfig& cfg,
                        const BetaSchedule& schedule, const EpochCallback& on_epoch) {
  cfg.validate();
  schedule.validate();
  ModelDims dims = dims_in;
  if (dims.state != ds.state_dim || dims.action != ds.action_dim)
    throw FingerprintError("model dimensions do not match dataset " + ds.fingerprint());
  const std::size_t n = ds.trajectories.size();
  const std::size_t n_train = train_split(n, cfg.validation_fraction);
  if (n_train == 0 || n_train == n) throw ConfigError("dataset too small for a train/validation split");

  models::WorldModel model = models::WorldModel::create(kind, dims, mix_seed(cfg.seed, 0));
  model.env_fingerprint = ds.fingerprint();
  model.stats = data::compute_stats(std::span<const data::Trajectory>(ds.trajectories.data(), n_train));

  std::vector<std::size_t> val_idx(n - n_train);
  std::iota(val_idx.begin(), val_idx.end(), n_train);
  std::vector<SequenceBatch> val_batches;
  for (const auto& c : chunk(val_idx, std::max<std::size_t>(cfg.batch_size, 64)))
    val_batches.push_back(make_batch(ds.trajectories, c, model.stats));

  TrainResult result;
  result.best = model;
  auto guarded_validate = [&](int epoch) {
    try {
      return validate(model, val_batches, cfg.seed);
    } catch (const ContractError& e) {
      throw DivergenceError("validation diverged at epoch " + std::to_string(epoch) + ": " + e.what());
    }
  };
  auto init = guarded_validate(0);
  double best_score = init.recon + init.kl;

  std::vector<std::size_t> order(n_train);
  std::iota(order.begin(), order.end(), 0);
  const std::size_t batches_per_epoch = (n_train + cfg.batch_size - 1) / cfg.batch_size;
  const auto total_steps = static_cast<std::uint64_t>(batches_per_epoch) * static_cast<std::uint64_t>(cfg.epochs);
  nn::AdamState adam;
  adam.learning_rate = cfg.learning_rate;
  Rng shuffle_rng(cfg.seed, 1), noise_rng(cfg.seed, 2);
  std::uint64_t step = 0;
  double beta = 0.0;

  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    shuffle(order, shuffle_rng);
    double recon = 0.0, kl = 0.0, count = 0.0;
    for (const auto& idx : chunk(order, cfg.batch_size)) {
      const auto batch = make_batch(ds.trajectories, idx, model.stats);
      beta = beta_at(schedule, step, total_steps);
      const double norm = 1.0 / static_cast<double>(batch.batch() * batch.steps());
      try {
        Binding bind(model.params, true);
        auto terms = sequence_loss(kind, bind, dims, batch, beta, noise_rng);
        if (!std::isfinite(terms.loss.value()[0])) throw ContractError("loss is not finite");
        nn::backward(nn::scale(terms.loss, norm));
        recon += terms.recon;
        kl += terms.kl;
      } catch (const ContractError& e) {
        throw DivergenceError("training diverged at epoch " + std::to_string(epoch) + ", step " +
                              std::to_string(step) + ": " + e.what());
      }
      model.params.clip_grad_norm(cfg.grad_clip);
      nn::adam_step(model.params, adam);
      count += static_cast<double>(batch.batch() * batch.steps());
      ++step;
    }
    EpochMetrics m;
    m.epoch = epoch;
    m.train_recon = recon / count;
    m.train_kl = kl / count;
    m.beta = beta;
    const Means v = guarded_validate(epoch);
    m.val_recon = v.recon;
    m.val_kl = v.kl;
    result.log.push_back(m);
    if (on_epoch) on_epoch(m);
    if (v.recon + v.kl < best_score) {
      best_score = v.recon + v.kl;
      result.best = model;
      result.best_epoch = epoch;
    }
  }
  return result;
}

}  // namespace pwm::training
