#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "pwm/data/dataset.hpp"
#include "pwm/models/models.hpp"
#include "pwm/rng.hpp"

namespace pwm::training {

enum class BetaMode : std::uint8_t { Constant, LinearAnneal, Cyclic };

const char* to_string(BetaMode m);
BetaMode beta_mode_from_string(const std::string& s);

struct BetaSchedule {
  BetaMode mode = BetaMode::LinearAnneal;
  double beta_max = 2.0;
  // Fraction of the run (linear) or of each cycle (cyclic) spent ramping.
  double warmup = 0.3;
  int cycles = 4;

  void validate() const;
};

// constant: beta_max; linear: beta_max * min(1, step / (warmup * total));
// cyclic: the linear ramp restarted at the start of each of `cycles` equal periods.
double beta_at(const BetaSchedule& schedule, std::uint64_t step, std::uint64_t total_steps);

struct TrainConfig {
  int epochs = 50;
  std::size_t batch_size = 32;
  double learning_rate = 1e-3;
  double grad_clip = 5.0;
  double validation_fraction = 0.1;
  std::uint64_t seed = 0;

  void validate() const;
};

// Normalized, time-major minibatch: states[t] is [B, state_dim] for
// t = 0..T, actions[t] is [B, action_dim] for t = 0..T-1.
struct SequenceBatch {
  std::vector<nn::Tensor> states;
  std::vector<nn::Tensor> actions;

  std::size_t batch() const { return actions.empty() ? 0 : actions.front().rows(); }
  std::size_t steps() const { return actions.size(); }
};

// Stacks trajectories[indices] into a batch; all must share one length.
SequenceBatch make_batch(const std::vector<data::Trajectory>& trajectories, const std::vector<std::size_t>& indices,
                         const data::NormStats& stats);

struct LossTerms {
  nn::Var loss;         // summed over steps and batch rows
  double recon = 0.0;   // summed reconstruction term
  double kl = 0.0;      // summed KL term (RVAE only)
};

// Teacher-forced sequence losses. The RVAE draws one [B, latent] standard
// normal per step from `rng` for the reparameterized posterior sample.
LossTerms rvae_sequence_loss(models::Binding& bind, const models::ModelDims& dims, const SequenceBatch& batch,
                             double beta, Rng& rng);
LossTerms detrnn_sequence_loss(models::Binding& bind, const models::ModelDims& dims, const SequenceBatch& batch);
LossTerms probmlp_sequence_loss(models::Binding& bind, const models::ModelDims& dims, const SequenceBatch& batch);
LossTerms sequence_loss(models::ModelKind kind, models::Binding& bind, const models::ModelDims& dims,
                        const SequenceBatch& batch, double beta, Rng& rng);

// Per-epoch metrics; losses are means per step and per trajectory.
struct EpochMetrics {
  int epoch = 0;
  double train_recon = 0.0;
  double train_kl = 0.0;
  double beta = 0.0;
  double val_recon = 0.0;
  double val_kl = 0.0;
};

std::string metrics_json(const EpochMetrics& m);

struct TrainResult {
  models::WorldModel best;   // parameters at the best validation epoch (initialization if epochs == 0)
  int best_epoch = 0;        // 0 means the initialization
  std::vector<EpochMetrics> log;
};

using EpochCallback = std::function<void(const EpochMetrics&)>;

// Minibatch Adam over shuffled training trajectories; validation on the
// held-out tail of the dataset. Throws DivergenceError on a non-finite loss.
TrainResult train_model(models::ModelKind kind, const models::ModelDims& dims, const data::Dataset& dataset,
                        const TrainConfig& cfg, const BetaSchedule& schedule, const EpochCallback& on_epoch = {});

// Split used by train_model: [0, n_train) trains, [n_train, n) validates.
std::size_t train_split(std::size_t n, double validation_fraction);

}  // namespace pwm::training
