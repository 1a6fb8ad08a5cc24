#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "pwm/cli/config.hpp"
#include "pwm/data/trajectory.hpp"

namespace pwm::cli {

namespace fs = std::filesystem;

// Random-action dataset for cfg.env / cfg.noise.
void cmd_collect(const RunConfig& cfg, const fs::path& out);

// Trains `kind` on the dataset; writes the best-validation checkpoint to
// `out` and its metric log to `out` + ".log".
void cmd_train(const RunConfig& cfg, const fs::path& dataset, const std::string& kind, const fs::path& out);

// Where the forecast starts: an explicit raw state, or evaluation instance
// `instance` (initial condition, target and seeds exactly as cmd_evaluate).
struct InitialSource {
  std::optional<data::Vector> state;
  std::size_t instance = 0;
};

// Forecast ensemble of cfg.samples trajectories from one observation. With
// `real` the ensemble holds that many rollouts of the true environment.
void cmd_forecast(const RunConfig& cfg, const fs::path& model, const fs::path& planner, const InitialSource& s0,
                  bool real, const fs::path& out);

// Paired real-vs-forecast evaluation over cfg.instances initial conditions.
// Writes brier.csv, calibration.csv, records.csv and summary.json into `out_dir`.
void cmd_evaluate(const RunConfig& cfg, const fs::path& planner, const std::vector<fs::path>& models,
                  const fs::path& out_dir);

// Outcome histograms and competency statements for each ensemble. Writes
// histograms.json, statements.jsonl and statements.txt into `out_dir`.
void cmd_report(const RunConfig& cfg, const std::vector<fs::path>& ensembles, const std::vector<std::string>& queries,
                const fs::path& out_dir);

// Process exit code for an exception escaping a command.
int exit_code_for(const std::exception& e);

}  // namespace pwm::cli
