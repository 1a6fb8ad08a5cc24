#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "pwm/cli/commands.hpp"
#include "pwm/errors.hpp"

namespace {

pwm::data::Vector parse_state(const std::string& text) {
  pwm::data::Vector v;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    std::size_t used = 0;
    try {
      v.push_back(std::stod(item, &used));
    } catch (const std::logic_error&) {
      used = 0;
    }
    if (used == 0) throw pwm::ConfigError("--s0: cannot parse '" + item + "'");
  }
  return v;
}

}  // namespace

int main(int argc, char** argv) {
  using namespace pwm::cli;
  CLI::App app{"Probabilistic world models: data collection, training, forecasting and competency assessment"};
  app.require_subcommand(1);

  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string out;
  auto common = [&](CLI::App* sub, const std::string& out_help) {
    sub->add_option("--config", config_path, "run configuration file")->check(CLI::ExistingFile);
    sub->add_option("--seed", seed, "override run.seed");
    sub->add_option("--out", out, out_help);
  };

  auto* collect = app.add_subcommand("collect", "collect a random-action dataset");
  common(collect, "dataset file (default <run.out>/dataset.txt)");

  std::string dataset, kind;
  auto* train = app.add_subcommand("train", "train one world model");
  common(train, "checkpoint file (default <run.out>/<model>.ckpt)");
  train->add_option("--data", dataset, "dataset file")->required();
  train->add_option("--model", kind, "rvae | detrnn | probmlp")->required();

  std::string model, planner, s0_text;
  std::size_t instance = 0;
  bool real = false;
  auto* forecast = app.add_subcommand("forecast", "forecast ensemble from one observation");
  common(forecast, "ensemble file (default <run.out>/ensemble.txt)");
  forecast->add_option("--model", model, "world model checkpoint");
  forecast->add_option("--planner", planner, "planning model (detrnn) checkpoint")->required();
  forecast->add_option("--s0", s0_text, "initial state, comma separated");
  forecast->add_option("--instance", instance, "evaluation instance supplying the initial condition");
  forecast->add_flag("--real", real, "roll out the true environment instead of a model");

  std::vector<std::string> models_list;
  auto* evaluate = app.add_subcommand("evaluate", "Brier and calibration over evaluation instances");
  common(evaluate, "output directory (default <run.out>/evaluation)");
  evaluate->add_option("--planner", planner, "planning model (detrnn) checkpoint")->required();
  evaluate->add_option("--model", models_list, "world model checkpoints")->required();

  std::vector<std::string> ensembles, queries;
  auto* report = app.add_subcommand("report", "outcome histograms and competency statements");
  common(report, "output directory (default <run.out>/report)");
  report->add_option("--ensemble", ensembles, "ensemble files")->required();
  report->add_option("--query", queries, "queries such as time_to_target<=15");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    RunConfig cfg = config_path.empty() ? parse_config("") : load_config(config_path);
    if (seed) cfg.seed = *seed;
    auto target = [&](const fs::path& fallback) { return out.empty() ? cfg.out / fallback : fs::path(out); };

    if (*collect) {
      cmd_collect(cfg, target("dataset.txt"));
    } else if (*train) {
      cmd_train(cfg, dataset, kind, target(kind + ".ckpt"));
    } else if (*forecast) {
      if (!real && model.empty()) throw pwm::ConfigError("forecast needs --model unless --real is given");
      InitialSource src;
      src.instance = instance;
      if (!s0_text.empty()) src.state = parse_state(s0_text);
      cmd_forecast(cfg, model, planner, src, real, target("ensemble.txt"));
    } else if (*evaluate) {
      cmd_evaluate(cfg, planner, {models_list.begin(), models_list.end()}, target("evaluation"));
    } else if (*report) {
      cmd_report(cfg, {ensembles.begin(), ensembles.end()}, queries, target("report"));
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_code_for(e);
  }
  return 0;
}
