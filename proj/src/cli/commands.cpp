#include "pwm/cli/commands.hpp"

#include <cmath>
#include <fstream>

#include "pwm/assessment/evaluation.hpp"
#include "pwm/data/dataset.hpp"
#include "pwm/errors.hpp"
#include "pwm/models/checkpoint.hpp"

namespace pwm::cli {

namespace {

void ensure_parent(const fs::path& p) {
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
}

void write_text(const fs::path& p, const std::string& text) {
  ensure_parent(p);
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  if (!out) throw FormatError("cannot open " + p.string() + " for writing");
  out << text;
  if (!out) throw FormatError("write failed for " + p.string());
}

std::string jstr(const std::string& s) {
  std::string o = "\"";
  for (char c : s) {
    if (c == '"' || c == '\\') o += '\\';
    o += c;
  }
  return o + "\"";
}

models::WorldModel load_model(const RunConfig& cfg, const fs::path& path) {
  if (!fs::exists(path)) throw FormatError("missing checkpoint " + path.string());
  auto m = models::load_checkpoint(path);
  if (m.env_fingerprint != data::env_fingerprint(cfg.env))
    throw FingerprintError("checkpoint " + path.string() + " was trained for another environment");
  return m;
}

forecasting::Planner planner_template(const RunConfig& cfg, const models::WorldModel& plan_model) {
  if (plan_model.kind != models::ModelKind::DetRnn)
    throw ConfigError("the planning model must be a detrnn checkpoint");
  forecasting::Planner p;
  p.model = &plan_model;
  p.config = cfg.planner;
  p.reward.task = cfg.env.id;
  return p;
}

std::string hash_comment(const RunConfig& cfg) { return "# config_hash=" + cfg.hash() + "\n"; }

}  // namespace

void cmd_collect(const RunConfig& cfg, const fs::path& out) {
  auto ds = data::collect_random(cfg.env, cfg.noise, cfg.episodes, cfg.collect_seed(), cfg.validation_fraction);
  ds.config_hash = cfg.hash();
  ensure_parent(out);
  data::save_dataset(out, ds);
}

void cmd_train(const RunConfig& cfg, const fs::path& dataset, const std::string& kind_name, const fs::path& out) {
  const auto kind = models::model_kind_from_string(kind_name);
  if (!fs::exists(dataset)) throw FormatError("missing dataset " + dataset.string());
  const auto ds = data::load_dataset(dataset);
  data::require_fingerprint(ds, cfg.env);
  auto tc = cfg.train;
  tc.seed = cfg.train_seed(kind);
  const auto result = training::train_model(kind, cfg.dims, ds, tc, cfg.beta);
  ensure_parent(out);
  models::save_checkpoint(out, result.best,
                          "{\"config_hash\":" + jstr(cfg.hash()) + ",\"best_epoch\":" +
                              std::to_string(result.best_epoch) + ",\"dataset\":" + jstr(ds.fingerprint()) + "}");
  std::string log = "{\"config_hash\":" + jstr(cfg.hash()) + ",\"kind\":" + jstr(kind_name) +
                    ",\"best_epoch\":" + std::to_string(result.best_epoch) + "}\n";
  for (const auto& m : result.log) log += training::metrics_json(m) + "\n";
  write_text(fs::path(out.string() + ".log"), log);
}

void cmd_forecast(const RunConfig& cfg, const fs::path& model_path, const fs::path& planner_path,
                  const InitialSource& s0, bool real, const fs::path& out) {
  const auto plan_model = load_model(cfg, planner_path);
  const auto tmpl = planner_template(cfg, plan_model);
  auto inst = assessment::make_instance(cfg.env, cfg.noise, tmpl, cfg.evaluate_seed(), s0.instance);
  if (s0.state) {
    if (s0.state->size() != cfg.env.state_dim())
      throw DimensionError("initial state needs " + std::to_string(cfg.env.state_dim()) + " values");
    for (double v : *s0.state)
      if (!std::isfinite(v)) throw ConfigError("initial state must be finite");
    inst.ic.state = *s0.state;
    if (cfg.env.id == env::EnvId::Pusher) {
      inst.ic.target = {cfg.env.pusher.target[0], cfg.env.pusher.target[1]};
      inst.planner.reward.target = inst.ic.target;
    }
  }
  const forecasting::ForecastConfig fc{cfg.samples, static_cast<std::size_t>(cfg.env.horizon), inst.forecast_seed};
  forecasting::ForecastEnsemble ens;
  if (real) {
    ens = assessment::real_ensemble(cfg.env, cfg.noise, inst.ic, inst.planner,
                                    {cfg.samples, fc.horizon, inst.real_seed});
  } else {
    const auto model = load_model(cfg, model_path);
    ens = forecasting::forecast_ensemble(inst.ic.state, model, inst.planner, fc, cfg.env);
  }
  ens.provenance.config_hash = cfg.hash();
  ensure_parent(out);
  forecasting::save_ensemble(out, ens);
}

void cmd_evaluate(const RunConfig& cfg, const fs::path& planner_path, const std::vector<fs::path>& model_paths,
                  const fs::path& out_dir) {
  if (model_paths.empty()) throw ConfigError("evaluate needs at least one model checkpoint");
  const auto plan_model = load_model(cfg, planner_path);
  const auto tmpl = planner_template(cfg, plan_model);
  std::vector<models::WorldModel> loaded;
  loaded.reserve(model_paths.size());
  for (const auto& p : model_paths) loaded.push_back(load_model(cfg, p));
  std::vector<const models::WorldModel*> ptrs;
  for (const auto& m : loaded) ptrs.push_back(&m);

  assessment::EvaluationConfig ec;
  ec.instances = cfg.instances;
  ec.samples = cfg.samples;
  ec.horizon = static_cast<std::size_t>(cfg.env.horizon);
  ec.real_rollouts = cfg.real_rollouts;
  ec.seed = cfg.evaluate_seed();
  const auto res = assessment::evaluate(cfg.env, cfg.noise, ptrs, tmpl, ec);

  std::vector<std::string> names;
  for (std::size_t m = 0; m < loaded.size(); ++m) {
    std::string name = models::to_string(loaded[m].kind);
    for (std::size_t j = 0; j < m; ++j)
      if (loaded[j].kind == loaded[m].kind) name = model_paths[m].stem().string();
    names.push_back(name);
  }

  double base = 0.0;
  std::size_t n_records = 0;
  for (const auto& r : res.instances)
    for (int o : r.outcomes) base += o, ++n_records;
  base /= static_cast<double>(n_records);

  std::string brier_csv = hash_comment(cfg) + "model,kind,model_id,brier,max_calibration_gap,records,base_rate\n";
  std::string calib_csv = hash_comment(cfg);
  std::string summary = "{\"config_hash\":" + jstr(cfg.hash()) + ",\"env\":" + jstr(env::to_string(cfg.env.id)) +
                        ",\"instances\":" + std::to_string(cfg.instances) + ",\"samples\":" +
                        std::to_string(cfg.samples) + ",\"base_rate\":" + data::format_real(base) + ",\"models\":[";
  for (std::size_t m = 0; m < loaded.size(); ++m) {
    const auto curve = assessment::calibration_curve(res.records[m], cfg.bins);
    const double b = assessment::brier(res.records[m]);
    const double gap = assessment::max_calibration_gap(curve);
    const auto id = forecasting::model_id(loaded[m]);
    brier_csv += names[m] + "," + models::to_string(loaded[m].kind) + "," + id + "," + data::format_real(b) + "," +
                 data::format_real(gap) + "," + std::to_string(res.records[m].size()) + "," + data::format_real(base) +
                 "\n";
    auto table = assessment::calibration_csv(curve, names[m]);
    if (m > 0) table.erase(0, table.find('\n') + 1);
    calib_csv += table;
    summary += std::string(m ? "," : "") + "{\"name\":" + jstr(names[m]) + ",\"kind\":" +
               jstr(models::to_string(loaded[m].kind)) + ",\"model_id\":" + jstr(id) +
               ",\"brier\":" + data::format_real(b) + ",\"max_calibration_gap\":" + data::format_real(gap) + "}";
  }
  summary += "]}\n";

  std::string records = hash_comment(cfg) + "instance,model,forecast,outcome\n";
  for (const auto& r : res.instances)
    for (std::size_t m = 0; m < loaded.size(); ++m)
      for (int o : r.outcomes)
        records += std::to_string(r.index) + "," + names[m] + "," + data::format_real(r.forecasts[m]) + "," +
                   std::to_string(o) + "\n";

  write_text(out_dir / "brier.csv", brier_csv);
  write_text(out_dir / "calibration.csv", calib_csv);
  write_text(out_dir / "records.csv", records);
  write_text(out_dir / "summary.json", summary);
}

void cmd_report(const RunConfig& cfg, const std::vector<fs::path>& ensembles, const std::vector<std::string>& queries,
                const fs::path& out_dir) {
  if (ensembles.empty()) throw ConfigError("report needs at least one ensemble");
  std::vector<assessment::Query> parsed;
  for (const auto& q : queries) parsed.push_back(assessment::parse_query(q));
  for (const auto& q : parsed)
    if (!assessment::compatible(q.criterion, cfg.env.id))
      throw ConfigError(std::string("query criterion ") + assessment::to_string(q.criterion) + " does not apply to " +
                        env::to_string(cfg.env.id));

  assessment::OutcomeOptions opt;
  opt.position_only = cfg.position_only;
  std::string hist = "{\"config_hash\":" + jstr(cfg.hash()) + ",\"histograms\":[";
  std::string jsonl, text;
  bool first = true;
  for (const auto& path : ensembles) {
    if (!fs::exists(path)) throw FormatError("missing ensemble " + path.string());
    const auto ens = forecasting::load_ensemble(path);
    if (ens.env_id != env::to_string(cfg.env.id))
      throw FingerprintError("ensemble " + path.string() + " belongs to environment " + ens.env_id);
    const std::string series = path.stem().string();
    for (auto c : {assessment::Criterion::TimeToTarget, assessment::Criterion::StuckTime,
                   assessment::Criterion::FirstContactTime, assessment::Criterion::MaxBallSpeed,
                   assessment::Criterion::UprightDuration}) {
      if (!assessment::compatible(c, cfg.env.id)) continue;
      const auto dist = assessment::abstract_outcome(ens, c, cfg.env, opt);
      hist += std::string(first ? "" : ",") + assessment::histogram_json(assessment::histogram(dist), c, series);
      first = false;
      for (const auto& q : parsed) {
        if (q.criterion != c) continue;
        const auto s = assessment::render_statement(dist, q);
        auto j = assessment::statement_json(s);
        j.pop_back();
        jsonl += j + ",\"series\":" + jstr(series) + ",\"config_hash\":" + jstr(cfg.hash()) + "}\n";
        text += series + ": " + s.text + "\n";
      }
    }
  }
  hist += "]}\n";
  write_text(out_dir / "histograms.json", hist);
  write_text(out_dir / "statements.jsonl", jsonl);
  write_text(out_dir / "statements.txt", hash_comment(cfg) + text);
}

int exit_code_for(const std::exception& e) {
  if (dynamic_cast<const ConfigError*>(&e)) return 2;
  if (dynamic_cast<const FormatError*>(&e) || dynamic_cast<const FingerprintError*>(&e) ||
      dynamic_cast<const DimensionError*>(&e))
    return 3;
  if (dynamic_cast<const DivergenceError*>(&e)) return 4;
  return 1;
}

}  // namespace pwm::cli
