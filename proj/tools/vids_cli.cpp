// vids: simulate, train, run, sweep and report for the residual-based
// intrusion-detection pipeline.

#include <algorithm>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "vids/errors.hpp"
#include "vids/harness.hpp"

namespace {

namespace fs = std::filesystem;

struct CommonOptions {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string out_dir = "vids_out";
};

vids::RunConfig resolve_config(const CommonOptions& opts) {
  vids::RunConfig cfg = opts.config_path.empty() ? vids::RunConfig{} : vids::load_config(opts.config_path);
  if (opts.seed) cfg.seed = *opts.seed;
  cfg.output_dir = opts.out_dir;
  cfg.validate();
  return cfg;
}

std::string path_in(const vids::RunConfig& cfg, const std::string& name) {
  return (fs::path(cfg.output_dir) / name).string();
}

template <class Writer>
void emit(const vids::RunConfig& cfg, const std::string& name, Writer&& write) {
  std::ostringstream os;
  write(os);
  vids::write_file_atomic(path_in(cfg, name), os.str());
  std::cout << "wrote " << path_in(cfg, name) << '\n';
}

std::optional<vids::ml::MlpModel> model_if_needed(const vids::RunConfig& cfg) {
  if (cfg.filter.estimator == vids::EstimatorChoice::kf) return std::nullopt;
  return vids::obtain_model(cfg);
}

vids::ExperimentResult experiment(const vids::RunConfig& cfg) {
  const auto model = model_if_needed(cfg);
  return vids::run_experiment(cfg, model ? &*model : nullptr);
}

void cmd_simulate(const vids::RunConfig& cfg) {
  auto scenario = vids::sim::generate_scenario(cfg.seed, cfg.scenario.duration_s, cfg.scenario.style);
  scenario.noise_std = cfg.scenario.noise_std;
  scenario.interpolation = cfg.scenario.interpolation;
  const auto log = vids::sim::run_log(cfg.vehicle, scenario);
  emit(cfg, "sim_log.csv", [&](std::ostream& os) { vids::write_sim_csv(log, os); });
}

void cmd_train(const vids::RunConfig& cfg) {
  const auto result = vids::train_model(cfg);
  emit(cfg, "model.txt", [&](std::ostream& os) { vids::ml::save_model(result.model, os); });
  emit(cfg, "loss_curve.csv", [&](std::ostream& os) { vids::ml::write_loss_curve(result.curve, os); });
  const auto& last = result.curve.back();
  std::cout << "train=" << result.n_train << " val=" << result.n_val << " outliers=" << result.n_outliers
            << " final train_mse=" << last.train_mse << " val_mse=" << last.val_mse << '\n';
}

void cmd_run(const vids::RunConfig& cfg) {
  const auto result = experiment(cfg);
  for (const auto& trace : result.traces) {
    emit(cfg, std::string("run_") + vids::to_string(trace.kind) + ".csv",
         [&](std::ostream& os) { vids::write_run_csv(result, trace.kind, os); });
  }
  emit(cfg, "metrics.json",
       [&](std::ostream& os) { os << vids::run_metrics_json(result, cfg).dump(2) << '\n'; });
}

vids::SweepResult sweep(const vids::RunConfig& cfg) {
  const auto result = experiment(cfg);
  return vids::sweep_thresholds(result, cfg.detector, cfg.sweep.t1_list());
}

void print_best(const vids::SweepResult& s) {
  for (const auto& b : s.best) {
    std::cout << vids::to_string(b.estimator) << ": best t1=" << b.t1 << " f1=" << b.metrics.f1
              << " tp=" << b.metrics.tp_rate << " fp=" << b.metrics.fp_rate << '\n';
  }
}

void cmd_sweep(const vids::RunConfig& cfg) {
  const auto s = sweep(cfg);
  emit(cfg, "sweep.csv", [&](std::ostream& os) { vids::write_sweep_csv(s, os); });
  print_best(s);
}

void cmd_report(const vids::RunConfig& cfg) {
  const auto s = sweep(cfg);
  emit(cfg, "report.json", [&](std::ostream& os) { os << vids::report_json(s, cfg).dump(2) << '\n'; });
  // Wide, plot-ready F1 curve: one row per threshold, one column per estimator.
  emit(cfg, "f1_curve.csv", [&](std::ostream& os) {
    std::map<double, std::map<std::string, double>> table;
    std::vector<std::string> names;
    for (const auto& r : s.rows) {
      const std::string name = vids::to_string(r.estimator);
      if (std::find(names.begin(), names.end(), name) == names.end()) names.push_back(name);
      table[r.t1][name] = r.metrics.f1;
    }
    os << "t1";
    for (const auto& n : names) os << ',' << n << "_f1";
    os << '\n';
    for (const auto& [t1, cols] : table) {
      os << vids::format_double(t1);
      for (const auto& n : names) os << ',' << vids::format_double(cols.at(n));
      os << '\n';
    }
  });
  print_best(s);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Vehicle DoS intrusion detection: simulator, UKF+MLP and KF residual detectors"};
  app.require_subcommand(1);

  CommonOptions opts;
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", opts.config_path, "Run configuration file")->check(CLI::ExistingFile);
    sub->add_option("--seed", opts.seed, "Override the scenario seed");
    sub->add_option("--out", opts.out_dir, "Output directory")->capture_default_str();
    return sub;
  };
  auto* simulate = add_common(app.add_subcommand("simulate", "Write an attack-free simulator log"));
  auto* train = add_common(app.add_subcommand("train", "Train the dynamics network offline"));
  auto* run = add_common(app.add_subcommand("run", "Run one experiment and write per-step CSV + metrics"));
  auto* sweep_cmd = add_common(app.add_subcommand("sweep", "Sweep detector thresholds for each estimator"));
  auto* report = add_common(app.add_subcommand("report", "Best-threshold metrics JSON and F1 curve CSV"));

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << e.what() << "\n\n" << app.help();
    return 1;
  }

  try {
    const vids::RunConfig cfg = resolve_config(opts);
    if (simulate->parsed()) cmd_simulate(cfg);
    else if (train->parsed()) cmd_train(cfg);
    else if (run->parsed()) cmd_run(cfg);
    else if (sweep_cmd->parsed()) cmd_sweep(cfg);
    else if (report->parsed()) cmd_report(cfg);
  } catch (const vids::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
