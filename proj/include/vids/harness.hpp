#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "vids/attacks.hpp"
#include "vids/detector.hpp"
#include "vids/estimators.hpp"
#include "vids/learner.hpp"
#include "vids/preprocess.hpp"
#include "vids/vehicle_sim.hpp"

namespace vids {

enum class EstimatorKind { kf, ukf_ml };
enum class EstimatorChoice { kf, ukf_ml, both };

const char* to_string(EstimatorKind kind);

// ---------------------------------------------------------------------------
// Scoring

struct StepLabel {
  double t = 0.0;
  bool truth = false;
  bool predicted = false;
};

struct ConfusionCounts {
  long tp = 0, fp = 0, tn = 0, fn = 0;

  long positives() const { return tp + fn; }
  long negatives() const { return tn + fp; }
};

ConfusionCounts count_labels(const std::vector<StepLabel>& labels);

/// Rates are normalized within the truth classes, so tp + fn = 1 and
/// tn + fp = 1. F1 uses per-step precision and recall and is 0 when undefined.
struct ConfusionMetrics {
  double tp_rate = 0.0, fp_rate = 0.0, tn_rate = 0.0, fn_rate = 0.0;
  double f1 = 0.0;
  double threshold = 0.0;
  ConfusionCounts counts;
};

/// Throws ConfigError when the stream lacks either truth class.
ConfusionMetrics score(const std::vector<StepLabel>& labels, double threshold = 0.0);

// ---------------------------------------------------------------------------
// Configuration

struct ScenarioSpec {
  sim::DrivingStyle style = sim::DrivingStyle::stop_and_go;
  sim::Interpolation interpolation = sim::Interpolation::linear;
  double duration_s = 60.0;
  sim::NoiseStd noise_std{0.1, 0.1, 0.01};
};

struct AttackSpec {
  bool enabled = true;
  attacks::AttackSchedule actuator_schedule;  // alpha
  attacks::AttackSchedule sensor_schedule;    // beta
  attacks::AttackTargets targets{{1, 2}, {}, 3, 3};
};

struct FilterSpec {
  EstimatorChoice estimator = EstimatorChoice::both;
  est::UtParams ut = est::UtParams::for_dimension(3);
  Eigen::Vector3d q_proc_diag{1e-3, 1e-3, 1e-3};
  std::optional<Eigen::Vector3d> r_meas_diag;  // default: noise_std^2 floored at 1e-6
  ml::OnlineAdaptConfig online;
  double kf_r_travel_n = 68.9 + 271.6 + 0.0;
  std::string model_file;  // empty: train from [train]
};

struct TrainSpec {
  ml::TrainConfig train;
  int scenarios = 6;
  double duration_s = 120.0;
  ml::SampleSource source = ml::SampleSource::truth;
};

struct SweepSpec {
  double t1_min = 10.0;
  double t1_max = 25.0;
  int count = 30;
  double scale = 1.0;
  std::vector<double> explicit_t1;

  /// Evenly spaced over [t1_min * scale, t1_max * scale], endpoints exact,
  /// unless an explicit list is given.
  std::vector<double> t1_list() const;
};

struct RunConfig {
  sim::VehicleParams vehicle;
  ScenarioSpec scenario;
  AttackSpec attack;
  FilterSpec filter;
  detect::DetectorConfig detector;
  SweepSpec sweep;
  TrainSpec train;
  std::uint64_t seed = 1;
  std::string output_dir = ".";

  void validate() const;
  /// Measurement noise covariance used by both filters.
  Eigen::Matrix3d r_meas() const;
};

/// Sectioned key = value text ([vehicle] [scenario] [attack] [filter]
/// [detector] [sweep] [train]). Unknown sections or keys are errors.
RunConfig parse_config(const std::string& text);
RunConfig load_config(const std::string& path);

// ---------------------------------------------------------------------------
// Experiments

struct StepRow {
  double t = 0.0;
  sim::ControlCommand cmd;      // driver intent, what the estimators are told
  sim::ControlCommand applied;  // after actuator DoS
  sim::VehicleState state;
  sim::Measurement meas;        // after sensor DoS
  bool attack_active = false;
};

struct EstimatorTrace {
  EstimatorKind kind = EstimatorKind::kf;
  /// Per step; step 0 has no residual (filter initialisation).
  std::vector<std::optional<Eigen::Vector3d>> residuals;
  std::vector<double> s1, s2;
  std::vector<int> alarm;
  /// Online adaptation per step (ukf_ml only): effective learning rate and the
  /// Euclidean norm of the parameter change it produced.
  std::vector<double> online_rate, online_step;
  long online_updates = 0;
  long online_skipped = 0;

  std::vector<StepLabel> labels(const std::vector<StepRow>& rows) const;
};

struct ExperimentResult {
  std::vector<StepRow> rows;
  std::vector<EstimatorTrace> traces;

  const EstimatorTrace& trace(EstimatorKind kind) const;
};

/// Train the dynamics network from attack-free logs described by cfg.train.
ml::TrainResult train_model(const RunConfig& cfg);

/// Load cfg.filter.model_file, or train when it is empty.
ml::MlpModel obtain_model(const RunConfig& cfg);

/// Simulate with attacks, run the configured estimators, feed residuals to a
/// detector and adapt the network online. `model` is required whenever the
/// UKF is selected.
ExperimentResult run_experiment(const RunConfig& cfg, const ml::MlpModel* model);

/// Replays logged residuals through a fresh detector at the given threshold.
std::vector<int> rescore_alarms(const EstimatorTrace& trace, detect::DetectorConfig detector);

struct SweepRow {
  EstimatorKind estimator = EstimatorKind::kf;
  double t1 = 0.0;
  double t2 = 0.0;
  ConfusionMetrics metrics;
};

struct SweepResult {
  std::vector<SweepRow> rows;
  std::vector<SweepRow> best;  // argmax-F1 per estimator, lowest t1 on ties
};

SweepResult sweep_thresholds(const ExperimentResult& result, const detect::DetectorConfig& base,
                             const std::vector<double>& t1_list);

// ---------------------------------------------------------------------------
// Output

void write_sim_csv(const std::vector<sim::LogRecord>& log, std::ostream& out);
void write_run_csv(const ExperimentResult& result, EstimatorKind kind, std::ostream& out);
void write_sweep_csv(const SweepResult& sweep, std::ostream& out);
nlohmann::json metrics_json(const ConfusionCounts& counts, double t1, double t2);
nlohmann::json run_metrics_json(const ExperimentResult& result, const RunConfig& cfg);
nlohmann::json report_json(const SweepResult& sweep, const RunConfig& cfg);

/// Writes through a temporary file and renames it into place.
void write_file_atomic(const std::string& path, const std::string& contents);

/// Shortest round-trip decimal representation.
std::string format_double(double v);

}  // namespace vids
