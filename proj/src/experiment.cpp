#include <algorithm>
#include <cmath>
#include <random>

#include "vids/errors.hpp"
#include "vids/harness.hpp"

namespace vids {

namespace {

// Keeps measurement noise independent of the scenario generator stream.
constexpr std::uint64_t kNoiseStreamSalt = 0x9E3779B97F4A7C15ULL;

est::Vec filter_control(const sim::ControlCommand& cmd) {
  est::Vec u(2);
  u << cmd.unified(), cmd.steer;
  return u;
}

est::GaussianBelief initial_belief(const sim::Measurement& y, const RunConfig& cfg) {
  const Eigen::Matrix3d r = cfg.r_meas();
  est::GaussianBelief b;
  b.mean = Eigen::Vector3d(y.speed_mps, y.yaw_rate_rps, y.accel_mps2);
  b.cov = Eigen::Vector3d(r(1, 1), r(2, 2), r(0, 0)).asDiagonal();
  b.cov += est::Mat(cfg.filter.q_proc_diag.asDiagonal());
  return b;
}

struct Lane {
  EstimatorKind kind;
  std::unique_ptr<est::Estimator> filter;
  std::unique_ptr<ml::OnlineLearner> learner;
  detect::Detector detector;
  EstimatorTrace trace;
};

}  // namespace

const char* to_string(EstimatorKind kind) { return kind == EstimatorKind::kf ? "kf" : "ukf_ml"; }

std::vector<StepLabel> EstimatorTrace::labels(const std::vector<StepRow>& rows) const {
  std::vector<StepLabel> out;
  out.reserve(rows.size());
  for (std::size_t k = 0; k < rows.size(); ++k) {
    if (!residuals[k]) continue;
    out.push_back({rows[k].t, rows[k].attack_active, alarm[k] != 0});
  }
  return out;
}

const EstimatorTrace& ExperimentResult::trace(EstimatorKind kind) const {
  for (const auto& t : traces) {
    if (t.kind == kind) return t;
  }
  throw ConfigError(std::string("experiment did not run estimator ") + to_string(kind));
}

ml::TrainResult train_model(const RunConfig& cfg) {
  static constexpr sim::DrivingStyle kStyles[] = {sim::DrivingStyle::cruise, sim::DrivingStyle::stop_and_go,
                                                  sim::DrivingStyle::aggressive};
  std::vector<ml::TrainingSample> samples;
  for (int i = 0; i < cfg.train.scenarios; ++i) {
    const std::uint64_t seed = cfg.train.train.seed * 1000003ULL + 17ULL * static_cast<std::uint64_t>(i) + 1;
    auto scenario = sim::generate_scenario(seed, cfg.train.duration_s, kStyles[i % 3]);
    scenario.noise_std = cfg.scenario.noise_std;
    scenario.interpolation = cfg.scenario.interpolation;
    const auto log = sim::run_log(cfg.vehicle, scenario);
    const auto part = ml::build_samples(log, cfg.train.source);
    samples.insert(samples.end(), part.begin(), part.end());
  }
  return ml::train_offline(samples, cfg.train.train);
}

ml::MlpModel obtain_model(const RunConfig& cfg) {
  if (!cfg.filter.model_file.empty()) return ml::load_model(cfg.filter.model_file);
  return train_model(cfg).model;
}

ExperimentResult run_experiment(const RunConfig& cfg, const ml::MlpModel* model) {
  cfg.validate();
  const bool use_kf = cfg.filter.estimator != EstimatorChoice::ukf_ml;
  const bool use_ukf = cfg.filter.estimator != EstimatorChoice::kf;
  if (use_ukf && model == nullptr) throw ConfigError("the UKF estimator needs a trained model");

  auto scenario = sim::generate_scenario(cfg.seed, cfg.scenario.duration_s, cfg.scenario.style);
  scenario.interpolation = cfg.scenario.interpolation;
  scenario.noise_std = cfg.scenario.noise_std;
  std::mt19937_64 noise_rng(cfg.seed ^ kNoiseStreamSalt);

  const est::NoiseModel noise{est::Mat(cfg.filter.q_proc_diag.asDiagonal()), cfg.r_meas()};
  const auto& atk = cfg.attack;
  const bool actuator_attack = atk.enabled && !atk.targets.actuator_indices().empty();
  const bool sensor_attack = atk.enabled && !atk.targets.sensor_indices().empty();

  const auto n_steps = static_cast<std::size_t>(std::floor(cfg.scenario.duration_s / cfg.vehicle.dt_s + 1e-9));
  ExperimentResult result;
  result.rows.reserve(n_steps);

  std::vector<Lane> lanes;
  if (use_kf) lanes.push_back({EstimatorKind::kf, nullptr, nullptr, detect::Detector(cfg.detector), {}});
  if (use_ukf) lanes.push_back({EstimatorKind::ukf_ml, nullptr, nullptr, detect::Detector(cfg.detector), {}});
  for (auto& lane : lanes) {
    lane.trace.kind = lane.kind;
    lane.trace.residuals.reserve(n_steps);
  }

  sim::VehicleState x;
  sim::ControlCommand prev_cmd;
  for (std::size_t k = 0; k < n_steps; ++k) {
    StepRow row;
    row.t = static_cast<double>(k) * cfg.vehicle.dt_s;
    row.cmd = scenario.command_at(row.t);
    row.state = x;

    const bool act_on = actuator_attack && attacks::is_active(atk.actuator_schedule, row.t);
    const bool sen_on = sensor_attack && attacks::is_active(atk.sensor_schedule, row.t);
    row.attack_active = act_on || sen_on;

    const sim::Measurement clean = sim::measure(x, scenario.noise_std, noise_rng);
    row.meas = sim::Measurement::from_vector(attacks::attack_sensor(clean.vector(), atk.targets, sen_on),
                                             row.t);
    const est::Vec y = row.meas.vector();

    for (auto& lane : lanes) {
      if (k == 0) {
        const auto belief = initial_belief(row.meas, cfg);
        if (lane.kind == EstimatorKind::kf) {
          lane.filter = std::make_unique<est::KalmanFilter>(
              est::longitudinal_kf_model(cfg.vehicle.mass_kg, cfg.vehicle.dt_s, cfg.vehicle.max_traction_accel,
                                         cfg.filter.kf_r_travel_n),
              noise, belief);
        } else {
          lane.learner = std::make_unique<ml::OnlineLearner>(*model, cfg.filter.online);
          lane.filter = std::make_unique<est::UnscentedKalmanFilter>(
              ml::as_process_model(lane.learner->model(), cfg.vehicle), cfg.filter.ut, noise, belief);
        }
        lane.trace.residuals.emplace_back();
        lane.trace.s1.push_back(0.0);
        lane.trace.s2.push_back(0.0);
        lane.trace.alarm.push_back(0);
        if (lane.learner) {
          lane.trace.online_rate.push_back(0.0);
          lane.trace.online_step.push_back(0.0);
        }
        continue;
      }

      const est::Vec u = filter_control(prev_cmd);
      const est::Vec prior = lane.filter->belief().mean;
      est::UpdateResult upd;
      try {
        upd = lane.filter->step(u, y);
      } catch (const std::exception& e) {
        throw RuntimeError(std::string(to_string(lane.kind)) + " failed at step " + std::to_string(k) + ": " +
                           e.what());
      }
      if (lane.learner) {
        ml::TrainingSample sample;
        sample.input << u[0], u[1], prior[0], prior[1], prior[2];
        sample.target = row.meas.accel_mps2;
        const Eigen::VectorXd before = lane.learner->model()->flatten();
        lane.trace.online_rate.push_back(lane.learner->update(sample, upd.residual));
        lane.trace.online_step.push_back((lane.learner->model()->flatten() - before).norm());
      }
      lane.detector.push(upd.residual);
      lane.trace.residuals.emplace_back(Eigen::Vector3d(upd.residual));
      lane.trace.s1.push_back(lane.detector.s1());
      lane.trace.s2.push_back(lane.detector.s2());
      lane.trace.alarm.push_back(static_cast<int>(lane.detector.flag()));
    }

    row.applied = act_on ? sim::ControlCommand::from_vector(
                               attacks::attack_actuator(row.cmd.vector(), atk.targets, true))
                         : row.cmd;
    x = sim::step(cfg.vehicle, x, row.applied);
    prev_cmd = row.cmd;
    result.rows.push_back(row);
  }

  for (auto& lane : lanes) {
    if (lane.learner) {
      lane.trace.online_updates = lane.learner->updates();
      lane.trace.online_skipped = lane.learner->skipped();
    }
    result.traces.push_back(std::move(lane.trace));
  }
  return result;
}

std::vector<int> rescore_alarms(const EstimatorTrace& trace, detect::DetectorConfig detector) {
  detect::Detector d(std::move(detector));
  std::vector<int> alarms;
  alarms.reserve(trace.residuals.size());
  for (const auto& r : trace.residuals) {
    if (!r) {
      alarms.push_back(0);
      continue;
    }
    d.push(*r);
    alarms.push_back(static_cast<int>(d.flag()));
  }
  return alarms;
}

SweepResult sweep_thresholds(const ExperimentResult& result, const detect::DetectorConfig& base,
                             const std::vector<double>& t1_list) {
  if (t1_list.empty()) throw ConfigError("sweep threshold list is empty");
  SweepResult out;
  for (const auto& trace : result.traces) {
    std::optional<SweepRow> best;
    for (double t1 : t1_list) {
      detect::DetectorConfig cfg = base;
      cfg.t1 = t1;
      EstimatorTrace rescored = trace;
      rescored.alarm = rescore_alarms(trace, cfg);
      SweepRow row;
      row.estimator = trace.kind;
      row.t1 = t1;
      row.t2 = cfg.t2();
      row.metrics = score(rescored.labels(result.rows), t1);
      if (!best || row.metrics.f1 > best->metrics.f1) best = row;
      out.rows.push_back(row);
    }
    out.best.push_back(*best);
  }
  return out;
}

}  // namespace vids
