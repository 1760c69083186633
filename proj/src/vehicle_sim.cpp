#include "vids/vehicle_sim.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "vids/errors.hpp"
#include "vids/preprocess.hpp"

namespace vids::sim {

void VehicleParams::validate() const {
  if (!(mass_kg > 0.0)) throw ConfigError("vehicle mass_kg must be > 0");
  if (!(dt_s > 0.0)) throw ConfigError("vehicle dt_s must be > 0");
  if (!(air_drag_coeff >= 0.0) || !(roll_coeff >= 0.0))
    throw ConfigError("vehicle resistance coefficients must be >= 0");
  if (!(max_traction_accel > 0.0)) throw ConfigError("vehicle max_traction_accel must be > 0");
  if (!(yaw_time_constant_s > 0.0)) throw ConfigError("vehicle yaw_time_constant_s must be > 0");
  if (!std::isfinite(grade_angle_rad)) throw ConfigError("vehicle grade_angle_rad must be finite");
}

VehicleParams VehicleParams::calibrated(double speed_mps, double air_force_n, double roll_force_n) {
  if (!(speed_mps > 0.0)) throw ConfigError("calibration speed must be > 0");
  VehicleParams p;
  p.air_drag_coeff = air_force_n / (speed_mps * speed_mps);
  p.roll_coeff = roll_force_n / speed_mps;
  return p;
}

ResistanceBreakdown travel_resistance(const VehicleParams& params, double speed_mps) {
  return {params.air_drag_coeff * speed_mps * speed_mps, params.roll_coeff * speed_mps,
          params.mass_kg * kGravity * std::sin(params.grade_angle_rad)};
}

double traction_accel(const VehicleParams& params, double unified_control) {
  return params.max_traction_accel * (2.0 * unified_control - 1.0);
}

void ControlCommand::validate() const {
  if (!(throttle >= 0.0 && throttle <= 1.0)) throw ConfigError("throttle outside [0, 1]");
  if (!(brake >= 0.0 && brake <= 1.0)) throw ConfigError("brake outside [0, 1]");
  if (!(steer >= -1.0 && steer <= 1.0)) throw ConfigError("steer outside [-1, 1]");
}

double ControlCommand::unified() const { return unify_control(throttle, brake); }

ControlCommand ControlCommand::from_unified(double unified_control, double steer) {
  const double u = std::clamp(unified_control, 0.0, 1.0);
  ControlCommand cmd;
  if (u >= 0.5) {
    cmd.throttle = 2.0 * u - 1.0;
  } else {
    cmd.brake = 1.0 - 2.0 * u;
  }
  cmd.steer = std::clamp(steer, -1.0, 1.0);
  return cmd;
}

VehicleState step(const VehicleParams& params, const VehicleState& state, const ControlCommand& cmd) {
  const double v = state.speed_mps;
  const double resist = travel_resistance(params, v).total();
  double accel = traction_accel(params, cmd.unified()) - resist / params.mass_kg;

  VehicleState next;
  const double raw_speed = v + accel * params.dt_s;
  if (raw_speed < 0.0) {
    next.speed_mps = 0.0;
    accel = -v / params.dt_s;
  } else {
    next.speed_mps = raw_speed;
  }
  next.accel_mps2 = accel;
  next.yaw_rate_rps =
      state.yaw_rate_rps +
      params.dt_s * (params.steer_gain * cmd.steer * v - state.yaw_rate_rps) / params.yaw_time_constant_s;
  next.time_s = state.time_s + params.dt_s;
  return next;
}

double equilibrium_control(const VehicleParams& params, double speed_mps) {
  const double resist = travel_resistance(params, speed_mps).total();
  return 0.5 * (1.0 + resist / (params.mass_kg * params.max_traction_accel));
}

Measurement measure(const VehicleState& state, const NoiseStd& noise_std, std::mt19937_64& rng) {
  std::normal_distribution<double> unit(0.0, 1.0);
  Measurement m;
  m.accel_mps2 = state.accel_mps2;
  m.speed_mps = state.speed_mps;
  m.yaw_rate_rps = state.yaw_rate_rps;
  m.time_s = state.time_s;
  // Always draw three variates so the stream position does not depend on which channels are noisy.
  const double n0 = unit(rng), n1 = unit(rng), n2 = unit(rng);
  m.accel_mps2 += noise_std[0] * n0;
  m.speed_mps += noise_std[1] * n1;
  m.yaw_rate_rps += noise_std[2] * n2;
  return m;
}

void Scenario::validate() const {
  if (!(duration_s > 0.0)) throw ConfigError("scenario duration_s must be > 0");
  if (keyframes.empty()) throw ConfigError("scenario has no keyframes");
  for (std::size_t i = 1; i < keyframes.size(); ++i) {
    if (!(keyframes[i].time_s > keyframes[i - 1].time_s))
      throw ConfigError("scenario keyframe times must be strictly increasing");
  }
  for (double s : noise_std) {
    if (!(s >= 0.0)) throw ConfigError("noise_std entries must be >= 0");
  }
  for (const auto& k : keyframes) k.cmd.validate();
}

ControlCommand Scenario::command_at(double time_s) const {
  if (time_s <= keyframes.front().time_s) return keyframes.front().cmd;
  if (time_s >= keyframes.back().time_s) return keyframes.back().cmd;
  auto it = std::upper_bound(keyframes.begin(), keyframes.end(), time_s,
                             [](double t, const Keyframe& k) { return t < k.time_s; });
  const Keyframe& hi = *it;
  const Keyframe& lo = *(it - 1);
  if (interpolation == Interpolation::hold) return lo.cmd;
  // Interpolating the unified signal keeps throttle and brake mutually exclusive.
  const double w = (time_s - lo.time_s) / (hi.time_s - lo.time_s);
  const double u = (1.0 - w) * lo.cmd.unified() + w * hi.cmd.unified();
  const double steer = (1.0 - w) * lo.cmd.steer + w * hi.cmd.steer;
  return ControlCommand::from_unified(u, steer);
}

namespace {

struct StyleProfile {
  double keyframe_interval_s;
  double speed_gain;
  double max_desired_accel;
  double control_jitter;
  double steer_amplitude;
  double steer_period_s;
};

StyleProfile profile_for(DrivingStyle style) {
  switch (style) {
    case DrivingStyle::cruise: return {4.0, 0.3, 1.0, 0.02, 0.1, 20.0};
    case DrivingStyle::stop_and_go: return {2.0, 0.6, 2.5, 0.04, 0.2, 12.0};
    case DrivingStyle::aggressive: return {1.0, 1.5, 100.0, 0.08, 0.5, 6.0};
  }
  return {4.0, 0.3, 1.0, 0.02, 0.1, 20.0};
}

// Piecewise-constant target speed with style-dependent segment lengths.
class TargetSpeed {
 public:
  TargetSpeed(DrivingStyle style, std::mt19937_64& rng) : style_(style), rng_(rng) { advance(); }

  double at(double t) {
    while (t >= segment_end_) advance();
    return target_;
  }

 private:
  double uniform(double lo, double hi) {
    return std::uniform_real_distribution<double>(lo, hi)(rng_);
  }

  void advance() {
    switch (style_) {
      case DrivingStyle::cruise:
        target_ = first_ ? 12.0 : std::clamp(target_ + uniform(-1.5, 1.5), 8.0, 16.0);
        segment_end_ += uniform(8.0, 12.0);
        break;
      case DrivingStyle::stop_and_go:
        moving_ = !moving_;
        target_ = moving_ ? uniform(8.0, 14.0) : 0.0;
        segment_end_ += moving_ ? uniform(6.0, 10.0) : uniform(3.0, 5.0);
        break;
      case DrivingStyle::aggressive:
        target_ = uniform(0.0, 22.0);
        segment_end_ += uniform(3.0, 5.0);
        break;
    }
    first_ = false;
  }

  DrivingStyle style_;
  std::mt19937_64& rng_;
  double target_ = 0.0;
  double segment_end_ = 0.0;
  bool moving_ = false;
  bool first_ = true;
};

}  // namespace

Scenario generate_scenario(std::uint64_t seed, double duration_s, DrivingStyle style) {
  if (!(duration_s > 0.0)) throw ConfigError("scenario duration_s must be > 0");
  Scenario scenario;
  scenario.duration_s = duration_s;
  scenario.seed = seed;
  scenario.style = style;

  const StyleProfile prof = profile_for(style);
  const VehicleParams nominal;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> jitter(0.0, prof.control_jitter);
  const double steer_phase = std::uniform_real_distribution<double>(0.0, 2.0 * std::numbers::pi)(rng);
  TargetSpeed target(style, rng);

  VehicleState x;
  const int ticks_per_key = static_cast<int>(std::lround(prof.keyframe_interval_s / nominal.dt_s));
  const int n_keys = static_cast<int>(std::ceil(duration_s / prof.keyframe_interval_s)) + 1;
  for (int k = 0; k < n_keys; ++k) {
    const double t = k * prof.keyframe_interval_s;
    const double v_ref = target.at(t);
    double u = 0.0;
    if (v_ref == 0.0 && x.speed_mps < 0.5) {
      u = 0.25;  // hold the brake while stopped
    } else {
      const double a_des = std::clamp(prof.speed_gain * (v_ref - x.speed_mps), -prof.max_desired_accel,
                                      prof.max_desired_accel);
      const double resist = travel_resistance(nominal, x.speed_mps).total() / nominal.mass_kg;
      u = 0.5 * (1.0 + (a_des + resist) / nominal.max_traction_accel) + jitter(rng);
    }
    const double steer = prof.steer_amplitude *
                         std::sin(2.0 * std::numbers::pi * t / prof.steer_period_s + steer_phase);
    const ControlCommand cmd = ControlCommand::from_unified(u, steer);
    scenario.keyframes.push_back({t, cmd});
    for (int i = 0; i < ticks_per_key; ++i) x = step(nominal, x, cmd);
  }
  return scenario;
}

std::vector<LogRecord> run_log(const VehicleParams& params, const Scenario& scenario) {
  params.validate();
  scenario.validate();
  const auto n = static_cast<long>(std::floor(scenario.duration_s / params.dt_s + 1e-9));
  if (n < 1) throw ConfigError("scenario shorter than one prediction horizon");

  std::mt19937_64 rng(scenario.seed);
  std::vector<LogRecord> log;
  log.reserve(static_cast<std::size_t>(n));
  VehicleState x;
  for (long k = 0; k < n; ++k) {
    LogRecord rec;
    rec.state = x;
    rec.cmd = scenario.command_at(x.time_s);
    rec.meas = measure(x, scenario.noise_std, rng);
    x = step(params, x, rec.cmd);
    rec.accel_label = x.accel_mps2;
    log.push_back(rec);
  }
  return log;
}

const char* to_string(DrivingStyle style) {
  switch (style) {
    case DrivingStyle::cruise: return "cruise";
    case DrivingStyle::stop_and_go: return "stop_and_go";
    case DrivingStyle::aggressive: return "aggressive";
  }
  return "cruise";
}

DrivingStyle parse_driving_style(const std::string& name) {
  if (name == "cruise") return DrivingStyle::cruise;
  if (name == "stop_and_go") return DrivingStyle::stop_and_go;
  if (name == "aggressive") return DrivingStyle::aggressive;
  throw ConfigError("unknown driving style '" + name + "'");
}

}  // namespace vids::sim
