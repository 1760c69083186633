#pragma once

#include <array>
#include <cstdint>
#include <random>
#include <vector>

#include <Eigen/Dense>

namespace vids::sim {

inline constexpr double kGravity = 9.81;

/// Lumped longitudinal parameters. Resistance coefficients fold the air
/// density, drag coefficient, frontal area, rolling coefficient and mass into
/// two numbers so that r_air = air_drag_coeff * v^2 and r_roll = roll_coeff * v.
struct VehicleParams {
  double mass_kg = 1500.0;
  double air_drag_coeff = 0.689;  // N s^2 / m^2, 68.9 N at 10 m/s
  double roll_coeff = 27.16;      // N s / m, 271.6 N at 10 m/s
  double grade_angle_rad = 0.0;
  double dt_s = 0.05;
  double max_traction_accel = 4.0;  // a_f at full throttle
  double steer_gain = 0.05;
  double yaw_time_constant_s = 0.5;

  void validate() const;

  /// Coefficients chosen so the air and rolling forces equal the given values
  /// at `speed_mps`.
  static VehicleParams calibrated(double speed_mps, double air_force_n, double roll_force_n);
};

struct ResistanceBreakdown {
  double air_n = 0.0;
  double roll_n = 0.0;
  double grade_n = 0.0;

  double total() const { return air_n + roll_n + grade_n; }
};

ResistanceBreakdown travel_resistance(const VehicleParams& params, double speed_mps);

/// Traction acceleration from the unified control signal; zero at u = 0.5.
double traction_accel(const VehicleParams& params, double unified_control);

struct VehicleState {
  double speed_mps = 0.0;
  double yaw_rate_rps = 0.0;
  double accel_mps2 = 0.0;
  double time_s = 0.0;
};

struct ControlCommand {
  double throttle = 0.0;
  double brake = 0.0;
  double steer = 0.0;

  void validate() const;
  double unified() const;
  /// Actuator vector [throttle, brake, steer] (p = 3).
  Eigen::Vector3d vector() const { return {throttle, brake, steer}; }
  static ControlCommand from_vector(const Eigen::Vector3d& v) { return {v[0], v[1], v[2]}; }
  /// Inverse of the unified mapping that never sets throttle and brake together.
  static ControlCommand from_unified(double unified_control, double steer = 0.0);
};

/// Sensor reading, ordered [accel, speed, yaw_rate] (m = 3).
struct Measurement {
  double accel_mps2 = 0.0;
  double speed_mps = 0.0;
  double yaw_rate_rps = 0.0;
  double time_s = 0.0;

  Eigen::Vector3d vector() const { return {accel_mps2, speed_mps, yaw_rate_rps}; }
  static Measurement from_vector(const Eigen::Vector3d& v, double time_s) {
    return {v[0], v[1], v[2], time_s};
  }
};

using NoiseStd = std::array<double, 3>;

/// Advance the vehicle one tick. Speed is clamped at zero; when the clamp
/// engages the reported acceleration is the realized one, (v' - v) / dt.
VehicleState step(const VehicleParams& params, const VehicleState& state, const ControlCommand& cmd);

/// Unified control holding `speed_mps` constant on the given grade.
double equilibrium_control(const VehicleParams& params, double speed_mps);

Measurement measure(const VehicleState& state, const NoiseStd& noise_std, std::mt19937_64& rng);

enum class DrivingStyle { cruise, stop_and_go, aggressive };
enum class Interpolation { linear, hold };

struct Keyframe {
  double time_s = 0.0;
  ControlCommand cmd;
};

struct Scenario {
  double duration_s = 60.0;
  std::uint64_t seed = 0;
  DrivingStyle style = DrivingStyle::cruise;
  Interpolation interpolation = Interpolation::linear;
  std::vector<Keyframe> keyframes;
  NoiseStd noise_std{0.1, 0.1, 0.01};

  void validate() const;
  ControlCommand command_at(double time_s) const;
};

/// Open-loop driver profile. Keyframes are produced by a speed-tracking driver
/// run against the default vehicle, so the profile stays at road speeds.
Scenario generate_scenario(std::uint64_t seed, double duration_s, DrivingStyle style);

struct LogRecord {
  VehicleState state;
  ControlCommand cmd;
  Measurement meas;
  /// Acceleration one tick (50 ms) after `state`/`cmd`.
  double accel_label = 0.0;
};

/// Attack-free rollout starting at rest, one record per tick. Measurement
/// noise is drawn from a generator seeded with `scenario.seed`.
std::vector<LogRecord> run_log(const VehicleParams& params, const Scenario& scenario);

const char* to_string(DrivingStyle style);
DrivingStyle parse_driving_style(const std::string& name);

}  // namespace vids::sim
