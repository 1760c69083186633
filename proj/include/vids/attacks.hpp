#pragma once

#include <limits>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace vids::attacks {

/// PWM-shaped activation window: on for `pwm_duty * pwm_period_s` at the
/// start of every period inside [start_s, end_s).
struct AttackSchedule {
  double start_s = 20.0;
  double pwm_period_s = 2.0;
  double pwm_duty = 0.5;
  double end_s = std::numeric_limits<double>::infinity();

  void validate() const;
};

bool is_active(const AttackSchedule& schedule, double t);

/// Indices (1-based, as written in configs) of blocked actuator and sensor
/// channels. Bounds are checked once, at construction.
class AttackTargets {
 public:
  AttackTargets() = default;
  AttackTargets(std::vector<int> actuator_indices, std::vector<int> sensor_indices, int actuator_dim,
                int sensor_dim);

  const std::vector<int>& actuator_indices() const { return actuator_; }
  const std::vector<int>& sensor_indices() const { return sensor_; }
  int actuator_dim() const { return p_; }
  int sensor_dim() const { return m_; }

  /// Parses "actuator:[1,2] sensor:[]".
  static AttackTargets parse(const std::string& text, int actuator_dim, int sensor_dim);
  std::string to_string() const;

 private:
  std::vector<int> actuator_;
  std::vector<int> sensor_;
  int p_ = 0;
  int m_ = 0;
};

/// DoS on the command vector: blocked components read 0 while active.
Eigen::VectorXd attack_actuator(const Eigen::VectorXd& cmd, const AttackTargets& targets, bool active);

/// DoS on the measurement vector: blocked components read 0 while active.
Eigen::VectorXd attack_sensor(const Eigen::VectorXd& y, const AttackTargets& targets, bool active);

}  // namespace vids::attacks
