#pragma once

#include <deque>

#include <Eigen/Dense>

namespace vids::detect {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

enum class Alarm : int { none = 0, attack = 1 };

struct DetectorConfig {
  int window_n = 40;
  Vec w_r1 = Eigen::Vector3d(1.0, 0.01, 0.0);
  Mat w_r2 = Eigen::Vector3d(1.0, 0.01, 0.0).asDiagonal();
  double t1 = 13.33;
  double gamma = 0.04;

  double t2() const { return gamma * t1; }
  int dim() const { return static_cast<int>(w_r1.size()); }
  /// Throws ConfigError on N < 2, non-positive thresholds, or a W_r2 that is
  /// not symmetric PSD of matching size.
  void validate() const;
};

/// Weighted window sum: sum_i w_r1' r_i.
double test1(const std::deque<Vec>& window, const Vec& w_r1);

/// Weighted dispersion about the window mean: sum_i (r_i - mean)' W (r_i - mean).
/// Zero for windows with fewer than two residuals.
double test2(const std::deque<Vec>& window, const Mat& w_r2);

/// Attack iff |s1| > t1 and s2 > t2.
Alarm alarm(double s1, double s2, const DetectorConfig& cfg);

/// Sliding-window two-statistic detector. The alarm stays off until the window
/// holds N residuals; after that it is recomputed from scratch every push.
class Detector {
 public:
  explicit Detector(DetectorConfig cfg);

  /// Returns false (and leaves the state untouched) for a non-finite or
  /// wrongly sized residual.
  bool push(const Vec& residual);

  const std::deque<Vec>& window() const { return window_; }
  double s1() const { return s1_; }
  double s2() const { return s2_; }
  Alarm flag() const { return flag_; }
  bool window_full() const { return static_cast<int>(window_.size()) >= cfg_.window_n; }
  long rejected() const { return rejected_; }
  const DetectorConfig& config() const { return cfg_; }

 private:
  DetectorConfig cfg_;
  std::deque<Vec> window_;
  double s1_ = 0.0;
  double s2_ = 0.0;
  Alarm flag_ = Alarm::none;
  long rejected_ = 0;
};

}  // namespace vids::detect
