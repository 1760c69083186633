#pragma once

#include <memory>

#include <Eigen/Dense>

namespace vids::est {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

struct GaussianBelief {
  Vec mean;
  Mat cov;

  int dim() const { return static_cast<int>(mean.size()); }
  /// Throws ConfigError unless cov is square, symmetric and PSD within 1e-9.
  void validate() const;
};

/// Unscented-transform tuning. lambda = phi^2 (n + kappa) - n.
struct UtParams {
  double phi = 1.0;
  double kappa = 0.0;  // 3 - n for the 3-state vehicle filter
  double beta_prior = 2.0;

  double lambda(int n) const { return phi * phi * (n + kappa) - n; }
  void validate(int n) const;
  static UtParams for_dimension(int n, double phi = 1.0) { return {phi, 3.0 - n, 2.0}; }
};

struct SigmaSet {
  Mat points;  // n x (2n + 1), column 0 is the mean
  Vec w_mean;
  Vec w_cov;

  int size() const { return static_cast<int>(points.cols()); }
};

/// x' = predict_state(x, u), y = measure(x).
class ProcessModel {
 public:
  virtual ~ProcessModel() = default;
  virtual int state_dim() const = 0;
  virtual int control_dim() const = 0;
  virtual int meas_dim() const = 0;
  virtual Vec predict_state(const Vec& x, const Vec& u) const = 0;
  virtual Vec measure(const Vec& x) const = 0;
};

/// x' = A x + B u + c, y = C x.
class LinearModel : public ProcessModel {
 public:
  LinearModel(Mat a, Mat b, Vec c, Mat h);

  int state_dim() const override { return static_cast<int>(a_.rows()); }
  int control_dim() const override { return static_cast<int>(b_.cols()); }
  int meas_dim() const override { return static_cast<int>(h_.rows()); }
  Vec predict_state(const Vec& x, const Vec& u) const override { return a_ * x + b_ * u + c_; }
  Vec measure(const Vec& x) const override { return h_ * x; }

  const Mat& a() const { return a_; }
  const Mat& b() const { return b_; }
  const Vec& offset() const { return c_; }
  const Mat& h() const { return h_; }

 private:
  Mat a_, b_;
  Vec c_;
  Mat h_;
};

struct NoiseModel {
  Mat q_proc;
  Mat r_meas;
};

struct Prediction {
  GaussianBelief state;
  Vec y_mean;
  Mat p_yy;  // includes r_meas
  Mat p_xy;
};

struct UpdateResult {
  GaussianBelief belief;
  Vec residual;
  Mat kalman_gain;
};

/// Lower Cholesky factor of the symmetrized matrix. Jitter starting at 1e-9 I
/// is added and escalated x10 up to 1e-3 I before giving up with NumericalError.
Mat matrix_sqrt(const Mat& m);

SigmaSet select_sigma_points(const GaussianBelief& belief, const UtParams& params);

Prediction ukf_predict(const GaussianBelief& belief, const UtParams& params, const ProcessModel& model,
                       const Vec& u, const NoiseModel& noise);

UpdateResult ukf_update(const Prediction& pred, const Vec& y);

/// One linear Kalman predict + update on `model`.
UpdateResult kf_step(const GaussianBelief& belief, const Vec& u, const Vec& y, const LinearModel& model,
                     const NoiseModel& noise);

/// Anything that turns (command, measurement) into a residual. The detector
/// only ever sees the residual, so estimators are interchangeable.
class Estimator {
 public:
  virtual ~Estimator() = default;
  virtual UpdateResult step(const Vec& u, const Vec& y) = 0;
  virtual const GaussianBelief& belief() const = 0;
};

class UnscentedKalmanFilter : public Estimator {
 public:
  UnscentedKalmanFilter(std::shared_ptr<const ProcessModel> model, UtParams params, NoiseModel noise,
                        GaussianBelief initial);

  UpdateResult step(const Vec& u, const Vec& y) override;
  const GaussianBelief& belief() const override { return belief_; }

 private:
  std::shared_ptr<const ProcessModel> model_;
  UtParams params_;
  NoiseModel noise_;
  GaussianBelief belief_;
};

class KalmanFilter : public Estimator {
 public:
  KalmanFilter(LinearModel model, NoiseModel noise, GaussianBelief initial);

  UpdateResult step(const Vec& u, const Vec& y) override;
  const GaussianBelief& belief() const override { return belief_; }

 private:
  LinearModel model_;
  NoiseModel noise_;
  GaussianBelief belief_;
};

/// Constant-resistance longitudinal model used by the baseline filter.
/// State [speed, yaw_rate, accel], control [unified, steer], measurement
/// [accel, speed, yaw_rate]:
///   a' = a_max (2u - 1) - r_travel / M,  v' = v + dt a',  w' = w.
LinearModel longitudinal_kf_model(double mass_kg, double dt_s, double max_traction_accel,
                                  double r_travel_n);

/// Selection matrix mapping the [speed, yaw_rate, accel] state to the
/// [accel, speed, yaw_rate] measurement.
Mat state_to_measurement();

}  // namespace vids::est
