#pragma once

#include <cstdint>
#include <iosfwd>
#include <memory>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "vids/estimators.hpp"
#include "vids/vehicle_sim.hpp"

namespace vids::ml {

inline constexpr int kInputDim = 5;
inline constexpr int kHiddenDim = 20;

/// [unified control, steer, speed, yaw_rate, accel]
using Input = Eigen::Matrix<double, kInputDim, 1>;

/// 5 -> 20 (ReLU) -> 1 regression network predicting the acceleration one
/// tick ahead.
struct MlpModel {
  static constexpr int kParamCount = kHiddenDim * kInputDim + kHiddenDim + kHiddenDim + 1;

  Eigen::Matrix<double, kHiddenDim, kInputDim> w1 = decltype(w1)::Zero();
  Eigen::Matrix<double, kHiddenDim, 1> b1 = decltype(b1)::Zero();
  Eigen::Matrix<double, 1, kHiddenDim> w2 = decltype(w2)::Zero();
  double b2 = 0.0;
  std::uint64_t seed = 0;

  /// He-uniform hidden layer, small uniform output layer.
  static MlpModel initialized(std::uint64_t seed);

  bool all_finite() const;
  /// Parameters in the order w1 (column-major), b1, w2, b2.
  Eigen::VectorXd flatten() const;
  void assign(const Eigen::VectorXd& params);

  bool operator==(const MlpModel&) const = default;
};

double forward(const MlpModel& model, const Input& x);

/// Returns the output and writes d(output)/d(params) into `grad` (size kParamCount).
double forward_with_gradient(const MlpModel& model, const Input& x, Eigen::VectorXd& grad);

struct TrainingSample {
  Input input = Input::Zero();
  double target = 0.0;
};

enum class SampleSource {
  truth,     // simulator states and exact next-tick acceleration
  measured,  // sensor readings; target is the next reading of the accel sensor
};

/// Pairs every record with the acceleration one tick later.
std::vector<TrainingSample> build_samples(const std::vector<sim::LogRecord>& log, SampleSource source);

/// Drops samples with any input or target channel beyond 3 sample standard
/// deviations of the set.
std::vector<TrainingSample> remove_outliers(const std::vector<TrainingSample>& samples);

struct AdamConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

class AdamState {
 public:
  AdamState() : m_(Eigen::VectorXd::Zero(MlpModel::kParamCount)), v_(m_) {}

  /// Applies one bias-corrected Adam step in place.
  void apply(Eigen::VectorXd& params, const Eigen::VectorXd& grad, double lr, const AdamConfig& cfg);
  long steps() const { return t_; }

 private:
  Eigen::VectorXd m_, v_;
  long t_ = 0;
};

struct TrainConfig {
  double base_lr = 0.001;
  double train_fraction = 0.8;
  int epochs = 1000;
  int batch_size = 64;
  AdamConfig adam;
  std::uint64_t seed = 0;

  void validate() const;
};

struct LossPoint {
  int epoch = 0;  // 0 is the untrained network
  double train_mse = 0.0;
  double val_mse = 0.0;
};

struct TrainResult {
  MlpModel model;
  std::vector<LossPoint> curve;
  std::size_t n_train = 0;
  std::size_t n_val = 0;
  std::size_t n_outliers = 0;
};

double mean_squared_error(const MlpModel& model, const std::vector<TrainingSample>& samples);

/// Outlier removal, seeded shuffle + split, mini-batch Adam on MSE. Inputs
/// are standardized during training and the scaling is folded into the first
/// layer of the returned model.
TrainResult train_offline(const std::vector<TrainingSample>& samples, const TrainConfig& cfg);

/// l = 1 - 1 / (1 + exp(-s_rate * |r|_2)), evaluated without cancellation.
double adaptive_rate(const Eigen::VectorXd& residual, double s_rate);

struct OnlineAdaptConfig {
  double s_rate = 5.0;
  bool enabled = true;
  double base_lr = 0.001;
  AdamConfig adam;

  void validate() const;
};

/// Owns the model a filter predicts with and adapts it one sample at a time.
class OnlineLearner {
 public:
  OnlineLearner(MlpModel model, OnlineAdaptConfig cfg);

  /// One Adam step on the squared error of `sample`, scaled by
  /// adaptive_rate(residual). Returns the effective learning rate applied
  /// (0 when disabled or skipped).
  double update(const TrainingSample& sample, const Eigen::VectorXd& residual);

  std::shared_ptr<const MlpModel> model() const { return model_; }
  long skipped() const { return skipped_; }
  long updates() const { return updates_; }

 private:
  std::shared_ptr<MlpModel> model_;
  OnlineAdaptConfig cfg_;
  AdamState adam_;
  long skipped_ = 0;
  long updates_ = 0;
};

/// Stateless single update (fresh optimizer moments).
MlpModel online_update(const MlpModel& model, const TrainingSample& sample, const Eigen::VectorXd& residual,
                       const OnlineAdaptConfig& cfg, double base_lr);

/// UKF process model: state [speed, yaw_rate, accel], control [unified, steer].
/// The network predicts the next acceleration; speed integrates it and is
/// clamped at zero; yaw rate is held.
class MlpProcessModel : public est::ProcessModel {
 public:
  MlpProcessModel(std::shared_ptr<const MlpModel> model, double dt_s);

  int state_dim() const override { return 3; }
  int control_dim() const override { return 2; }
  int meas_dim() const override { return 3; }
  est::Vec predict_state(const est::Vec& x, const est::Vec& u) const override;
  est::Vec measure(const est::Vec& x) const override;

 private:
  std::shared_ptr<const MlpModel> model_;
  double dt_s_;
};

std::shared_ptr<MlpProcessModel> as_process_model(std::shared_ptr<const MlpModel> model,
                                                  const sim::VehicleParams& params);

/// Text format: header "VIDSMLP <version> 5x20x1 <seed>", then one hex-float
/// parameter per line in flatten() order.
void save_model(const MlpModel& model, std::ostream& out);
void save_model(const MlpModel& model, const std::string& path);
MlpModel load_model(std::istream& in);
MlpModel load_model(const std::string& path);

void write_loss_curve(const std::vector<LossPoint>& curve, std::ostream& out);

}  // namespace vids::ml
