#include "vids/learner.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <numeric>
#include <random>
#include <sstream>

#include "vids/errors.hpp"

namespace vids::ml {

namespace {

constexpr int kW1Size = kHiddenDim * kInputDim;
constexpr int kB1Offset = kW1Size;
constexpr int kW2Offset = kB1Offset + kHiddenDim;
constexpr int kB2Offset = kW2Offset + kHiddenDim;

constexpr const char* kMagic = "VIDSMLP";
constexpr int kFormatVersion = 1;

// Per-channel affine standardization z = (x - shift) / scale.
struct InputScaler {
  Input shift = Input::Zero();
  Input scale = Input::Ones();

  static InputScaler fit(const std::vector<TrainingSample>& samples) {
    InputScaler s;
    if (samples.empty()) return s;
    Input sum = Input::Zero(), sq = Input::Zero();
    for (const auto& smp : samples) {
      sum += smp.input;
      sq += smp.input.cwiseProduct(smp.input);
    }
    const double n = static_cast<double>(samples.size());
    s.shift = sum / n;
    for (int i = 0; i < kInputDim; ++i) {
      const double var = std::max(0.0, sq[i] / n - s.shift[i] * s.shift[i]);
      s.scale[i] = var > 1e-12 ? std::sqrt(var) : 1.0;
    }
    return s;
  }

  Input apply(const Input& x) const { return (x - shift).cwiseQuotient(scale); }

  // A network on standardized inputs, re-expressed on raw inputs.
  MlpModel fold_into(const MlpModel& m) const {
    MlpModel out = m;
    for (int j = 0; j < kInputDim; ++j) out.w1.col(j) = m.w1.col(j) / scale[j];
    out.b1 = m.b1 - out.w1 * shift;
    return out;
  }
};

}  // namespace

MlpModel MlpModel::initialized(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  MlpModel m;
  m.seed = seed;
  const double lim1 = std::sqrt(6.0 / kInputDim);
  const double lim2 = 1.0 / std::sqrt(static_cast<double>(kHiddenDim));
  std::uniform_real_distribution<double> u1(-lim1, lim1), ub(0.0, 0.1), u2(-lim2, lim2);
  for (int j = 0; j < kInputDim; ++j)
    for (int i = 0; i < kHiddenDim; ++i) m.w1(i, j) = u1(rng);
  for (int i = 0; i < kHiddenDim; ++i) m.b1[i] = ub(rng);
  for (int i = 0; i < kHiddenDim; ++i) m.w2[i] = u2(rng);
  m.b2 = 0.0;
  return m;
}

bool MlpModel::all_finite() const {
  return w1.allFinite() && b1.allFinite() && w2.allFinite() && std::isfinite(b2);
}

Eigen::VectorXd MlpModel::flatten() const {
  Eigen::VectorXd p(kParamCount);
  p.segment<kW1Size>(0) = Eigen::Map<const Eigen::Matrix<double, kW1Size, 1>>(w1.data());
  p.segment<kHiddenDim>(kB1Offset) = b1;
  p.segment<kHiddenDim>(kW2Offset) = w2.transpose();
  p[kB2Offset] = b2;
  return p;
}

void MlpModel::assign(const Eigen::VectorXd& p) {
  if (p.size() != kParamCount) throw ConfigError("parameter vector has wrong size");
  Eigen::Map<Eigen::Matrix<double, kW1Size, 1>>(w1.data()) = p.segment<kW1Size>(0);
  b1 = p.segment<kHiddenDim>(kB1Offset);
  w2 = p.segment<kHiddenDim>(kW2Offset).transpose();
  b2 = p[kB2Offset];
}

double forward(const MlpModel& model, const Input& x) {
  const Eigen::Matrix<double, kHiddenDim, 1> hidden = (model.w1 * x + model.b1).cwiseMax(0.0);
  return model.w2.dot(hidden.transpose()) + model.b2;
}

double forward_with_gradient(const MlpModel& model, const Input& x, Eigen::VectorXd& grad) {
  const Eigen::Matrix<double, kHiddenDim, 1> pre = model.w1 * x + model.b1;
  const Eigen::Matrix<double, kHiddenDim, 1> hidden = pre.cwiseMax(0.0);
  grad.resize(MlpModel::kParamCount);

  Eigen::Matrix<double, kHiddenDim, 1> d_pre;
  for (int i = 0; i < kHiddenDim; ++i) d_pre[i] = pre[i] > 0.0 ? model.w2[i] : 0.0;

  Eigen::Map<Eigen::Matrix<double, kHiddenDim, kInputDim>> d_w1(grad.data());
  d_w1.noalias() = d_pre * x.transpose();
  grad.segment<kHiddenDim>(kB1Offset) = d_pre;
  grad.segment<kHiddenDim>(kW2Offset) = hidden;
  grad[kB2Offset] = 1.0;
  return model.w2.dot(hidden.transpose()) + model.b2;
}

std::vector<TrainingSample> build_samples(const std::vector<sim::LogRecord>& log, SampleSource source) {
  std::vector<TrainingSample> out;
  if (log.size() < 2) return out;
  out.reserve(log.size());
  for (std::size_t k = 0; k + 1 < log.size(); ++k) {
    const auto& rec = log[k];
    TrainingSample s;
    if (source == SampleSource::truth) {
      s.input << rec.cmd.unified(), rec.cmd.steer, rec.state.speed_mps, rec.state.yaw_rate_rps,
          rec.state.accel_mps2;
      s.target = rec.accel_label;
    } else {
      s.input << rec.cmd.unified(), rec.cmd.steer, rec.meas.speed_mps, rec.meas.yaw_rate_rps,
          rec.meas.accel_mps2;
      s.target = log[k + 1].meas.accel_mps2;
    }
    out.push_back(s);
  }
  return out;
}

std::vector<TrainingSample> remove_outliers(const std::vector<TrainingSample>& samples) {
  if (samples.size() < 2) return samples;
  constexpr int kChannels = kInputDim + 1;
  Eigen::Matrix<double, kChannels, 1> mean = decltype(mean)::Zero(), sq = decltype(sq)::Zero();
  auto channels = [](const TrainingSample& s) {
    Eigen::Matrix<double, kChannels, 1> c;
    c << s.input, s.target;
    return c;
  };
  for (const auto& s : samples) {
    const auto c = channels(s);
    mean += c;
    sq += c.cwiseProduct(c);
  }
  const double n = static_cast<double>(samples.size());
  mean /= n;
  const auto stddev = (sq / n - mean.cwiseProduct(mean)).cwiseMax(0.0).cwiseSqrt().eval();

  std::vector<TrainingSample> kept;
  kept.reserve(samples.size());
  for (const auto& s : samples) {
    const auto dev = (channels(s) - mean).cwiseAbs().eval();
    bool ok = true;
    for (int i = 0; i < kChannels; ++i) ok = ok && (stddev[i] == 0.0 || dev[i] <= 3.0 * stddev[i]);
    if (ok) kept.push_back(s);
  }
  return kept;
}

void AdamState::apply(Eigen::VectorXd& params, const Eigen::VectorXd& grad, double lr, const AdamConfig& cfg) {
  ++t_;
  m_ = cfg.beta1 * m_ + (1.0 - cfg.beta1) * grad;
  v_ = cfg.beta2 * v_ + (1.0 - cfg.beta2) * grad.cwiseProduct(grad);
  const double c1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(t_));
  params.array() -= lr * (m_.array() / c1) / ((v_.array() / c2).sqrt() + cfg.eps);
}

void TrainConfig::validate() const {
  if (!(base_lr > 0.0)) throw ConfigError("learning rate must be > 0");
  if (!(train_fraction > 0.0 && train_fraction < 1.0)) throw ConfigError("train_fraction must be in (0, 1)");
  if (epochs < 1) throw ConfigError("epochs must be >= 1");
  if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
}

double mean_squared_error(const MlpModel& model, const std::vector<TrainingSample>& samples) {
  if (samples.empty()) return 0.0;
  double acc = 0.0;
  for (const auto& s : samples) {
    const double e = forward(model, s.input) - s.target;
    acc += e * e;
  }
  return acc / static_cast<double>(samples.size());
}

TrainResult train_offline(const std::vector<TrainingSample>& samples, const TrainConfig& cfg) {
  cfg.validate();
  for (const auto& s : samples) {
    if (!s.input.allFinite() || !std::isfinite(s.target)) throw RuntimeError("training sample is not finite");
  }
  std::vector<TrainingSample> clean = remove_outliers(samples);
  const std::size_t needed = 10 * static_cast<std::size_t>(cfg.batch_size);
  if (clean.size() < needed) {
    throw RuntimeError("insufficient training data: " + std::to_string(clean.size()) +
                       " samples after preprocessing, need " + std::to_string(needed));
  }

  TrainResult result;
  result.n_outliers = samples.size() - clean.size();

  std::mt19937_64 rng(cfg.seed);
  std::shuffle(clean.begin(), clean.end(), rng);
  const auto n_train = static_cast<std::size_t>(std::floor(cfg.train_fraction * clean.size() + 1e-9));
  std::vector<TrainingSample> train(clean.begin(), clean.begin() + static_cast<long>(n_train));
  std::vector<TrainingSample> val(clean.begin() + static_cast<long>(n_train), clean.end());
  result.n_train = train.size();
  result.n_val = val.size();

  const InputScaler scaler = InputScaler::fit(train);
  std::vector<TrainingSample> train_z = train;
  for (auto& s : train_z) s.input = scaler.apply(s.input);

  MlpModel net = MlpModel::initialized(cfg.seed);
  Eigen::VectorXd params = net.flatten();
  AdamState adam;
  Eigen::VectorXd grad(MlpModel::kParamCount), dy(MlpModel::kParamCount);

  auto record = [&](int epoch) {
    const MlpModel raw = scaler.fold_into(net);
    LossPoint p{epoch, mean_squared_error(raw, train), mean_squared_error(raw, val)};
    if (!std::isfinite(p.train_mse) || !std::isfinite(p.val_mse)) {
      throw RuntimeError("training diverged (non-finite loss) at epoch " + std::to_string(epoch));
    }
    result.curve.push_back(p);
  };
  record(0);

  std::vector<std::size_t> order(train_z.size());
  std::iota(order.begin(), order.end(), 0);
  const auto batch = static_cast<std::size_t>(cfg.batch_size);
  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t start = 0; start < order.size(); start += batch) {
      const std::size_t end = std::min(order.size(), start + batch);
      grad.setZero();
      for (std::size_t i = start; i < end; ++i) {
        const auto& s = train_z[order[i]];
        const double y = forward_with_gradient(net, s.input, dy);
        grad += (2.0 * (y - s.target)) * dy;
      }
      grad /= static_cast<double>(end - start);
      adam.apply(params, grad, cfg.base_lr, cfg.adam);
      net.assign(params);
    }
    record(epoch);
  }

  result.model = scaler.fold_into(net);
  result.model.seed = cfg.seed;
  return result;
}

double adaptive_rate(const Eigen::VectorXd& residual, double s_rate) {
  if (!(s_rate > 0.0)) throw ConfigError("s_rate must be > 0");
  // 1 - 1/(1 + e^-x) == 1/(1 + e^x)
  return 1.0 / (1.0 + std::exp(s_rate * residual.norm()));
}

void OnlineAdaptConfig::validate() const {
  if (!(s_rate > 0.0)) throw ConfigError("s_rate must be > 0");
  if (!(base_lr > 0.0)) throw ConfigError("online base_lr must be > 0");
}

OnlineLearner::OnlineLearner(MlpModel model, OnlineAdaptConfig cfg)
    : model_(std::make_shared<MlpModel>(std::move(model))), cfg_(cfg) {
  cfg_.validate();
}

double OnlineLearner::update(const TrainingSample& sample, const Eigen::VectorXd& residual) {
  if (!cfg_.enabled) return 0.0;
  Eigen::VectorXd dy;
  const double err = forward_with_gradient(*model_, sample.input, dy) - sample.target;
  const Eigen::VectorXd grad = 2.0 * err * dy;
  const double lr = cfg_.base_lr * adaptive_rate(residual, cfg_.s_rate);
  if (!grad.allFinite() || !std::isfinite(lr)) {
    ++skipped_;
    return 0.0;
  }
  Eigen::VectorXd params = model_->flatten();
  adam_.apply(params, grad, lr, cfg_.adam);
  if (!params.allFinite()) {
    ++skipped_;
    return 0.0;
  }
  model_->assign(params);
  ++updates_;
  return lr;
}

MlpModel online_update(const MlpModel& model, const TrainingSample& sample, const Eigen::VectorXd& residual,
                       const OnlineAdaptConfig& cfg, double base_lr) {
  OnlineAdaptConfig c = cfg;
  c.base_lr = base_lr;
  OnlineLearner learner(model, c);
  learner.update(sample, residual);
  return *learner.model();
}

MlpProcessModel::MlpProcessModel(std::shared_ptr<const MlpModel> model, double dt_s)
    : model_(std::move(model)), dt_s_(dt_s) {
  if (!model_) throw ConfigError("process model needs a network");
  if (!(dt_s_ > 0.0)) throw ConfigError("dt_s must be > 0");
}

est::Vec MlpProcessModel::predict_state(const est::Vec& x, const est::Vec& u) const {
  Input in;
  in << u[0], u[1], x[0], x[1], x[2];
  const double a_hat = forward(*model_, in);
  est::Vec next(3);
  next << std::max(0.0, x[0] + a_hat * dt_s_), x[1], a_hat;
  return next;
}

est::Vec MlpProcessModel::measure(const est::Vec& x) const {
  est::Vec y(3);
  y << x[2], x[0], x[1];
  return y;
}

std::shared_ptr<MlpProcessModel> as_process_model(std::shared_ptr<const MlpModel> model,
                                                  const sim::VehicleParams& params) {
  return std::make_shared<MlpProcessModel>(std::move(model), params.dt_s);
}

void save_model(const MlpModel& model, std::ostream& out) {
  out << kMagic << ' ' << kFormatVersion << ' ' << kInputDim << 'x' << kHiddenDim << "x1 " << model.seed
      << '\n';
  const Eigen::VectorXd p = model.flatten();
  out << std::hexfloat;
  for (int i = 0; i < p.size(); ++i) out << p[i] << '\n';
  out << std::defaultfloat;
}

void save_model(const MlpModel& model, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw RuntimeError("cannot write model file " + path);
  save_model(model, out);
}

MlpModel load_model(std::istream& in) {
  std::string magic, dims;
  int version = 0;
  std::uint64_t seed = 0;
  if (!(in >> magic >> version >> dims >> seed) || magic != kMagic)
    throw ConfigError("not a model file (bad header)");
  if (version != kFormatVersion) throw ConfigError("unsupported model format version " + std::to_string(version));
  std::ostringstream expected;
  expected << kInputDim << 'x' << kHiddenDim << "x1";
  if (dims != expected.str()) throw ConfigError("model layer dims " + dims + " do not match " + expected.str());

  Eigen::VectorXd p(MlpModel::kParamCount);
  for (int i = 0; i < p.size(); ++i) {
    std::string tok;
    if (!(in >> tok)) throw ConfigError("model file truncated");
    // strtod parses hex floats; iostream extraction of hexfloat is unreliable.
    char* end = nullptr;
    p[i] = std::strtod(tok.c_str(), &end);
    if (end == tok.c_str() || *end != '\0') throw ConfigError("bad model parameter '" + tok + "'");
  }
  MlpModel m;
  m.assign(p);
  m.seed = seed;
  if (!m.all_finite()) throw ConfigError("model file contains non-finite weights");
  return m;
}

MlpModel load_model(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open model file " + path);
  return load_model(in);
}

void write_loss_curve(const std::vector<LossPoint>& curve, std::ostream& out) {
  out << "epoch,train_mse,val_mse\n" << std::setprecision(17);
  for (const auto& p : curve) out << p.epoch << ',' << p.train_mse << ',' << p.val_mse << '\n';
}

}  // namespace vids::ml
