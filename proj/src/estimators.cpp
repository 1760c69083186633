#include "vids/estimators.hpp"

#include <cmath>
#include <sstream>
#include <string>

#include <Eigen/Eigenvalues>

#include "vids/errors.hpp"

namespace vids::est {

namespace {

constexpr double kSymTol = 1e-9;

Mat symmetrized(const Mat& m) { return 0.5 * (m + m.transpose()); }

void check_dims(const Vec& v, long expected, const char* what) {
  if (v.size() != expected) {
    throw RuntimeError(std::string(what) + " has dimension " + std::to_string(v.size()) + ", expected " +
                       std::to_string(expected));
  }
}

}  // namespace

void GaussianBelief::validate() const {
  const long n = mean.size();
  if (cov.rows() != n || cov.cols() != n) throw ConfigError("belief covariance shape mismatch");
  if (!mean.allFinite() || !cov.allFinite()) throw ConfigError("belief contains non-finite values");
  if ((cov - cov.transpose()).cwiseAbs().maxCoeff() >= kSymTol && n > 0)
    throw ConfigError("belief covariance is not symmetric");
  if (n == 0) return;
  Eigen::SelfAdjointEigenSolver<Mat> eig(symmetrized(cov), Eigen::EigenvaluesOnly);
  if (eig.eigenvalues().minCoeff() < -kSymTol) throw ConfigError("belief covariance is not PSD");
}

void UtParams::validate(int n) const {
  if (!(phi > 0.0)) throw ConfigError("UT phi must be > 0");
  if (!(n + lambda(n) > 0.0)) throw ConfigError("UT parameters give n + lambda <= 0");
}

LinearModel::LinearModel(Mat a, Mat b, Vec c, Mat h)
    : a_(std::move(a)), b_(std::move(b)), c_(std::move(c)), h_(std::move(h)) {
  if (a_.rows() != a_.cols() || b_.rows() != a_.rows() || c_.size() != a_.rows() || h_.cols() != a_.rows())
    throw ConfigError("linear model dimensions are inconsistent");
}

Mat matrix_sqrt(const Mat& m) {
  const Mat sym = symmetrized(m);
  const long n = sym.rows();
  Eigen::LLT<Mat> llt(sym);
  if (llt.info() == Eigen::Success) return llt.matrixL();

  // Positive semi-definite but singular (e.g. a state with zero process noise):
  // the pivoted LDL^T factor gives an exact root without jitter.
  Eigen::LDLT<Mat> ldlt(sym);
  if (ldlt.info() == Eigen::Success) {
    const Vec d = ldlt.vectorD();
    const double tol = kSymTol * std::max(1.0, sym.cwiseAbs().maxCoeff());
    if (d.minCoeff() >= -tol) {
      const Mat l = ldlt.matrixL();
      Mat root = ldlt.transpositionsP().transpose() * (l * d.cwiseMax(0.0).cwiseSqrt().asDiagonal());
      if ((root * root.transpose() - sym).cwiseAbs().maxCoeff() <= tol) return root;
    }
  }

  for (double jitter = 1e-9; jitter <= 1e-3 * (1 + 1e-12); jitter *= 10.0) {
    llt.compute(sym + jitter * Mat::Identity(n, n));
    if (llt.info() == Eigen::Success) return llt.matrixL();
  }
  std::ostringstream os;
  os << "covariance is not positive definite even with 1e-3 jitter:\n" << sym;
  throw NumericalError(os.str(), sym);
}

SigmaSet select_sigma_points(const GaussianBelief& belief, const UtParams& params) {
  const int n = belief.dim();
  params.validate(n);
  const double lambda = params.lambda(n);
  const double spread = n + lambda;

  SigmaSet s;
  s.points.resize(n, 2 * n + 1);
  s.w_mean.setConstant(2 * n + 1, 1.0 / (2.0 * spread));
  s.w_cov = s.w_mean;
  s.w_mean[0] = lambda / spread;
  s.w_cov[0] = lambda / spread + (1.0 - params.phi * params.phi + params.beta_prior);

  const Mat root = belief.cov.isZero(0.0) ? Mat::Zero(n, n) : matrix_sqrt(spread * belief.cov);
  s.points.col(0) = belief.mean;
  for (int i = 0; i < n; ++i) {
    s.points.col(1 + i) = belief.mean + root.col(i);
    s.points.col(1 + n + i) = belief.mean - root.col(i);
  }
  return s;
}

Prediction ukf_predict(const GaussianBelief& belief, const UtParams& params, const ProcessModel& model,
                       const Vec& u, const NoiseModel& noise) {
  const int n = model.state_dim();
  const int m = model.meas_dim();
  check_dims(belief.mean, n, "belief mean");
  check_dims(u, model.control_dim(), "control");

  const SigmaSet sigma = select_sigma_points(belief, params);
  const int count = sigma.size();
  Mat chi(n, count), ys(m, count);
  for (int i = 0; i < count; ++i) {
    Vec xi = model.predict_state(sigma.points.col(i), u);
    check_dims(xi, n, "process model output");
    Vec yi = model.measure(xi);
    check_dims(yi, m, "measurement model output");
    chi.col(i) = std::move(xi);
    ys.col(i) = std::move(yi);
  }

  Prediction pred;
  pred.state.mean = chi * sigma.w_mean;
  pred.y_mean = ys * sigma.w_mean;
  const Mat dx = chi.colwise() - pred.state.mean;
  const Mat dy = ys.colwise() - pred.y_mean;
  const auto wc = sigma.w_cov.asDiagonal();
  pred.state.cov = symmetrized(dx * wc * dx.transpose() + noise.q_proc);
  pred.p_yy = symmetrized(dy * wc * dy.transpose() + noise.r_meas);
  pred.p_xy = dx * wc * dy.transpose();
  return pred;
}

UpdateResult ukf_update(const Prediction& pred, const Vec& y) {
  check_dims(y, pred.y_mean.size(), "measurement");
  Eigen::FullPivLU<Mat> lu(pred.p_yy);
  if (!lu.isInvertible()) {
    throw RuntimeError("innovation covariance P_yy is singular; raise the r_meas floor");
  }
  UpdateResult out;
  // P_yy is symmetric, so K = P_xy P_yy^-1 = (P_yy^-1 P_xy^T)^T.
  out.kalman_gain = lu.solve(pred.p_xy.transpose()).transpose();
  out.residual = y - pred.y_mean;
  out.belief.mean = pred.state.mean + out.kalman_gain * out.residual;
  out.belief.cov = symmetrized(pred.state.cov - out.kalman_gain * pred.p_xy.transpose());
  return out;
}

UpdateResult kf_step(const GaussianBelief& belief, const Vec& u, const Vec& y, const LinearModel& model,
                     const NoiseModel& noise) {
  check_dims(belief.mean, model.state_dim(), "belief mean");
  check_dims(u, model.control_dim(), "control");
  Prediction pred;
  pred.state.mean = model.predict_state(belief.mean, u);
  pred.state.cov = symmetrized(model.a() * belief.cov * model.a().transpose() + noise.q_proc);
  pred.y_mean = model.measure(pred.state.mean);
  pred.p_yy = symmetrized(model.h() * pred.state.cov * model.h().transpose() + noise.r_meas);
  pred.p_xy = pred.state.cov * model.h().transpose();
  return ukf_update(pred, y);
}

UnscentedKalmanFilter::UnscentedKalmanFilter(std::shared_ptr<const ProcessModel> model, UtParams params,
                                             NoiseModel noise, GaussianBelief initial)
    : model_(std::move(model)), params_(params), noise_(std::move(noise)), belief_(std::move(initial)) {
  params_.validate(model_->state_dim());
  belief_.validate();
}

UpdateResult UnscentedKalmanFilter::step(const Vec& u, const Vec& y) {
  auto result = ukf_update(ukf_predict(belief_, params_, *model_, u, noise_), y);
  belief_ = result.belief;
  return result;
}

KalmanFilter::KalmanFilter(LinearModel model, NoiseModel noise, GaussianBelief initial)
    : model_(std::move(model)), noise_(std::move(noise)), belief_(std::move(initial)) {
  belief_.validate();
}

UpdateResult KalmanFilter::step(const Vec& u, const Vec& y) {
  auto result = kf_step(belief_, u, y, model_, noise_);
  belief_ = result.belief;
  return result;
}

Mat state_to_measurement() {
  Mat h = Mat::Zero(3, 3);
  h(0, 2) = 1.0;  // accel
  h(1, 0) = 1.0;  // speed
  h(2, 1) = 1.0;  // yaw rate
  return h;
}

LinearModel longitudinal_kf_model(double mass_kg, double dt_s, double max_traction_accel,
                                  double r_travel_n) {
  const double a_max = max_traction_accel;
  const double bias = -a_max - r_travel_n / mass_kg;
  Mat a = Mat::Zero(3, 3);
  a(0, 0) = 1.0;
  a(1, 1) = 1.0;
  Mat b = Mat::Zero(3, 2);
  b(0, 0) = 2.0 * a_max * dt_s;
  b(2, 0) = 2.0 * a_max;
  Vec c(3);
  c << dt_s * bias, 0.0, bias;
  return LinearModel(std::move(a), std::move(b), std::move(c), state_to_measurement());
}

}  // namespace vids::est
