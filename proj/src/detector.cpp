#include "vids/detector.hpp"

#include <cmath>

#include <Eigen/Eigenvalues>

#include "vids/errors.hpp"

namespace vids::detect {

void DetectorConfig::validate() const {
  if (window_n < 2) throw ConfigError("detector window_n must be >= 2");
  if (!(t1 > 0.0)) throw ConfigError("detector t1 must be > 0");
  if (!(gamma > 0.0)) throw ConfigError("detector gamma must be > 0");
  const long m = w_r1.size();
  if (m == 0 || w_r2.rows() != m || w_r2.cols() != m) throw ConfigError("detector weight shapes disagree");
  if (!w_r1.allFinite() || !w_r2.allFinite()) throw ConfigError("detector weights must be finite");
  if ((w_r2 - w_r2.transpose()).cwiseAbs().maxCoeff() > 1e-12) throw ConfigError("w_r2 must be symmetric");
  Eigen::SelfAdjointEigenSolver<Mat> eig(w_r2, Eigen::EigenvaluesOnly);
  if (eig.eigenvalues().minCoeff() < -1e-12) throw ConfigError("w_r2 must be positive semi-definite");
}

double test1(const std::deque<Vec>& window, const Vec& w_r1) {
  double s = 0.0;
  for (const auto& r : window) s += w_r1.dot(r);
  return s;
}

double test2(const std::deque<Vec>& window, const Mat& w_r2) {
  if (window.size() < 2) return 0.0;
  Vec mean = Vec::Zero(window.front().size());
  for (const auto& r : window) mean += r;
  mean /= static_cast<double>(window.size());
  double s = 0.0;
  for (const auto& r : window) {
    const Vec d = r - mean;
    s += d.dot(w_r2 * d);
  }
  return std::max(0.0, s);
}

Alarm alarm(double s1, double s2, const DetectorConfig& cfg) {
  return (std::abs(s1) > cfg.t1 && s2 > cfg.t2()) ? Alarm::attack : Alarm::none;
}

Detector::Detector(DetectorConfig cfg) : cfg_(std::move(cfg)) { cfg_.validate(); }

bool Detector::push(const Vec& residual) {
  if (residual.size() != cfg_.dim() || !residual.allFinite()) {
    ++rejected_;
    return false;
  }
  window_.push_back(residual);
  if (static_cast<int>(window_.size()) > cfg_.window_n) window_.pop_front();
  s1_ = test1(window_, cfg_.w_r1);
  s2_ = test2(window_, cfg_.w_r2);
  flag_ = window_full() ? alarm(s1_, s2_, cfg_) : Alarm::none;
  return true;
}

}  // namespace vids::detect
