#include <deque>
#include <vector>

#include <doctest.h>

#include "gen.hpp"
#include "vids/detector.hpp"
#include "vids/errors.hpp"

using namespace vids::detect;
using vids::testing::Gen;

namespace {

Vec r3(double a, double b, double c) { return Eigen::Vector3d(a, b, c); }

struct Brute {
  double s1 = 0.0, s2 = 0.0;
};

// Statistics recomputed from scratch over the last n entries of a history.
Brute brute(const std::vector<Vec>& history, int n, const Vec& w1, const Mat& w2) {
  const std::size_t first = history.size() > static_cast<std::size_t>(n) ? history.size() - n : 0;
  Brute out;
  Vec mean = Vec::Zero(w1.size());
  for (std::size_t i = first; i < history.size(); ++i) {
    out.s1 += w1.dot(history[i]);
    mean += history[i];
  }
  const std::size_t count = history.size() - first;
  if (count < 2) return out;
  mean /= static_cast<double>(count);
  for (std::size_t i = first; i < history.size(); ++i) {
    const Vec d = history[i] - mean;
    out.s2 += d.dot(w2 * d);
  }
  return out;
}

}  // namespace

TEST_CASE("window sums") {
  const DetectorConfig cfg;
  std::deque<Vec> q{r3(0, 0, 0), r3(0, 0, 0)};
  CHECK(test1(q, cfg.w_r1) == 0.0);
  q = {r3(1, 0, 0), r3(2, 0, 0)};
  CHECK(test1(q, cfg.w_r1) == 3.0);
  q = {r3(0, 0, 0), r3(2, 0, 0)};
  CHECK(test2(q, cfg.w_r2) == doctest::Approx(2.0).epsilon(1e-15));
  q = {r3(1, 2, 3), r3(1, 2, 3), r3(1, 2, 3)};
  CHECK(test2(q, cfg.w_r2) == 0.0);
  CHECK(test2({r3(5, 5, 5)}, cfg.w_r2) == 0.0);
}

TEST_CASE("alarm rule") {
  DetectorConfig cfg;
  cfg.t1 = 13.33;
  CHECK(cfg.t2() == 0.04 * 13.33);
  CHECK(alarm(0.0, 1e9, cfg) == Alarm::none);
  CHECK(alarm(-(cfg.t1 + 1.0), cfg.t2() + 1.0, cfg) == Alarm::attack);
  CHECK(alarm(cfg.t1 + 1.0, cfg.t2() + 1.0, cfg) == Alarm::attack);
  CHECK(alarm(cfg.t1, cfg.t2() + 1.0, cfg) == Alarm::none);
  CHECK(alarm(cfg.t1 + 1.0, cfg.t2(), cfg) == Alarm::none);
}

TEST_CASE("doubling t1 doubles t2") {
  Gen g(1);
  for (int i = 0; i < 100; ++i) {
    DetectorConfig a;
    a.t1 = g.uniform(0.1, 100.0);
    DetectorConfig b = a;
    b.t1 = 2.0 * a.t1;
    CHECK(b.t2() == 2.0 * a.t2());
  }
}

TEST_CASE("detector statistics match a from-scratch recomputation") {
  Gen g(2);
  for (int trial = 0; trial < 20; ++trial) {
    DetectorConfig cfg;
    cfg.window_n = g.integer(1, 60);
    cfg.w_r1 = g.vector(3, -1.0, 1.0);
    const Mat a = g.matrix(3, 3);
    cfg.w_r2 = a * a.transpose();
    cfg.t1 = g.uniform(0.1, 5.0);
    Detector d(cfg);
    std::vector<Vec> history;
    const int pushes = g.integer(1, 500);
    for (int k = 0; k < pushes; ++k) {
      const Vec r = g.vector(3, -3.0, 3.0);
      history.push_back(r);
      REQUIRE(d.push(r));
      const auto b = brute(history, cfg.window_n, cfg.w_r1, cfg.w_r2);
      CHECK(std::abs(d.s1() - b.s1) < 1e-10);
      CHECK(std::abs(d.s2() - b.s2) < 1e-10);
      CHECK(d.s2() >= 0.0);
      const bool full = static_cast<int>(history.size()) >= cfg.window_n;
      CHECK(d.window_full() == full);
      const bool expect = full && std::abs(b.s1) > cfg.t1 && b.s2 > cfg.t2();
      CHECK((d.flag() == Alarm::attack) == expect);
    }
  }
}

TEST_CASE("zero-weight channels are inert") {
  Gen g(3);
  Detector a{DetectorConfig{}}, b{DetectorConfig{}};
  for (int k = 0; k < 200; ++k) {
    Vec r = g.vector(3, -2.0, 2.0);
    Vec r_perturbed = r;
    r_perturbed[2] += g.uniform(-100.0, 100.0);
    a.push(r);
    b.push(r_perturbed);
    CHECK(a.s1() == b.s1());
    CHECK(a.s2() == doctest::Approx(b.s2()).epsilon(1e-12));
    CHECK(a.flag() == b.flag());
  }
}

TEST_CASE("non-finite residuals are rejected without touching the window") {
  Detector d{DetectorConfig{}};
  d.push(r3(1, 0, 0));
  CHECK_FALSE(d.push(r3(std::nan(""), 0, 0)));
  CHECK_FALSE(d.push(Eigen::Vector2d(1, 1)));
  CHECK(d.rejected() == 2);
  CHECK(d.window().size() == 1);
  CHECK(d.s1() == 1.0);
}

TEST_CASE("invalid detector configs") {
  DetectorConfig cfg;
  cfg.window_n = 0;
  CHECK_THROWS_AS(cfg.validate(), vids::ConfigError);
  cfg = {};
  cfg.t1 = -1.0;
  CHECK_THROWS_AS(cfg.validate(), vids::ConfigError);
  cfg = {};
  cfg.w_r2 = Mat::Identity(2, 2);
  CHECK_THROWS_AS(cfg.validate(), vids::ConfigError);
}
