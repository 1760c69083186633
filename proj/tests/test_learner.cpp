#include <cmath>
#include <sstream>

#include <doctest.h>

#include "gen.hpp"
#include "vids/errors.hpp"
#include "vids/learner.hpp"

using namespace vids::ml;
using vids::testing::Gen;

namespace {

MlpModel random_model(Gen& g) {
  MlpModel m;
  m.assign(g.vector(MlpModel::kParamCount, -1.0, 1.0));
  return m;
}

Input random_input(Gen& g) {
  Input x;
  for (int i = 0; i < kInputDim; ++i) x[i] = g.uniform(-2.0, 2.0);
  return x;
}

// Independent forward pass written out with loops.
double reference_forward(const MlpModel& m, const Input& x) {
  double out = m.b2;
  for (int j = 0; j < kHiddenDim; ++j) {
    double z = m.b1[j];
    for (int i = 0; i < kInputDim; ++i) z += m.w1(j, i) * x[i];
    out += m.w2[j] * std::max(0.0, z);
  }
  return out;
}

std::vector<TrainingSample> linear_task(std::size_t n, std::uint64_t seed) {
  Gen g(seed);
  std::vector<TrainingSample> out(n);
  for (auto& s : out) {
    s.input = random_input(g);
    s.target = 0.8 * s.input[0] - 0.3 * s.input[2] + 0.1 * s.input[4] + 0.2;
  }
  return out;
}

}  // namespace

TEST_CASE("forward pass matches a loop implementation") {
  Gen g(1);
  for (int i = 0; i < 100; ++i) {
    const auto m = random_model(g);
    const auto x = random_input(g);
    CHECK(forward(m, x) == doctest::Approx(reference_forward(m, x)).epsilon(1e-12));
  }
}

TEST_CASE("backprop matches central finite differences") {
  Gen g(2);
  const double h = 1e-5;
  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const auto m = random_model(g);
    const auto x = random_input(g);
    Eigen::VectorXd grad;
    const double y = forward_with_gradient(m, x, grad);
    CHECK(y == doctest::Approx(forward(m, x)).epsilon(1e-14));
    const Eigen::VectorXd p = m.flatten();
    for (int i = 0; i < p.size(); ++i) {
      MlpModel plus = m, minus = m;
      Eigen::VectorXd pp = p, pm = p;
      pp[i] += h;
      pm[i] -= h;
      plus.assign(pp);
      minus.assign(pm);
      const double fd = (forward(plus, x) - forward(minus, x)) / (2.0 * h);
      const double rel = std::abs(fd - grad[i]) / std::max(1.0, std::abs(fd) + std::abs(grad[i]));
      worst = std::max(worst, rel);
    }
  }
  CHECK(worst < 1e-4);
}

TEST_CASE("flatten and assign round trip") {
  Gen g(3);
  const auto m = random_model(g);
  MlpModel copy;
  copy.assign(m.flatten());
  CHECK(copy.flatten() == m.flatten());
  CHECK(m.flatten().size() == 141);
  CHECK_THROWS_AS(copy.assign(Eigen::VectorXd::Zero(10)), vids::ConfigError);
}

TEST_CASE("initialisation is seeded") {
  CHECK(MlpModel::initialized(5) == MlpModel::initialized(5));
  CHECK_FALSE(MlpModel::initialized(5) == MlpModel::initialized(6));
  CHECK(MlpModel::initialized(5).all_finite());
}

TEST_CASE("adaptive rate law") {
  Eigen::VectorXd r = Eigen::VectorXd::Zero(3);
  CHECK(adaptive_rate(r, 1.0) == doctest::Approx(0.5).epsilon(1e-15));
  r[0] = 1.0;
  CHECK(std::abs(adaptive_rate(r, 1.0) - 0.2689414213699951) < 1e-12);
  // Closed form 1 - sigmoid(S |r|) at a grid of points.
  for (double s : {0.5, 1.0, 2.0, 5.0}) {
    for (double norm : {0.0, 0.1, 0.5, 1.0, 3.0, 10.0}) {
      Eigen::VectorXd v = Eigen::VectorXd::Zero(3);
      v[1] = norm;
      const double expected = 1.0 - 1.0 / (1.0 + std::exp(-s * norm));
      CHECK(std::abs(adaptive_rate(v, s) - expected) < 1e-12);
    }
  }
  // Large residuals underflow towards zero without producing NaN.
  r[0] = 1e6;
  CHECK(adaptive_rate(r, 5.0) == 0.0);
  CHECK_THROWS_AS(adaptive_rate(r, 0.0), vids::ConfigError);
}

TEST_CASE("adaptive rate is monotone in the residual norm") {
  Gen g(4);
  for (int i = 0; i < 500; ++i) {
    const Eigen::VectorXd a = g.vector(3, -3.0, 3.0);
    const Eigen::VectorXd b = a * g.uniform(1.0, 3.0);
    CHECK(adaptive_rate(b, 2.0) <= adaptive_rate(a, 2.0));
  }
}

TEST_CASE("online updates freeze under large residuals") {
  const auto base = MlpModel::initialized(9);
  TrainingSample s;
  s.input << 0.6, 0.0, 10.0, 0.0, 0.5;
  s.target = 1.0;
  OnlineAdaptConfig cfg;

  Eigen::VectorXd small = Eigen::VectorXd::Constant(3, 0.01);
  Eigen::VectorXd large = Eigen::VectorXd::Constant(3, 5.0);
  const double quiet = (online_update(base, s, small, cfg, 1e-3).flatten() - base.flatten()).norm();
  const double loud = (online_update(base, s, large, cfg, 1e-3).flatten() - base.flatten()).norm();
  CHECK(quiet > 0.0);
  CHECK(loud < quiet / 100.0);
}

TEST_CASE("online learner skips non-finite steps and counts them") {
  OnlineLearner learner(MlpModel::initialized(1), {});
  TrainingSample s;
  s.input << 0.5, 0.0, 1.0, 0.0, std::nan("");
  const auto before = learner.model()->flatten();
  CHECK(learner.update(s, Eigen::VectorXd::Zero(3)) == 0.0);
  CHECK(learner.skipped() == 1);
  CHECK(learner.model()->flatten() == before);

  s.input[4] = 0.0;
  CHECK(learner.update(s, Eigen::VectorXd::Zero(3)) > 0.0);
  CHECK(learner.updates() == 1);

  OnlineAdaptConfig off;
  off.enabled = false;
  OnlineLearner frozen(MlpModel::initialized(1), off);
  CHECK(frozen.update(s, Eigen::VectorXd::Zero(3)) == 0.0);
  CHECK(frozen.model()->flatten() == MlpModel::initialized(1).flatten());
}

TEST_CASE("outlier removal drops samples beyond three sigma") {
  auto samples = linear_task(500, 11);
  const auto kept_clean = remove_outliers(samples);
  samples[17].target = 1e3;
  samples[42].input[1] = -1e3;
  const auto kept = remove_outliers(samples);
  CHECK(kept.size() <= kept_clean.size() - 1);
  for (const auto& s : kept) {
    CHECK(s.target < 100.0);
    CHECK(s.input[1] > -100.0);
  }
}

TEST_CASE("offline training fits a simple task and records the curve") {
  const auto samples = linear_task(2000, 12);
  TrainConfig cfg;
  cfg.epochs = 60;
  cfg.base_lr = 0.01;
  cfg.seed = 3;
  const auto r = train_offline(samples, cfg);
  REQUIRE(r.curve.size() == 61);
  CHECK(r.curve.front().epoch == 0);
  CHECK(r.curve.back().val_mse < 0.1 * r.curve.front().val_mse);
  CHECK(r.curve.back().val_mse < 1e-3);
  CHECK(r.n_train + r.n_val + r.n_outliers == samples.size());
  CHECK(r.model.seed == 3);

  // Same seed, same data: identical model.
  CHECK(train_offline(samples, cfg).model == r.model);
}

TEST_CASE("training input validation") {
  TrainConfig cfg;
  CHECK_THROWS_AS(train_offline(linear_task(100, 1), cfg), vids::RuntimeError);
  auto bad = linear_task(2000, 1);
  bad[3].target = std::nan("");
  CHECK_THROWS_AS(train_offline(bad, cfg), vids::RuntimeError);
  cfg.train_fraction = 1.5;
  CHECK_THROWS_AS(cfg.validate(), vids::ConfigError);
}

TEST_CASE("model files round trip exactly") {
  Gen g(13);
  auto m = random_model(g);
  m.seed = 77;
  std::stringstream ss;
  save_model(m, ss);
  const auto back = load_model(ss);
  CHECK(back == m);

  std::stringstream wrong("VIDSMLP 1 5x10x1 0\n");
  CHECK_THROWS_AS(load_model(wrong), vids::ConfigError);
  std::stringstream junk("hello");
  CHECK_THROWS_AS(load_model(junk), vids::ConfigError);
}

TEST_CASE("network-backed process model") {
  MlpModel m;
  m.b2 = -2.0;  // constant deceleration
  const MlpProcessModel pm(std::make_shared<const MlpModel>(m), 0.05);
  vids::est::Vec x(3), u(2);
  x << 10.0, 0.1, 0.0;
  u << 0.3, 0.0;
  const auto next = pm.predict_state(x, u);
  CHECK(next[0] == doctest::Approx(9.9));
  CHECK(next[1] == 0.1);
  CHECK(next[2] == -2.0);
  x[0] = 0.05;
  CHECK(pm.predict_state(x, u)[0] == 0.0);
  const auto y = pm.measure(next);
  CHECK(y[0] == next[2]);
  CHECK(y[1] == next[0]);
  CHECK(y[2] == next[1]);
}
