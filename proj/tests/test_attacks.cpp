#include <doctest.h>

#include "gen.hpp"
#include "vids/attacks.hpp"
#include "vids/errors.hpp"

using namespace vids::attacks;

TEST_CASE("PWM schedule phases") {
  const AttackSchedule s;
  CHECK_FALSE(is_active(s, 19.9));
  CHECK(is_active(s, 20.0));
  CHECK(is_active(s, 20.9));
  CHECK_FALSE(is_active(s, 21.1));
  CHECK(is_active(s, 22.5));

  AttackSchedule full = s;
  full.pwm_duty = 1.0;
  full.end_s = 40.0;
  for (double t = 20.0; t < 40.0; t += 0.05) CHECK(is_active(full, t));
  CHECK_FALSE(is_active(full, 40.0));

  AttackSchedule none = s;
  none.pwm_duty = 0.0;
  for (double t = 0.0; t < 60.0; t += 0.05) CHECK_FALSE(is_active(none, t));
}

TEST_CASE("schedule is periodic inside the active interval") {
  vids::testing::Gen g(3);
  for (int i = 0; i < 500; ++i) {
    AttackSchedule s;
    s.start_s = g.uniform(0.0, 10.0);
    s.pwm_period_s = g.uniform(0.5, 4.0);
    s.pwm_duty = g.uniform(0.1, 0.9);
    const double t = s.start_s + g.uniform(0.0, 20.0);
    const double phase = std::fmod(t - s.start_s, s.pwm_period_s) / s.pwm_period_s;
    // Skip points within rounding distance of a phase edge.
    if (std::abs(phase - s.pwm_duty) < 1e-6 || phase < 1e-6 || phase > 1.0 - 1e-6) continue;
    CHECK(is_active(s, t) == is_active(s, t + s.pwm_period_s));
  }
}

TEST_CASE("actuator masking") {
  const AttackTargets one({1}, {}, 1, 3);
  CHECK(attack_actuator(Eigen::VectorXd::Constant(1, 0.7), one, true)[0] == 0.0);

  const AttackTargets second({2}, {}, 2, 3);
  Eigen::VectorXd u(2);
  u << 0.7, 0.2;
  const auto out = attack_actuator(u, second, true);
  CHECK(out[0] == 0.7);
  CHECK(out[1] == 0.0);
  CHECK(attack_actuator(u, second, false) == u);
}

TEST_CASE("sensor masking") {
  Eigen::VectorXd y(3);
  y << 1.2, 5.0, 0.1;
  const auto first = attack_sensor(y, AttackTargets({}, {1}, 3, 3), true);
  CHECK(first[0] == 0.0);
  CHECK(first[1] == 5.0);
  CHECK(first[2] == 0.1);
  CHECK(attack_sensor(y, AttackTargets({}, {1, 2, 3}, 3, 3), true).isZero());
  CHECK(attack_sensor(y, AttackTargets({}, {1, 2, 3}, 3, 3), false) == y);
}

TEST_CASE("masking is idempotent and leaves other channels untouched") {
  vids::testing::Gen g(17);
  for (int i = 0; i < 300; ++i) {
    std::vector<int> idx;
    for (int j = 1; j <= 3; ++j)
      if (g.coin()) idx.push_back(j);
    const AttackTargets targets(idx, idx, 3, 3);
    const Eigen::VectorXd y = g.vector(3, -10.0, 10.0);
    const auto once = attack_sensor(y, targets, true);
    CHECK(attack_sensor(once, targets, true) == once);
    for (int j = 0; j < 3; ++j) {
      const bool hit = std::find(idx.begin(), idx.end(), j + 1) != idx.end();
      CHECK(once[j] == (hit ? 0.0 : y[j]));
    }
  }
}

TEST_CASE("target parsing and validation") {
  const auto t = AttackTargets::parse("actuator:[2,1] sensor:[]", 3, 3);
  CHECK(t.actuator_indices() == std::vector<int>{1, 2});
  CHECK(t.sensor_indices().empty());
  CHECK(AttackTargets::parse(t.to_string(), 3, 3).actuator_indices() == t.actuator_indices());

  CHECK_THROWS_AS(AttackTargets({4}, {}, 3, 3), vids::ConfigError);
  CHECK_THROWS_AS(AttackTargets({}, {0}, 3, 3), vids::ConfigError);
  CHECK_THROWS_AS(AttackTargets::parse("actuators=1", 3, 3), vids::ConfigError);
  CHECK_THROWS_AS(attack_sensor(Eigen::VectorXd::Zero(2), AttackTargets({}, {1}, 3, 3), true),
                  vids::ConfigError);
}
