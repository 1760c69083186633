#include <cmath>
#include <random>

#include <doctest.h>

#include "gen.hpp"
#include "vids/errors.hpp"
#include "vids/preprocess.hpp"
#include "vids/vehicle_sim.hpp"

using namespace vids::sim;

TEST_CASE("unify_control endpoints and range") {
  CHECK(vids::unify_control(1.0, 0.0) == 1.0);
  CHECK(vids::unify_control(0.0, 1.0) == 0.0);
  CHECK(vids::unify_control(0.0, 0.0) == 0.5);
  CHECK_THROWS_AS(vids::unify_control(1.2, 0.0), vids::ConfigError);
  CHECK_THROWS_AS(vids::unify_control(0.0, -0.1), vids::ConfigError);
}

TEST_CASE("calibrated resistance matches the reference forces at the calibration speed") {
  const auto p = VehicleParams::calibrated(10.0, 68.9, 271.6);
  const auto r = travel_resistance(p, 10.0);
  CHECK(r.air_n == doctest::Approx(68.9).epsilon(1e-12));
  CHECK(r.roll_n == doctest::Approx(271.6).epsilon(1e-12));
  CHECK(r.grade_n == 0.0);

  const VehicleParams defaults;
  CHECK(travel_resistance(defaults, 10.0).total() == doctest::Approx(340.5).epsilon(1e-12));
}

TEST_CASE("resistance decomposes into its three parts") {
  vids::testing::Gen g(11);
  for (int i = 0; i < 200; ++i) {
    VehicleParams p;
    p.mass_kg = g.uniform(800.0, 3000.0);
    p.air_drag_coeff = g.uniform(0.0, 2.0);
    p.roll_coeff = g.uniform(0.0, 50.0);
    p.grade_angle_rad = g.uniform(-0.2, 0.2);
    const double v = g.uniform(0.0, 40.0);
    const auto r = travel_resistance(p, v);
    const double air = p.air_drag_coeff * v * v;
    const double roll = p.roll_coeff * v;
    const double grade = p.mass_kg * kGravity * std::sin(p.grade_angle_rad);
    const double expected = air + roll + grade;
    CHECK(std::abs(r.total() - expected) <= 1e-12 * std::max(1.0, std::abs(expected)));
  }
}

TEST_CASE("full brake never increases speed on flat ground") {
  vids::testing::Gen g(5);
  const VehicleParams p;
  for (int trial = 0; trial < 20; ++trial) {
    VehicleState x;
    x.speed_mps = g.uniform(0.0, 35.0);
    const auto brake = ControlCommand::from_unified(0.0, g.uniform(-1.0, 1.0));
    for (int k = 0; k < 400; ++k) {
      const auto next = step(p, x, brake);
      REQUIRE(next.speed_mps <= x.speed_mps);
      REQUIRE(next.speed_mps >= 0.0);
      x = next;
    }
    CHECK(x.speed_mps == 0.0);
  }
}

TEST_CASE("equilibrium control holds speed") {
  const VehicleParams p;
  for (double v : {0.5, 5.0, 10.0, 20.0, 30.0}) {
    const double u = equilibrium_control(p, v);
    REQUIRE(u >= 0.0);
    REQUIRE(u <= 1.0);
    VehicleState x;
    x.speed_mps = v;
    const auto next = step(p, x, ControlCommand::from_unified(u));
    CHECK(std::abs(next.accel_mps2) < 1e-9);
    CHECK(std::abs(next.speed_mps - v) < 1e-9 * p.dt_s);
  }
}

TEST_CASE("clamped stop reports the realised acceleration") {
  const VehicleParams p;
  VehicleState x;
  x.speed_mps = 0.05;
  const auto next = step(p, x, ControlCommand::from_unified(0.0));
  CHECK(next.speed_mps == 0.0);
  CHECK(next.accel_mps2 == doctest::Approx(-0.05 / p.dt_s));
}

TEST_CASE("measure is exact at zero noise and reproducible with a seed") {
  VehicleState s;
  s.accel_mps2 = 1.2;
  s.speed_mps = 5.0;
  s.yaw_rate_rps = 0.1;
  std::mt19937_64 rng(1);
  const auto m = measure(s, {0.0, 0.0, 0.0}, rng);
  CHECK(m.accel_mps2 == 1.2);
  CHECK(m.speed_mps == 5.0);
  CHECK(m.yaw_rate_rps == 0.1);

  std::mt19937_64 a(42), b(42);
  for (int i = 0; i < 50; ++i) {
    const auto ma = measure(s, {0.1, 0.1, 0.01}, a);
    const auto mb = measure(s, {0.1, 0.1, 0.01}, b);
    CHECK(ma.vector() == mb.vector());
  }
}

TEST_CASE("measurement noise has the configured spread") {
  VehicleState s;
  std::mt19937_64 rng(99);
  const int n = 10000;
  double sum = 0.0, sq = 0.0;
  for (int i = 0; i < n; ++i) {
    const double a = measure(s, {0.1, 0.0, 0.0}, rng).accel_mps2;
    sum += a;
    sq += a * a;
  }
  const double mean = sum / n;
  const double sd = std::sqrt(sq / n - mean * mean);
  CHECK(std::abs(sd - 0.1) < 0.005);
}

TEST_CASE("scenarios are deterministic and within command bounds") {
  for (auto style : {DrivingStyle::cruise, DrivingStyle::stop_and_go, DrivingStyle::aggressive}) {
    const auto a = generate_scenario(7, 60.0, style);
    const auto b = generate_scenario(7, 60.0, style);
    REQUIRE(a.keyframes.size() == b.keyframes.size());
    for (std::size_t i = 0; i < a.keyframes.size(); ++i) {
      CHECK(a.keyframes[i].time_s == b.keyframes[i].time_s);
      CHECK(a.keyframes[i].cmd.vector() == b.keyframes[i].cmd.vector());
    }
    for (double t = 0.0; t < 60.0; t += 0.05) {
      const auto c = a.command_at(t);
      REQUIRE_NOTHROW(c.validate());
      CHECK(!(c.throttle > 0.0 && c.brake > 0.0));
    }
  }
}

TEST_CASE("cruise throttle varies less than aggressive throttle") {
  auto variance = [](const Scenario& s) {
    double sum = 0.0, sq = 0.0;
    int n = 0;
    for (double t = 0.0; t < s.duration_s; t += 0.05, ++n) {
      const double th = s.command_at(t).throttle;
      sum += th;
      sq += th * th;
    }
    return sq / n - (sum / n) * (sum / n);
  };
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    CHECK(variance(generate_scenario(seed, 60.0, DrivingStyle::cruise)) <
          variance(generate_scenario(seed, 60.0, DrivingStyle::aggressive)));
  }
}

TEST_CASE("run_log record count and labels") {
  const VehicleParams p;
  const auto scenario = generate_scenario(3, 20.0, DrivingStyle::stop_and_go);
  const auto log = run_log(p, scenario);
  CHECK(log.size() == 400);
  for (std::size_t k = 0; k + 1 < log.size(); ++k) {
    CHECK(log[k].accel_label == log[k + 1].state.accel_mps2);
  }

  auto tiny = scenario;
  tiny.duration_s = 0.01;
  CHECK_THROWS_AS(run_log(p, tiny), vids::ConfigError);
}

TEST_CASE("replaying logged commands reproduces logged states") {
  const VehicleParams p;
  auto scenario = generate_scenario(8, 30.0, DrivingStyle::aggressive);
  scenario.noise_std = {0.0, 0.0, 0.0};
  const auto log = run_log(p, scenario);
  VehicleState x;
  for (const auto& rec : log) {
    CHECK(rec.state.speed_mps == x.speed_mps);
    CHECK(rec.state.yaw_rate_rps == x.yaw_rate_rps);
    CHECK(rec.state.accel_mps2 == x.accel_mps2);
    CHECK(rec.meas.accel_mps2 == x.accel_mps2);
    x = step(p, x, rec.cmd);
  }
}

TEST_CASE("identical inputs give bit-identical logs") {
  const VehicleParams p;
  const auto scenario = generate_scenario(21, 30.0, DrivingStyle::cruise);
  const auto a = run_log(p, scenario);
  const auto b = run_log(p, scenario);
  REQUIRE(a.size() == b.size());
  for (std::size_t k = 0; k < a.size(); ++k) {
    CHECK(a[k].meas.vector() == b[k].meas.vector());
    CHECK(a[k].accel_label == b[k].accel_label);
  }
}

TEST_CASE("invalid parameters are rejected") {
  VehicleParams p;
  p.mass_kg = 0.0;
  CHECK_THROWS_AS(p.validate(), vids::ConfigError);
  CHECK_THROWS_AS(parse_driving_style("sporty"), vids::ConfigError);
  ControlCommand c{1.5, 0.0, 0.0};
  CHECK_THROWS_AS(c.validate(), vids::ConfigError);
}
