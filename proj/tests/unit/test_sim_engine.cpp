#include <chrono>
#include <cmath>

#include "doctest.h"
#include "marinex/error.hpp"
#include "marinex/scenario.hpp"
#include "marinex/sim_engine.hpp"

using namespace marinex;

namespace {

TelemetryRecord sample(long tick, Mode mode, AutoPhase phase, std::optional<double> err) {
  TelemetryRecord r;
  r.tick = tick;
  r.time = tick * 0.02;
  r.mode = mode;
  r.phase = phase;
  r.pixel_error = err;
  return r;
}

}  // namespace

TEST_SUITE("sim_engine") {

TEST_CASE("zero disturbance") {
  Rng rng(1);
  const auto d = disturbance_force(DisturbanceSpec{}, 3.7, rng);
  CHECK(d == Disturbance{});
}

TEST_CASE("wave phase examples") {
  DisturbanceSpec spec;
  spec.wave_amplitude = 30;
  spec.wave_period = 6;
  spec.wave_yaw_moment_amplitude = 5;
  Rng rng(1);
  const auto half = disturbance_force(spec, 3.0, rng);
  CHECK(std::fabs(half.force_x) < 1e-9);
  CHECK(std::fabs(half.moment) < 1e-9);
  const auto quarter = disturbance_force(spec, 1.5, rng);
  CHECK(quarter.force_x == doctest::Approx(30));
  CHECK(std::fabs(quarter.force_y) < 1e-12);
  CHECK(quarter.moment == doctest::Approx(5));
  spec.wave_direction = kPi / 2;
  const auto beam = disturbance_force(spec, 1.5, rng);
  CHECK(std::fabs(beam.force_x) < 1e-9);
  CHECK(beam.force_y == doctest::Approx(30));
}

TEST_CASE("gust statistics") {
  DisturbanceSpec spec;
  spec.gust_sigma = 2.0;
  Rng rng(5);
  double sum = 0, sum_sq = 0;
  const int n = 20000;
  for (int k = 0; k < n; ++k) {
    const double fx = disturbance_force(spec, 0, rng).force_x;
    sum += fx;
    sum_sq += fx * fx;
  }
  CHECK(std::fabs(sum / n) < 0.05);
  CHECK(std::sqrt(sum_sq / n) == doctest::Approx(2.0).epsilon(0.03));
}

TEST_CASE("calm-pool intercept") {
  const auto result = run(load_preset("calm-pool"));
  CHECK(result.metrics.success);
  REQUIRE(result.metrics.time_to_intercept);
  CHECK(*result.metrics.time_to_intercept < 90.0);
  const auto& last = result.telemetry.back();
  CHECK(last.phase == AutoPhase::Hold);
  CHECK(last.thrust == ThrustCommand{0, 0});
  REQUIRE(last.depth);
  CHECK(*last.depth < 3.0);
  CHECK(last.event == "phase:TRACK->HOLD");
}

TEST_CASE("zero duration gives one record") {
  Scenario s;
  s.duration = 0;
  s.target.x = 30;
  const auto result = run(s);
  CHECK(result.telemetry.size() == 1);
  CHECK_FALSE(result.metrics.success);
}

TEST_CASE("records are tick-indexed and time is tick * dt") {
  Scenario s;
  s.duration = 2.0;
  s.end_on_hold = false;
  s.target.x = 20;
  const auto t = run(s).telemetry;
  REQUIRE(t.size() == 101);
  for (std::size_t k = 0; k < t.size(); ++k) {
    CHECK(t[k].tick == static_cast<long>(k));
    CHECK(t[k].time == static_cast<double>(k) * 0.02);
  }
}

TEST_CASE("same seed, same telemetry") {
  Scenario s = load_preset("large-wave");
  s.duration = 20;
  const auto a = run(s).telemetry;
  const auto b = run(s).telemetry;
  CHECK(a == b);
  s.seed += 1;
  CHECK(run(s).telemetry != a);
}

TEST_CASE("a teleop run ignores the detector") {
  Scenario s = load_preset("calm-pool");
  s.initial_mode = Mode::Teleop;
  s.duration = 5;
  const auto t = run(s).telemetry;
  for (const auto& r : t) {
    CHECK(r.thrust == ThrustCommand{0, 0});
    CHECK(r.state.x == 0.0);
  }
}

TEST_CASE("operator inputs are recorded as events on the next tick") {
  Scenario s = load_preset("calm-pool");
  s.initial_mode = Mode::Teleop;
  Simulation sim(s);
  sim.tick();
  sim.set_mode(Mode::Auto);
  sim.set_mode(Mode::Auto);
  sim.set_gains(PidGains{0.2, 0.0, 0.0});
  auto rec = sim.tick();
  CHECK(rec.event.rfind("mode:TELEOP->AUTO;gains", 0) == 0);
  CHECK(rec.mode == Mode::Auto);
  sim.reset_navigator();
  rec = sim.tick();
  CHECK(rec.event.rfind("reset", 0) == 0);
  CHECK(sim.tick().event.empty());
  CHECK_THROWS_AS(sim.set_gains(PidGains{-1, 0, 0}), ValidationError);
}

TEST_CASE("teleop thrust takes effect on the next tick") {
  Scenario s;
  s.initial_mode = Mode::Teleop;
  Simulation sim(s);
  CHECK(sim.tick().thrust == ThrustCommand{0, 0});
  sim.set_teleop({10, 12});
  CHECK(sim.tick().thrust == ThrustCommand{10, 12});
  sim.set_teleop({99, 12});
  CHECK(sim.tick().thrust == ThrustCommand{49.52, 12});
}

TEST_CASE("the steering sign turns the bow toward the target") {
  for (double side : {-1.0, 1.0}) {
    Scenario s;
    s.target.x = 25;
    s.target.y = 8 * side;
    s.duration = 4;
    const auto t = run(s).telemetry;
    REQUIRE(t.back().pixel_error);
    CHECK(side * t.back().state.heading > 0.05);
    CHECK(std::fabs(*t.back().pixel_error) < std::fabs(*t[1].pixel_error));
  }
}

TEST_CASE("range decreases monotonically on calm water") {
  const auto t = run(load_preset("calm-pool")).telemetry;
  for (std::size_t k = 1; k < t.size(); ++k) CHECK(t[k].range <= t[k - 1].range + 1e-9);
}

TEST_CASE("tick budget") {
  Scenario s = load_preset("large-wave");
  Simulation sim(s);
  const auto t0 = std::chrono::steady_clock::now();
  long n = 0;
  while (!sim.finished() && n < 2000) {
    sim.tick();
    ++n;
  }
  const double per_tick = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count() / n;
  CHECK(per_tick < 1e-3);
}

TEST_CASE("ticking a finished simulation throws") {
  Scenario s;
  s.duration = 0;
  Simulation sim(s);
  sim.tick();
  CHECK(sim.finished());
  CHECK_THROWS_AS(sim.tick(), std::logic_error);
}

TEST_CASE("invalid scenarios are rejected before running") {
  Scenario s;
  s.dt = 0;
  CHECK_THROWS_AS(run(s), ValidationError);
  s.dt = -0.02;
  CHECK_THROWS_AS(Simulation{s}, ValidationError);
}

TEST_CASE("metrics hand fixture") {
  std::vector<TelemetryRecord> t = {
      sample(0, Mode::Auto, AutoPhase::Track, 40.0),
      sample(1, Mode::Auto, AutoPhase::Track, -12.0),
      sample(2, Mode::Auto, AutoPhase::Track, 3.0),
      sample(3, Mode::Auto, AutoPhase::Hold, 1.0),
  };
  for (std::size_t k = 0; k < t.size(); ++k) t[k].state.x = 0.5 * k;
  const Metrics m = compute_metrics(t);
  CHECK(m.success);
  REQUIRE(m.time_to_intercept);
  CHECK(*m.time_to_intercept == doctest::Approx(0.06));
  CHECK(m.max_overshoot == 12.0);
  CHECK(m.path_length == doctest::Approx(1.5));
  CHECK_FALSE(m.settling_time);
}

TEST_CASE("metrics settling and rms") {
  std::vector<TelemetryRecord> t;
  for (long k = 0; k <= 400; ++k) {
    t.push_back(sample(k, Mode::Auto, AutoPhase::Track, k < 50 ? 100.0 : (k % 2 ? 2.0 : -2.0)));
  }
  Metrics m = compute_metrics(t);
  CHECK_FALSE(m.success);
  REQUIRE(m.settling_time);
  CHECK(*m.settling_time == doctest::Approx(1.0));
  CHECK(*m.rms_pixel_error_after_settling == doctest::Approx(2.0));
  CHECK(m.max_overshoot == 2.0);

  for (auto& r : t) r.pixel_error = 0.0;
  m = compute_metrics(t);
  CHECK(*m.rms_pixel_error_after_settling == 0.0);
  CHECK(*m.settling_time == 0.0);
}

TEST_CASE("teleop samples do not count toward steering metrics") {
  std::vector<TelemetryRecord> t;
  for (long k = 0; k <= 300; ++k) t.push_back(sample(k, Mode::Teleop, AutoPhase::Search, 0.0));
  const Metrics m = compute_metrics(t);
  CHECK_FALSE(m.settling_time);
  CHECK_FALSE(m.success);
  CHECK_THROWS_AS(compute_metrics({}), ValidationError);
}

}
