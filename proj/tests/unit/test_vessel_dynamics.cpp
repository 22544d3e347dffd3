#include <array>
#include <cmath>

#include "doctest.h"
#include "marinex/error.hpp"
#include "marinex/random.hpp"
#include "marinex/vessel_dynamics.hpp"

using namespace marinex;

namespace {

// Independent forward-Euler integration of the same equations of motion at a
// much finer step.
VesselState euler_reference(VesselState s, ThrustCommand cmd, Disturbance d, double duration,
                            const VesselParams& p, double h = 1e-5) {
  const double m = p.mass + p.payload;
  const double fs = cmd.left + cmd.right;
  const double mz = (cmd.right - cmd.left) * p.hull_separation * 0.5;
  const long n = std::lround(duration / h);
  for (long k = 0; k < n; ++k) {
    const double c = std::cos(s.heading), sn = std::sin(s.heading);
    const double du = (fs + d.force_x * c + d.force_y * sn - p.drag_surge * s.surge * std::fabs(s.surge)) / m +
                      s.sway * s.yaw_rate;
    const double dv = (-d.force_x * sn + d.force_y * c - p.drag_sway * s.sway * std::fabs(s.sway)) / m -
                      s.surge * s.yaw_rate;
    const double dr = (mz + d.moment - p.drag_yaw * s.yaw_rate * std::fabs(s.yaw_rate)) / p.yaw_inertia;
    s.x += h * (s.surge * c - s.sway * sn);
    s.y += h * (s.surge * sn + s.sway * c);
    s.heading += h * s.yaw_rate;
    s.surge += h * du;
    s.sway += h * dv;
    s.yaw_rate += h * dr;
  }
  s.heading = std::atan2(std::sin(s.heading), std::cos(s.heading));
  return s;
}

VesselState integrate(VesselState s, ThrustCommand cmd, Disturbance d, double duration, double dt,
                      const VesselParams& p) {
  const long n = std::lround(duration / dt);
  for (long k = 0; k < n; ++k) s = step(s, cmd, d, dt, p);
  return s;
}

}  // namespace

TEST_SUITE("vessel_dynamics") {

TEST_CASE("clamp_thrust examples") {
  VesselParams p;
  p.max_thrust_forward = 49.5;
  CHECK(clamp_thrust({0, 0}, p) == ThrustCommand{0, 0});
  CHECK(clamp_thrust({80, -80}, p) == ThrustCommand{49.5, -40});
  CHECK(clamp_thrust({49.5, 49.5}, p) == ThrustCommand{49.5, 49.5});
}

TEST_CASE("clamp_thrust is idempotent and bounded") {
  VesselParams p;
  Rng rng(7);
  for (int i = 0; i < 1000; ++i) {
    const ThrustCommand raw{rng.gaussian(60.0), rng.gaussian(60.0)};
    const ThrustCommand once = clamp_thrust(raw, p);
    CHECK(clamp_thrust(once, p) == once);
    CHECK(once.left >= -p.max_thrust_reverse);
    CHECK(once.left <= p.max_thrust_forward);
    CHECK(once.right >= -p.max_thrust_reverse);
    CHECK(once.right <= p.max_thrust_forward);
  }
}

TEST_CASE("thrust_to_wrench examples") {
  VesselParams p;
  const double full = kgf_to_newton(5.05);
  CHECK(full == doctest::Approx(49.52).epsilon(1e-4));
  CHECK(thrust_to_wrench({12, 12}, p).yaw_moment == 0.0);
  CHECK(thrust_to_wrench({0, 49.52}, p).yaw_moment == doctest::Approx(14.856).epsilon(1e-12));
  CHECK(thrust_to_wrench({49.52, 49.52}, p).surge_force == doctest::Approx(99.04).epsilon(1e-12));
  CHECK(thrust_to_wrench({full, full}, p).surge_force == doctest::Approx(2 * 5.05 * 9.80665));
}

TEST_CASE("steady_state_speed") {
  VesselParams p;
  // 2 * 49.52 = 23.39 * v^2
  CHECK(steady_state_speed(p) == doctest::Approx(2.058).epsilon(5e-4));
  CHECK(steady_state_speed(p) / kKnot == doctest::Approx(4.0).epsilon(1e-3));
  VesselParams doubled = p;
  doubled.drag_surge *= 2.0;
  CHECK(steady_state_speed(doubled) == doctest::Approx(steady_state_speed(p) / std::sqrt(2.0)));
  VesselParams off = p;
  off.max_thrust_forward = 0.0;
  CHECK(steady_state_speed(off) == 0.0);
  VesselParams bad = p;
  bad.drag_surge = 0.0;
  CHECK_THROWS_AS(steady_state_speed(bad), ValidationError);
  bad.drag_surge = -1.0;
  CHECK_THROWS_AS(steady_state_speed(bad), ValidationError);
}

TEST_CASE("params validation names the field") {
  VesselParams p;
  p.yaw_inertia = 0.0;
  try {
    validate(p);
    FAIL("expected ValidationError");
  } catch (const ValidationError& e) {
    CHECK(e.field() == "yaw_inertia");
  }
  p = {};
  p.payload = -1;
  CHECK_THROWS_AS(validate(p), ValidationError);
  p.payload = 20;  // carries up to 20 kg
  CHECK_NOTHROW(validate(p));
  CHECK(p.total_mass() == 45.0);
}

TEST_CASE("wrap_angle range") {
  CHECK(wrap_angle(kPi) == doctest::Approx(kPi));
  CHECK(wrap_angle(-kPi) == doctest::Approx(kPi));
  CHECK(wrap_angle(3 * kPi / 2) == doctest::Approx(-kPi / 2));
  Rng rng(3);
  for (int i = 0; i < 1000; ++i) {
    const double a = rng.gaussian(50.0);
    const double w = wrap_angle(a);
    CHECK(w > -kPi);
    CHECK(w <= kPi);
    CHECK(std::cos(w) == doctest::Approx(std::cos(a)).epsilon(1e-9));
    CHECK(std::sin(w) == doctest::Approx(std::sin(a)).epsilon(1e-9));
  }
}

TEST_CASE("step at equilibrium is the identity") {
  VesselParams p;
  const VesselState s{3.0, -2.0, 0.7, 0, 0, 0};
  CHECK(step(s, {0, 0}, {}, 0.02, p) == s);
}

TEST_CASE("step rejects bad input") {
  VesselParams p;
  VesselState s;
  CHECK_THROWS_AS(step(s, {0, 0}, {}, 0.0, p), ValidationError);
  CHECK_THROWS_AS(step(s, {0, 0}, {}, -0.01, p), ValidationError);
  CHECK_THROWS_AS(step(s, {0, 0}, {}, 0.11, p), ValidationError);
  CHECK_NOTHROW(step(s, {0, 0}, {}, 0.1, p));
  s.surge = NAN;
  CHECK_THROWS_AS(step(s, {0, 0}, {}, 0.02, p), ValidationError);
  s.surge = 0;
  CHECK_THROWS_AS(step(s, {INFINITY, 0}, {}, 0.02, p), ValidationError);
  CHECK_THROWS_AS(step(s, {0, 0}, {0, NAN, 0}, 0.02, p), ValidationError);
}

TEST_CASE("full symmetric thrust converges monotonically to terminal speed") {
  VesselParams p;
  const double full = p.max_thrust_forward;
  VesselState s;
  double prev = 0.0;
  for (int k = 0; k < 6000; ++k) {
    s = step(s, {full, full}, {}, 0.02, p);
    CHECK(s.surge >= prev);
    CHECK(s.heading == 0.0);
    CHECK(s.yaw_rate == 0.0);
    prev = s.surge;
  }
  const double v = steady_state_speed(p);
  CHECK(std::fabs(s.surge - v) < 0.01 * v);
  CHECK(s.surge <= v);
}

TEST_CASE("RK4 agrees with a fine Euler reference") {
  VesselParams p;
  const VesselState s0{1.0, 2.0, 0.3, 0.5, 0.1, 0.05};
  const ThrustCommand cmd{10.0, 30.0};
  const Disturbance d{4.0, -3.0, 0.5};
  const VesselState a = integrate(s0, cmd, d, 10.0, 0.02, p);
  const VesselState b = euler_reference(s0, cmd, d, 10.0, p);
  CHECK(a.x == doctest::Approx(b.x).epsilon(1e-3));
  CHECK(a.y == doctest::Approx(b.y).epsilon(1e-3));
  CHECK(std::fabs(wrap_angle(a.heading - b.heading)) < 1e-3);
  CHECK(a.surge == doctest::Approx(b.surge).epsilon(1e-3));
  CHECK(a.yaw_rate == doctest::Approx(b.yaw_rate).epsilon(1e-3));
}

TEST_CASE("halving dt moves the 60 s endpoint by less than 1 mm") {
  VesselParams p;
  const ThrustCommand cmd{25.0, 35.0};
  const VesselState a = integrate({}, cmd, {}, 60.0, 0.02, p);
  const VesselState b = integrate({}, cmd, {}, 60.0, 0.01, p);
  CHECK(std::hypot(a.x - b.x, a.y - b.y) < 1e-3);
}

TEST_CASE("mirrored heading gives mirrored trajectory") {
  VesselParams p;
  VesselState a{0, 0, 0.4, 0, 0, 0};
  VesselState b{0, 0, -0.4, 0, 0, 0};
  for (int k = 0; k < 1000; ++k) {
    a = step(a, {30, 30}, {}, 0.02, p);
    b = step(b, {30, 30}, {}, 0.02, p);
  }
  CHECK(a.x == doctest::Approx(b.x).epsilon(1e-12));
  CHECK(a.y == doctest::Approx(-b.y).epsilon(1e-12));
  CHECK(a.heading == doctest::Approx(-b.heading).epsilon(1e-12));
}

TEST_CASE("differential thrust mirrored gives mirrored turn") {
  VesselParams p;
  VesselState a, b;
  for (int k = 0; k < 500; ++k) {
    a = step(a, {10, 30}, {}, 0.02, p);
    b = step(b, {30, 10}, {}, 0.02, p);
  }
  CHECK(a.y == doctest::Approx(-b.y).epsilon(1e-12));
  CHECK(a.heading == doctest::Approx(-b.heading).epsilon(1e-12));
  CHECK(a.heading > 0.0);  // more thrust on the right turns to port (CCW)
}

TEST_CASE("kinetic energy never increases without thrust") {
  VesselParams p;
  Rng rng(11);
  for (int trial = 0; trial < 200; ++trial) {
    VesselState s{0, 0, rng.uniform() * 6 - 3, rng.gaussian(1.5), rng.gaussian(0.5), rng.gaussian(0.8)};
    double e = kinetic_energy(s, p);
    for (int k = 0; k < 50; ++k) {
      s = step(s, {0, 0}, {}, 0.02, p);
      const double next = kinetic_energy(s, p);
      CHECK(next <= e * (1 + 1e-12) + 1e-15);
      e = next;
    }
  }
}

TEST_CASE("symmetric thrust keeps yaw rate at zero") {
  VesselParams p;
  Rng rng(5);
  for (int trial = 0; trial < 20; ++trial) {
    const double t = rng.uniform() * 49.52;
    VesselState s{0, 0, rng.uniform() * 6 - 3, 0, 0, 0};
    for (int k = 0; k < 500; ++k) {
      s = step(s, {t, t}, {}, 0.02, p);
      CHECK(std::fabs(s.yaw_rate) < 1e-12);
    }
  }
}

TEST_CASE("step is deterministic and keeps heading wrapped") {
  VesselParams p;
  VesselState a{0, 0, 3.1, 1.0, 0, 2.0};
  VesselState b = a;
  for (int k = 0; k < 2000; ++k) {
    a = step(a, {-10, 40}, {1, 2, 3}, 0.02, p);
    b = step(b, {-10, 40}, {1, 2, 3}, 0.02, p);
    CHECK(a == b);
    CHECK(a.heading > -kPi);
    CHECK(a.heading <= kPi);
  }
}

TEST_CASE("payload slows the acceleration, not the terminal speed") {
  VesselParams light, heavy;
  heavy.payload = 20.0;
  VesselState a, b;
  for (int k = 0; k < 100; ++k) {
    a = step(a, {49.52, 49.52}, {}, 0.02, light);
    b = step(b, {49.52, 49.52}, {}, 0.02, heavy);
  }
  CHECK(b.surge < a.surge);
  for (int k = 0; k < 10000; ++k) b = step(b, {49.52, 49.52}, {}, 0.02, heavy);
  CHECK(b.surge == doctest::Approx(steady_state_speed(heavy)).epsilon(1e-3));
}

}
