#include "marinex/vessel_dynamics.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <string>

#include "marinex/error.hpp"

namespace marinex {
namespace {

void require_positive(double value, const char* field) {
  if (!std::isfinite(value) || value <= 0.0) {
    throw ValidationError("must be finite and > 0", field);
  }
}

void require_finite(double value, const char* field) {
  if (!std::isfinite(value)) throw ValidationError("must be finite", field);
}

// [x, y, heading, surge, sway, yaw_rate]
using Vec6 = std::array<double, 6>;

Vec6 derivative(const Vec6& s, const Wrench& thrust, const Disturbance& dist,
                const VesselParams& p) {
  const double psi = s[2];
  const double u = s[3];
  const double v = s[4];
  const double r = s[5];
  const double c = std::cos(psi);
  const double sn = std::sin(psi);
  const double m = p.total_mass();

  // World-frame disturbance rotated into the body frame.
  const double dist_surge = dist.force_x * c + dist.force_y * sn;
  const double dist_sway = -dist.force_x * sn + dist.force_y * c;

  Vec6 d{};
  d[0] = u * c - v * sn;
  d[1] = u * sn + v * c;
  d[2] = r;
  d[3] = (thrust.surge_force + dist_surge - p.drag_surge * u * std::abs(u)) / m + v * r;
  d[4] = (dist_sway - p.drag_sway * v * std::abs(v)) / m - u * r;
  d[5] = (thrust.yaw_moment + dist.moment - p.drag_yaw * r * std::abs(r)) / p.yaw_inertia;
  return d;
}

Vec6 axpy(const Vec6& s, const Vec6& d, double h) {
  Vec6 out;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = s[i] + h * d[i];
  return out;
}

}  // namespace

void validate(const VesselParams& p) {
  require_positive(p.mass, "mass");
  require_positive(p.yaw_inertia, "yaw_inertia");
  require_positive(p.hull_separation, "hull_separation");
  require_positive(p.drag_surge, "drag_surge");
  require_positive(p.drag_sway, "drag_sway");
  require_positive(p.drag_yaw, "drag_yaw");
  require_positive(p.max_thrust_forward, "max_thrust_forward");
  require_positive(p.max_thrust_reverse, "max_thrust_reverse");
  if (!std::isfinite(p.payload) || p.payload < 0.0) {
    throw ValidationError("must be finite and >= 0", "payload");
  }
}

void validate(const VesselState& s) {
  require_finite(s.x, "x");
  require_finite(s.y, "y");
  require_finite(s.heading, "heading");
  require_finite(s.surge, "surge");
  require_finite(s.sway, "sway");
  require_finite(s.yaw_rate, "yaw_rate");
}

double wrap_angle(double radians) {
  double a = std::remainder(radians, 2.0 * kPi);
  if (a <= -kPi) a += 2.0 * kPi;
  return a;
}

ThrustCommand clamp_thrust(const ThrustCommand& cmd, const VesselParams& params) {
  const double lo = -params.max_thrust_reverse;
  const double hi = params.max_thrust_forward;
  return {std::clamp(cmd.left, lo, hi), std::clamp(cmd.right, lo, hi)};
}

Wrench thrust_to_wrench(const ThrustCommand& cmd, const VesselParams& params) {
  return {cmd.left + cmd.right, (cmd.right - cmd.left) * params.hull_separation / 2.0};
}

VesselState step(const VesselState& state, const ThrustCommand& cmd,
                 const Disturbance& disturbance, double dt,
                 const VesselParams& params) {
  if (!std::isfinite(dt) || dt <= 0.0 || dt > kMaxStep) {
    throw ValidationError("time step must satisfy 0 < dt <= 0.1 s", "dt");
  }
  validate(state);
  if (!std::isfinite(cmd.left) || !std::isfinite(cmd.right)) {
    throw ValidationError("thrust must be finite", "thrust");
  }
  if (!std::isfinite(disturbance.force_x) || !std::isfinite(disturbance.force_y) ||
      !std::isfinite(disturbance.moment)) {
    throw ValidationError("disturbance must be finite", "disturbance");
  }

  const Wrench thrust = thrust_to_wrench(cmd, params);
  const Vec6 s0{state.x, state.y, state.heading, state.surge, state.sway, state.yaw_rate};

  const Vec6 k1 = derivative(s0, thrust, disturbance, params);
  const Vec6 k2 = derivative(axpy(s0, k1, dt / 2.0), thrust, disturbance, params);
  const Vec6 k3 = derivative(axpy(s0, k2, dt / 2.0), thrust, disturbance, params);
  const Vec6 k4 = derivative(axpy(s0, k3, dt), thrust, disturbance, params);

  Vec6 s1;
  for (std::size_t i = 0; i < s1.size(); ++i) {
    s1[i] = s0[i] + dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
  }
  return {s1[0], s1[1], wrap_angle(s1[2]), s1[3], s1[4], s1[5]};
}

double steady_state_speed(const VesselParams& params) {
  if (!(params.drag_surge > 0.0) || !std::isfinite(params.drag_surge)) {
    throw ValidationError("must be finite and > 0", "drag_surge");
  }
  if (!std::isfinite(params.max_thrust_forward) || params.max_thrust_forward < 0.0) {
    throw ValidationError("must be finite and >= 0", "max_thrust_forward");
  }
  return std::sqrt(2.0 * params.max_thrust_forward / params.drag_surge);
}

double kinetic_energy(const VesselState& s, const VesselParams& p) {
  return 0.5 * (p.total_mass() * (s.surge * s.surge + s.sway * s.sway) +
                p.yaw_inertia * s.yaw_rate * s.yaw_rate);
}

}  // namespace marinex
