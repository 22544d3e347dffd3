#include "marinex/servo_controller.hpp"

#include <algorithm>
#include <cmath>
#include <utility>

#include "marinex/error.hpp"

namespace marinex {

void validate(const PidGains& g) {
  const std::pair<double, const char*> terms[] = {{g.kp, "kp"}, {g.ki, "ki"}, {g.kd, "kd"}};
  for (const auto& [k, name] : terms) {
    if (!std::isfinite(k) || k < 0.0) throw ValidationError("must be finite and >= 0", name);
  }
}

void validate(const PidState& s) {
  if (!std::isfinite(s.integral_limit) || s.integral_limit <= 0.0) {
    throw ValidationError("must be > 0", "integral_limit");
  }
  if (!std::isfinite(s.output_limit) || s.output_limit <= 0.0) {
    throw ValidationError("must be > 0", "output_limit");
  }
  if (!std::isfinite(s.integral) || std::abs(s.integral) > s.integral_limit) {
    throw ValidationError("must satisfy |integral| <= integral_limit", "integral");
  }
}

void validate(const ControllerConfig& cfg, const CameraModel& cam, const VesselParams& params) {
  if (!std::isfinite(cfg.desired_px) || cfg.desired_px < 0.0 || cfg.desired_px > cam.image_width) {
    throw ValidationError("must lie within the image width", "desired_px");
  }
  if (!std::isfinite(cfg.cruise_thrust) || cfg.cruise_thrust < 0.0 ||
      cfg.cruise_thrust > params.max_thrust_forward) {
    throw ValidationError("must lie in [0, max_thrust_forward]", "cruise_thrust");
  }
  if (!std::isfinite(cfg.stop_depth_threshold) || cfg.stop_depth_threshold <= 0.0) {
    throw ValidationError("must be > 0", "stop_depth_threshold");
  }
  if (!std::isfinite(cfg.speed_cap) || cfg.speed_cap <= 0.0) {
    throw ValidationError("must be > 0", "speed_cap");
  }
  if (!std::isfinite(cfg.governor_gain) || cfg.governor_gain < 0.0) {
    throw ValidationError("must be >= 0", "governor_gain");
  }
}

double heading_error(const Detection& det, const ControllerConfig& cfg) {
  return cfg.desired_px - det.center_x;
}

PidOutput pid_update(const PidState& state, const PidGains& gains, double error, double dt) {
  if (!(dt > 0.0) || !std::isfinite(dt)) throw ValidationError("must be > 0", "dt");

  PidOutput out;
  out.state = state;
  out.state.integral =
      std::clamp(state.integral + error * dt, -state.integral_limit, state.integral_limit);
  const double derivative = state.primed ? (error - state.prev_error) / dt : 0.0;
  out.state.prev_error = error;
  out.state.primed = true;

  out.terms.p = gains.kp * error;
  out.terms.i = gains.ki * out.state.integral;
  out.terms.d = gains.kd * derivative;
  out.u = std::clamp(out.terms.p + out.terms.i + out.terms.d, -state.output_limit,
                     state.output_limit);
  return out;
}

double governed_cruise(const ControllerConfig& cfg, const VesselParams& params, double surge) {
  // Per-thruster force that balances drag at the cap.
  const double hold = 0.5 * params.drag_surge * cfg.speed_cap * cfg.speed_cap;
  const double governed = hold + cfg.governor_gain * (cfg.speed_cap - surge);
  return std::clamp(governed, 0.0, cfg.cruise_thrust);
}

ThrustCommand mix(double u, const ControllerConfig& cfg, const VesselParams& params) {
  return clamp_thrust({cfg.cruise_thrust - u / 2.0, cfg.cruise_thrust + u / 2.0}, params);
}

bool should_stop(double depth, const ControllerConfig& cfg) {
  return depth < cfg.stop_depth_threshold;
}

}  // namespace marinex
