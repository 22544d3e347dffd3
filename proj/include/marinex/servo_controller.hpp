#pragma once

// Image-space steering law: the horizontal pixel error between the desired
// and the measured target column drives a discrete PID whose output is a
// left/right thrust differential about a cruise setpoint.

#include "marinex/sensing.hpp"
#include "marinex/vessel_dynamics.hpp"

namespace marinex {

struct PidGains {
  double kp = 0.15;
  double ki = 0.01;
  double kd = 0.05;
};

struct PidState {
  double integral = 0.0;        // px s
  double prev_error = 0.0;      // px
  double integral_limit = 200;  // px s
  double output_limit = 40.0;   // N
  bool primed = false;          // false until the first update; suppresses the derivative

  // Same limits, cleared history.
  PidState fresh() const { return {0.0, 0.0, integral_limit, output_limit, false}; }
};

struct PidTerms {
  double p = 0.0;
  double i = 0.0;
  double d = 0.0;
  bool operator==(const PidTerms&) const = default;
};

struct PidOutput {
  double u = 0.0;  // N, thrust differential (right minus left)
  PidTerms terms;
  PidState state;
};

struct ControllerConfig {
  double desired_px = 640.0;          // P_d
  double cruise_thrust = 20.0;        // N per thruster
  double stop_depth_threshold = 3.0;  // m
  double speed_cap = 1.0;             // m/s surge ceiling in AUTO
  double governor_gain = 60.0;        // N per m/s of speed error
};

void validate(const PidGains& gains);
void validate(const PidState& state);
void validate(const ControllerConfig& cfg, const CameraModel& cam, const VesselParams& params);

// P_d - P_c. Positive when the target sits left of the desired column.
double heading_error(const Detection& det, const ControllerConfig& cfg);

// One discrete PID update with integral clamping and output saturation.
// Throws ValidationError when dt <= 0.
PidOutput pid_update(const PidState& state, const PidGains& gains, double error, double dt);

// Cruise thrust after the speed governor: the thrust that holds speed_cap
// against drag, plus governor_gain * (speed_cap - surge), limited to
// [0, cruise_thrust].
double governed_cruise(const ControllerConfig& cfg, const VesselParams& params, double surge);

// left = cruise - u/2, right = cruise + u/2, clamped. Positive u yaws to port.
ThrustCommand mix(double u, const ControllerConfig& cfg, const VesselParams& params);

bool should_stop(double depth, const ControllerConfig& cfg);

}  // namespace marinex
