#pragma once

// Planar 3-DOF (surge, sway, yaw) model of a twin-thruster catamaran.
//
// Frames: world x east, y north, heading CCW from east. Body x forward,
// body y to port. Drag is quadratic on every axis; the only actuation is a
// pair of thrusters mounted on the hull centrelines.

namespace marinex {

inline constexpr double kPi = 3.14159265358979323846;
inline constexpr double kGravity = 9.80665;           // m/s^2, kgf -> N
inline constexpr double kKnot = 1852.0 / 3600.0;      // m/s
inline constexpr double kMaxStep = 0.1;               // s

inline constexpr double kgf_to_newton(double kgf) { return kgf * kGravity; }

struct VesselParams {
  double mass = 25.0;                    // kg, dry hull
  double payload = 0.0;                  // kg, carried as added rigid mass
  double yaw_inertia = 3.0;              // kg m^2
  double hull_separation = 0.6;          // m between thruster lines
  double drag_surge = 23.39;             // N s^2/m^2
  double drag_sway = 60.0;               // N s^2/m^2
  double drag_yaw = 8.0;                 // N m s^2/rad^2
  double max_thrust_forward = 49.52;     // N, 5.05 kgf
  double max_thrust_reverse = 40.0;      // N

  double total_mass() const { return mass + payload; }
};

struct VesselState {
  double x = 0.0;
  double y = 0.0;
  double heading = 0.0;  // rad, (-pi, pi]
  double surge = 0.0;    // m/s
  double sway = 0.0;     // m/s, positive to port
  double yaw_rate = 0.0; // rad/s, positive CCW

  bool operator==(const VesselState&) const = default;
};

struct ThrustCommand {
  double left = 0.0;   // N
  double right = 0.0;  // N

  bool operator==(const ThrustCommand&) const = default;
};

struct Wrench {
  double surge_force = 0.0;  // N
  double yaw_moment = 0.0;   // N m
};

// External load, world frame for the force and about the vertical axis for
// the moment.
struct Disturbance {
  double force_x = 0.0;
  double force_y = 0.0;
  double moment = 0.0;

  bool operator==(const Disturbance&) const = default;
};

// Throws ValidationError on the first non-positive or non-finite field.
void validate(const VesselParams& params);
void validate(const VesselState& state);

// Wraps an angle into (-pi, pi].
double wrap_angle(double radians);

ThrustCommand clamp_thrust(const ThrustCommand& cmd, const VesselParams& params);

Wrench thrust_to_wrench(const ThrustCommand& cmd, const VesselParams& params);

// One RK4 step of length dt. Requires 0 < dt <= 0.1 and finite inputs.
VesselState step(const VesselState& state, const ThrustCommand& cmd,
                 const Disturbance& disturbance, double dt,
                 const VesselParams& params);

// Terminal surge speed under full symmetric forward thrust.
double steady_state_speed(const VesselParams& params);

double kinetic_energy(const VesselState& state, const VesselParams& params);

}  // namespace marinex
