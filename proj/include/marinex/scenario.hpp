#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"
#include "marinex/navigator.hpp"
#include "marinex/sensing.hpp"
#include "marinex/servo_controller.hpp"
#include "marinex/vessel_dynamics.hpp"

namespace marinex {

inline constexpr int kScenarioSchemaVersion = 1;

struct Waypoint {
  double x = 0.0;
  double y = 0.0;
  bool operator==(const Waypoint&) const = default;
};

struct TargetMotion {
  enum class Kind { Static, ConstantVelocity, WaypointLoop };
  Kind kind = Kind::Static;
  double vx = 0.0;  // m/s, constant-velocity
  double vy = 0.0;
  std::vector<Waypoint> waypoints;  // closed loop, starting at the first waypoint
  double speed = 0.0;               // m/s along the loop
};

struct DisturbanceSpec {
  double wind_force_x = 0.0;               // N, world frame, constant
  double wind_force_y = 0.0;
  double wave_amplitude = 0.0;             // N
  double wave_period = 1.0;                // s
  double wave_direction = 0.0;             // rad, world frame
  double wave_yaw_moment_amplitude = 0.0;  // N m
  double gust_sigma = 0.0;                 // N per axis per tick
};

struct Scenario {
  std::string name = "unnamed";
  std::string description;
  std::uint64_t seed = 0;
  double duration = 60.0;  // s
  double dt = 0.02;        // s
  Mode initial_mode = Mode::Auto;
  bool end_on_hold = true;

  VesselParams vessel;
  VesselState initial_state;
  TargetState target;
  TargetMotion target_motion;
  CameraModel camera;
  DetectorConfig detector;
  ControllerConfig controller;
  PidGains gains;
  double integral_limit = 200.0;  // px s
  double output_limit = 40.0;     // N
  double lost_timeout = 2.0;      // s
  double search_thrust = 5.0;     // N
  DisturbanceSpec disturbance;

  // duration / dt, exact to 1e-9 of a tick.
  long tick_count() const;
  NavigatorConfig navigator_config() const;
  NavigatorState initial_navigator() const;
};

// Throws ValidationError with a dotted field path.
void validate(const DisturbanceSpec& spec);
void validate(const Scenario& scenario);

// Missing fields take defaults; unknown fields are ignored. Type errors and
// invariant violations throw ValidationError naming the field path.
Scenario scenario_from_json(const nlohmann::json& doc);
nlohmann::ordered_json scenario_to_json(const Scenario& scenario);
Scenario load_scenario(const std::filesystem::path& path);

// Target position at time t.
Waypoint target_position(const Scenario& scenario, double t);

// Preset lookup: $MARINEX_PRESET_DIR if set, else the directory compiled in
// at build time.
std::filesystem::path preset_directory();
std::vector<std::string> list_presets(const std::filesystem::path& dir = preset_directory());
Scenario load_preset(const std::string& name, const std::filesystem::path& dir = preset_directory());

// Sets a dotted field path (e.g. "controller.speed_cap") in a serialised
// scenario. Throws ValidationError when the path does not name an existing
// field.
void set_field(nlohmann::ordered_json& doc, const std::string& path, const nlohmann::json& value);

}  // namespace marinex
