#pragma once

#include <optional>
#include <string>
#include <vector>

#include "marinex/navigator.hpp"
#include "marinex/random.hpp"
#include "marinex/scenario.hpp"

namespace marinex {

// Wind + sinusoidal wave load (force along wave_direction, yaw moment in
// phase) + Gaussian gust. Always draws two gust variates from `rng`.
Disturbance disturbance_force(const DisturbanceSpec& spec, double t, Rng& rng);

struct TelemetryRecord {
  long tick = 0;
  double time = 0.0;
  VesselState state;
  Waypoint target;
  ThrustCommand thrust;            // command decided at this tick
  std::optional<Detection> detection;
  std::optional<double> pixel_error;
  std::optional<PidTerms> pid;
  Mode mode = Mode::Auto;
  AutoPhase phase = AutoPhase::Search;
  std::optional<double> depth;     // measured, from the detection
  double range = 0.0;              // true distance to the target
  Disturbance disturbance;         // applied over [time, time + dt)
  std::string event;               // ';'-joined transitions, empty if none

  bool operator==(const TelemetryRecord&) const = default;
};

struct MetricsConfig {
  double settle_band_px = 10.0;
  double settle_hold_s = 3.0;
};

struct Metrics {
  bool success = false;
  std::optional<double> time_to_intercept;      // s, only when success
  std::optional<double> settling_time;          // s
  std::optional<double> rms_pixel_error_after_settling;  // px
  double max_overshoot = 0.0;                   // px
  double path_length = 0.0;                     // m
  std::optional<double> final_depth;            // m, last measured

  bool operator==(const Metrics&) const = default;
};

// Owns all world state of one run and advances it one tick at a time.
// Operator inputs (mode, teleop thrust, gains, reset) take effect at the next
// call to tick().
class Simulation {
 public:
  explicit Simulation(Scenario scenario);

  // Produces the record for the current tick, then integrates to the next.
  // Must not be called once finished().
  TelemetryRecord tick();
  bool finished() const { return finished_; }
  long next_tick() const { return tick_; }
  long tick_count() const { return scenario_.tick_count(); }

  void set_mode(Mode mode);
  void set_teleop(const ThrustCommand& cmd) { teleop_ = cmd; }
  void set_gains(const PidGains& gains);
  void reset_navigator();

  const Scenario& scenario() const { return scenario_; }
  const NavigatorState& navigator() const { return nav_; }
  const VesselState& vessel() const { return vessel_; }

 private:
  Scenario scenario_;
  NavigatorConfig nav_cfg_;
  NavigatorState nav_;
  VesselState vessel_;
  ThrustCommand teleop_;
  std::vector<std::string> pending_events_;  // operator inputs since the last tick
  Rng detector_rng_;
  Rng disturbance_rng_;
  long tick_ = 0;
  bool finished_ = false;
};

struct RunResult {
  std::vector<TelemetryRecord> telemetry;
  Metrics metrics;
};

// Validates the scenario, then runs it to completion.
RunResult run(const Scenario& scenario);

// Throws ValidationError on empty telemetry.
Metrics compute_metrics(const std::vector<TelemetryRecord>& telemetry,
                        const MetricsConfig& cfg = {});

}  // namespace marinex
