#pragma once

// Mission state machine. TELEOP forwards operator thrust; AUTO cycles through
// SEARCH (spin until the target is seen), TRACK (visual servoing toward it)
// and HOLD (stopped within the depth threshold, absorbing).

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "marinex/sensing.hpp"
#include "marinex/servo_controller.hpp"
#include "marinex/vessel_dynamics.hpp"

namespace marinex {

enum class Mode { Teleop, Auto };
enum class AutoPhase { Search, Track, Hold };

std::string_view to_string(Mode mode);
std::string_view to_string(AutoPhase phase);
// Case-insensitive; throws ValidationError on unknown names.
Mode parse_mode(std::string_view text);
AutoPhase parse_phase(std::string_view text);

struct NavigatorConfig {
  ControllerConfig controller;
  PidGains gains;
  VesselParams vessel;
  double min_confidence = 0.25;
  double search_thrust = 5.0;  // N on each side, opposite signs
};

struct NavigatorState {
  Mode mode = Mode::Teleop;
  AutoPhase phase = AutoPhase::Search;
  PidState pid;
  long ticks_since_detection = 0;
  double lost_timeout = 2.0;  // s
  ThrustCommand last_command;
  // Sign of the last accepted pixel error; SEARCH spins toward that side.
  int last_error_sign = 1;
};

struct NavigatorInput {
  std::optional<Detection> detection;
  std::optional<ThrustCommand> teleop;
  double surge = 0.0;  // m/s, for the speed governor
  double dt = 0.02;
};

struct NavigatorOutput {
  ThrustCommand command;
  NavigatorState state;
  bool detection_accepted = false;
  std::optional<double> pixel_error;
  std::optional<PidTerms> pid_terms;
  std::vector<std::string> events;
};

NavigatorOutput navigate(const NavigatorState& nav, const NavigatorInput& input,
                         const NavigatorConfig& cfg);

// Entering AUTO from TELEOP restarts the mission in SEARCH with a fresh PID.
// Re-selecting the current mode is a no-op.
NavigatorState set_mode(const NavigatorState& nav, Mode mode);

// Clears HOLD: back to SEARCH with a fresh PID, mode unchanged.
NavigatorState reset(const NavigatorState& nav);

}  // namespace marinex
