#include "marinex/navigator.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>

#include "marinex/error.hpp"

namespace marinex {
namespace {

std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

std::string transition(AutoPhase from, AutoPhase to) {
  return "phase:" + std::string(to_string(from)) + "->" + std::string(to_string(to));
}

long lost_ticks(const NavigatorState& nav, double dt) {
  return std::lround(nav.lost_timeout / dt);
}

ThrustCommand spin(const NavigatorState& nav, const NavigatorConfig& cfg) {
  const double s = cfg.search_thrust * nav.last_error_sign;
  return clamp_thrust({-s, s}, cfg.vessel);
}

}  // namespace

std::string_view to_string(Mode mode) { return mode == Mode::Teleop ? "TELEOP" : "AUTO"; }

std::string_view to_string(AutoPhase phase) {
  switch (phase) {
    case AutoPhase::Search: return "SEARCH";
    case AutoPhase::Track: return "TRACK";
    case AutoPhase::Hold: return "HOLD";
  }
  return "SEARCH";
}

Mode parse_mode(std::string_view text) {
  const std::string s = lower(text);
  if (s == "teleop") return Mode::Teleop;
  if (s == "auto") return Mode::Auto;
  throw ValidationError("unknown mode '" + std::string(text) + "'", "mode");
}

AutoPhase parse_phase(std::string_view text) {
  const std::string s = lower(text);
  if (s == "search") return AutoPhase::Search;
  if (s == "track") return AutoPhase::Track;
  if (s == "hold") return AutoPhase::Hold;
  throw ValidationError("unknown phase '" + std::string(text) + "'", "phase");
}

NavigatorOutput navigate(const NavigatorState& nav, const NavigatorInput& input,
                         const NavigatorConfig& cfg) {
  if (!(input.dt > 0.0)) throw ValidationError("must be > 0", "dt");

  NavigatorOutput out;
  out.state = nav;
  NavigatorState& next = out.state;

  const bool accepted =
      input.detection.has_value() && input.detection->confidence >= cfg.min_confidence;
  out.detection_accepted = accepted;
  if (accepted) {
    out.pixel_error = heading_error(*input.detection, cfg.controller);
    next.ticks_since_detection = 0;
  } else {
    ++next.ticks_since_detection;
  }

  if (nav.mode == Mode::Teleop) {
    out.command = clamp_thrust(input.teleop.value_or(ThrustCommand{}), cfg.vessel);
    next.last_command = out.command;
    return out;
  }

  if (accepted && *out.pixel_error != 0.0) {
    next.last_error_sign = *out.pixel_error > 0.0 ? 1 : -1;
  }

  if (next.phase == AutoPhase::Search && accepted) {
    next.phase = AutoPhase::Track;
    next.pid = nav.pid.fresh();
    out.events.push_back(transition(AutoPhase::Search, AutoPhase::Track));
  }

  switch (next.phase) {
    case AutoPhase::Hold:
      out.command = {};
      break;

    case AutoPhase::Search:
      out.command = spin(next, cfg);
      break;

    case AutoPhase::Track:
      if (accepted) {
        const PidOutput pid = pid_update(next.pid, cfg.gains, *out.pixel_error, input.dt);
        next.pid = pid.state;
        out.pid_terms = pid.terms;
        if (should_stop(input.detection->depth, cfg.controller)) {
          next.phase = AutoPhase::Hold;
          out.events.push_back(transition(AutoPhase::Track, AutoPhase::Hold));
          out.command = {};
        } else {
          ControllerConfig governed = cfg.controller;
          governed.cruise_thrust = governed_cruise(cfg.controller, cfg.vessel, input.surge);
          out.command = mix(pid.u, governed, cfg.vessel);
        }
      } else if (next.ticks_since_detection > lost_ticks(next, input.dt)) {
        next.phase = AutoPhase::Search;
        out.events.push_back(transition(AutoPhase::Track, AutoPhase::Search));
        out.command = spin(next, cfg);
      } else {
        // Brief dropout: keep steering as last commanded.
        out.command = nav.last_command;
      }
      break;
  }
  next.last_command = out.command;
  return out;
}

NavigatorState set_mode(const NavigatorState& nav, Mode mode) {
  if (mode == nav.mode) return nav;
  NavigatorState next = nav;
  next.mode = mode;
  if (mode == Mode::Auto) {
    next.phase = AutoPhase::Search;
    next.pid = nav.pid.fresh();
    next.ticks_since_detection = 0;
    next.last_command = {};
  }
  return next;
}

NavigatorState reset(const NavigatorState& nav) {
  NavigatorState next = nav;
  next.phase = AutoPhase::Search;
  next.pid = nav.pid.fresh();
  next.ticks_since_detection = 0;
  next.last_command = {};
  return next;
}

}  // namespace marinex
