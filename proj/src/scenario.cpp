#include "marinex/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <optional>
#include <fstream>

#include "marinex/error.hpp"

#ifndef MARINEX_DEFAULT_PRESET_DIR
#define MARINEX_DEFAULT_PRESET_DIR "presets"
#endif

namespace marinex {
namespace {

using json = nlohmann::json;
using ojson = nlohmann::ordered_json;

// Reads fields of one JSON object, keeping the dotted path for diagnostics.
class Reader {
 public:
  Reader(const json& node, std::string path) : node_(node), path_(std::move(path)) {
    if (!node_.is_object()) throw ValidationError("must be an object", path_.empty() ? "<root>" : path_);
  }

  std::string at(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

  bool has(const std::string& key) const { return node_.contains(key); }

  void number(const std::string& key, double& out) const {
    if (!has(key)) return;
    const json& v = node_.at(key);
    if (!v.is_number()) throw ValidationError("must be a number", at(key));
    out = v.get<double>();
  }

  void boolean(const std::string& key, bool& out) const {
    if (!has(key)) return;
    const json& v = node_.at(key);
    if (!v.is_boolean()) throw ValidationError("must be a boolean", at(key));
    out = v.get<bool>();
  }

  void text(const std::string& key, std::string& out) const {
    if (!has(key)) return;
    const json& v = node_.at(key);
    if (!v.is_string()) throw ValidationError("must be a string", at(key));
    out = v.get<std::string>();
  }

  void unsigned_integer(const std::string& key, std::uint64_t& out) const {
    if (!has(key)) return;
    const json& v = node_.at(key);
    if (!v.is_number_integer() || (!v.is_number_unsigned() && v.get<std::int64_t>() < 0)) {
      throw ValidationError("must be a non-negative integer", at(key));
    }
    out = v.get<std::uint64_t>();
  }

  std::optional<Reader> child(const std::string& key) const {
    if (!has(key)) return std::nullopt;
    return Reader(node_.at(key), at(key));
  }

  const json& raw(const std::string& key) const { return node_.at(key); }

 private:
  const json& node_;
  std::string path_;
};

// Re-throws a component validation error under a scenario path prefix.
template <typename Fn>
void scoped(const std::string& prefix, Fn&& fn) {
  try {
    fn();
  } catch (const ValidationError& e) {
    const std::string field = e.field().empty() ? prefix : prefix + "." + e.field();
    std::string msg = e.what();
    if (!e.field().empty() && msg.rfind(e.field() + ": ", 0) == 0) msg = msg.substr(e.field().size() + 2);
    throw ValidationError(msg, field);
  }
}

void read_vessel_params(const Reader& r, VesselParams& p) {
  r.number("mass", p.mass);
  r.number("payload", p.payload);
  r.number("yaw_inertia", p.yaw_inertia);
  r.number("hull_separation", p.hull_separation);
  r.number("drag_surge", p.drag_surge);
  r.number("drag_sway", p.drag_sway);
  r.number("drag_yaw", p.drag_yaw);
  r.number("max_thrust_forward", p.max_thrust_forward);
  r.number("max_thrust_reverse", p.max_thrust_reverse);
}

void read_vessel_state(const Reader& r, VesselState& s) {
  r.number("x", s.x);
  r.number("y", s.y);
  r.number("heading", s.heading);
  r.number("surge", s.surge);
  r.number("sway", s.sway);
  r.number("yaw_rate", s.yaw_rate);
}

void read_motion(const Reader& r, TargetMotion& m) {
  std::string type = "static";
  r.text("type", type);
  if (type == "static") {
    m.kind = TargetMotion::Kind::Static;
  } else if (type == "constant_velocity") {
    m.kind = TargetMotion::Kind::ConstantVelocity;
    r.number("vx", m.vx);
    r.number("vy", m.vy);
  } else if (type == "waypoint_loop") {
    m.kind = TargetMotion::Kind::WaypointLoop;
    r.number("speed", m.speed);
    if (!r.has("waypoints") || !r.raw("waypoints").is_array()) {
      throw ValidationError("must be an array of {x, y}", r.at("waypoints"));
    }
    const json& wps = r.raw("waypoints");
    m.waypoints.clear();
    for (std::size_t i = 0; i < wps.size(); ++i) {
      Reader w(wps[i], r.at("waypoints") + "[" + std::to_string(i) + "]");
      Waypoint wp;
      w.number("x", wp.x);
      w.number("y", wp.y);
      m.waypoints.push_back(wp);
    }
  } else {
    throw ValidationError("must be one of static, constant_velocity, waypoint_loop", r.at("type"));
  }
}

std::string motion_name(TargetMotion::Kind kind) {
  switch (kind) {
    case TargetMotion::Kind::Static: return "static";
    case TargetMotion::Kind::ConstantVelocity: return "constant_velocity";
    case TargetMotion::Kind::WaypointLoop: return "waypoint_loop";
  }
  return "static";
}

}  // namespace

long Scenario::tick_count() const {
  return std::lround(duration / dt);
}

NavigatorConfig Scenario::navigator_config() const {
  NavigatorConfig cfg;
  cfg.controller = controller;
  cfg.gains = gains;
  cfg.vessel = vessel;
  cfg.min_confidence = detector.min_confidence;
  cfg.search_thrust = search_thrust;
  return cfg;
}

NavigatorState Scenario::initial_navigator() const {
  NavigatorState nav;
  nav.mode = initial_mode;
  nav.phase = AutoPhase::Search;
  nav.pid.integral_limit = integral_limit;
  nav.pid.output_limit = output_limit;
  nav.lost_timeout = lost_timeout;
  return nav;
}

void validate(const DisturbanceSpec& d) {
  const auto nonneg = [](double v, const char* field) {
    if (!std::isfinite(v) || v < 0.0) throw ValidationError("must be finite and >= 0", field);
  };
  if (!std::isfinite(d.wind_force_x) || !std::isfinite(d.wind_force_y)) {
    throw ValidationError("must be finite", "wind_force");
  }
  nonneg(d.wave_amplitude, "wave_amplitude");
  nonneg(d.wave_yaw_moment_amplitude, "wave_yaw_moment_amplitude");
  nonneg(d.gust_sigma, "gust_sigma");
  if (!std::isfinite(d.wave_direction)) throw ValidationError("must be finite", "wave_direction");
  const bool waves = d.wave_amplitude > 0.0 || d.wave_yaw_moment_amplitude > 0.0;
  if (!std::isfinite(d.wave_period) || (waves && d.wave_period <= 0.0)) {
    throw ValidationError("must be > 0 when waves are present", "wave_period");
  }
}

void validate(const Scenario& s) {
  if (s.name.empty()) throw ValidationError("must not be empty", "name");
  if (!std::isfinite(s.dt) || s.dt <= 0.0 || s.dt > kMaxStep) {
    throw ValidationError("must satisfy 0 < dt <= 0.1", "dt");
  }
  if (!std::isfinite(s.duration) || s.duration < 0.0) {
    throw ValidationError("must be finite and >= 0", "duration");
  }
  const double ticks = s.duration / s.dt;
  if (std::abs(ticks - std::round(ticks)) > 1e-9 * std::max(1.0, ticks)) {
    throw ValidationError("must be an integer multiple of dt", "duration");
  }
  scoped("vessel.params", [&] { validate(s.vessel); });
  scoped("vessel.initial_state", [&] { validate(s.initial_state); });
  scoped("target", [&] { validate(s.target); });
  if (s.target_motion.kind == TargetMotion::Kind::ConstantVelocity &&
      (!std::isfinite(s.target_motion.vx) || !std::isfinite(s.target_motion.vy))) {
    throw ValidationError("must be finite", "target.motion.velocity");
  }
  if (s.target_motion.kind == TargetMotion::Kind::WaypointLoop) {
    if (s.target_motion.waypoints.size() < 2) {
      throw ValidationError("needs at least two waypoints", "target.motion.waypoints");
    }
    if (!std::isfinite(s.target_motion.speed) || s.target_motion.speed < 0.0) {
      throw ValidationError("must be finite and >= 0", "target.motion.speed");
    }
  }
  scoped("camera", [&] { validate(s.camera); });
  scoped("detector", [&] { validate(s.detector); });
  scoped("controller", [&] { validate(s.controller, s.camera, s.vessel); });
  scoped("controller.gains", [&] { validate(s.gains); });
  if (!std::isfinite(s.integral_limit) || s.integral_limit <= 0.0) {
    throw ValidationError("must be > 0", "controller.integral_limit");
  }
  if (!std::isfinite(s.output_limit) || s.output_limit <= 0.0) {
    throw ValidationError("must be > 0", "controller.output_limit");
  }
  if (!std::isfinite(s.lost_timeout) || s.lost_timeout < 0.0) {
    throw ValidationError("must be >= 0", "controller.lost_timeout");
  }
  if (!std::isfinite(s.search_thrust) || s.search_thrust < 0.0) {
    throw ValidationError("must be >= 0", "controller.search_thrust");
  }
  scoped("disturbance", [&] { validate(s.disturbance); });
}

Scenario scenario_from_json(const json& doc) {
  Reader root(doc, "");
  if (root.has("schema_version")) {
    const json& v = root.raw("schema_version");
    if (!v.is_number_integer() || v.get<int>() != kScenarioSchemaVersion) {
      throw ValidationError("unsupported version (expected 1)", "schema_version");
    }
  }

  Scenario s;
  root.text("name", s.name);
  root.text("description", s.description);
  root.unsigned_integer("seed", s.seed);
  root.number("duration", s.duration);
  root.number("dt", s.dt);
  root.boolean("end_on_hold", s.end_on_hold);
  if (root.has("initial_mode")) {
    std::string mode;
    root.text("initial_mode", mode);
    scoped("initial_mode", [&] {
      try {
        s.initial_mode = parse_mode(mode);
      } catch (const ValidationError&) {
        throw ValidationError("must be TELEOP or AUTO");
      }
    });
  }

  if (auto vessel = root.child("vessel")) {
    if (auto p = vessel->child("params")) read_vessel_params(*p, s.vessel);
    if (auto st = vessel->child("initial_state")) read_vessel_state(*st, s.initial_state);
  }

  if (auto t = root.child("target")) {
    t->number("x", s.target.x);
    t->number("y", s.target.y);
    t->number("beam", s.target.beam);
    t->number("height_above_water", s.target.height_above_water);
    if (auto m = t->child("motion")) read_motion(*m, s.target_motion);
  }

  if (auto c = root.child("camera")) {
    c->number("image_width", s.camera.image_width);
    c->number("image_height", s.camera.image_height);
    c->number("hfov", s.camera.hfov);
    c->number("max_range", s.camera.max_range);
  }

  if (auto d = root.child("detector")) {
    d->number("pixel_noise_sigma", s.detector.pixel_noise_sigma);
    d->number("dropout_prob", s.detector.dropout_prob);
    d->number("depth_noise_sigma", s.detector.depth_noise_sigma);
    d->number("min_confidence", s.detector.min_confidence);
  }

  if (auto c = root.child("controller")) {
    c->number("desired_px", s.controller.desired_px);
    c->number("cruise_thrust", s.controller.cruise_thrust);
    c->number("stop_depth_threshold", s.controller.stop_depth_threshold);
    c->number("speed_cap", s.controller.speed_cap);
    c->number("governor_gain", s.controller.governor_gain);
    c->number("integral_limit", s.integral_limit);
    c->number("output_limit", s.output_limit);
    c->number("lost_timeout", s.lost_timeout);
    c->number("search_thrust", s.search_thrust);
    if (auto g = c->child("gains")) {
      g->number("kp", s.gains.kp);
      g->number("ki", s.gains.ki);
      g->number("kd", s.gains.kd);
    }
  }

  if (auto d = root.child("disturbance")) {
    if (d->has("wind_force")) {
      const json& w = d->raw("wind_force");
      if (!w.is_array() || w.size() != 2 || !w[0].is_number() || !w[1].is_number()) {
        throw ValidationError("must be [fx, fy]", d->at("wind_force"));
      }
      s.disturbance.wind_force_x = w[0].get<double>();
      s.disturbance.wind_force_y = w[1].get<double>();
    }
    d->number("wave_amplitude", s.disturbance.wave_amplitude);
    d->number("wave_period", s.disturbance.wave_period);
    d->number("wave_direction", s.disturbance.wave_direction);
    d->number("wave_yaw_moment_amplitude", s.disturbance.wave_yaw_moment_amplitude);
    d->number("gust_sigma", s.disturbance.gust_sigma);
  }

  validate(s);
  return s;
}

ojson scenario_to_json(const Scenario& s) {
  ojson doc;
  doc["schema_version"] = kScenarioSchemaVersion;
  doc["name"] = s.name;
  doc["description"] = s.description;
  doc["seed"] = s.seed;
  doc["duration"] = s.duration;
  doc["dt"] = s.dt;
  doc["initial_mode"] = std::string(to_string(s.initial_mode));
  doc["end_on_hold"] = s.end_on_hold;

  const VesselParams& p = s.vessel;
  const VesselState& st = s.initial_state;
  doc["vessel"]["params"] = {{"mass", p.mass},
                             {"payload", p.payload},
                             {"yaw_inertia", p.yaw_inertia},
                             {"hull_separation", p.hull_separation},
                             {"drag_surge", p.drag_surge},
                             {"drag_sway", p.drag_sway},
                             {"drag_yaw", p.drag_yaw},
                             {"max_thrust_forward", p.max_thrust_forward},
                             {"max_thrust_reverse", p.max_thrust_reverse}};
  doc["vessel"]["initial_state"] = {{"x", st.x},         {"y", st.y},
                                    {"heading", st.heading}, {"surge", st.surge},
                                    {"sway", st.sway},   {"yaw_rate", st.yaw_rate}};

  ojson motion;
  motion["type"] = motion_name(s.target_motion.kind);
  if (s.target_motion.kind == TargetMotion::Kind::ConstantVelocity) {
    motion["vx"] = s.target_motion.vx;
    motion["vy"] = s.target_motion.vy;
  } else if (s.target_motion.kind == TargetMotion::Kind::WaypointLoop) {
    motion["speed"] = s.target_motion.speed;
    motion["waypoints"] = ojson::array();
    for (const Waypoint& w : s.target_motion.waypoints) {
      motion["waypoints"].push_back({{"x", w.x}, {"y", w.y}});
    }
  }
  doc["target"] = {{"x", s.target.x},
                   {"y", s.target.y},
                   {"beam", s.target.beam},
                   {"height_above_water", s.target.height_above_water},
                   {"motion", motion}};

  doc["camera"] = {{"image_width", s.camera.image_width},
                   {"image_height", s.camera.image_height},
                   {"hfov", s.camera.hfov},
                   {"max_range", s.camera.max_range}};
  doc["detector"] = {{"pixel_noise_sigma", s.detector.pixel_noise_sigma},
                     {"dropout_prob", s.detector.dropout_prob},
                     {"depth_noise_sigma", s.detector.depth_noise_sigma},
                     {"min_confidence", s.detector.min_confidence}};
  doc["controller"] = {{"desired_px", s.controller.desired_px},
                       {"cruise_thrust", s.controller.cruise_thrust},
                       {"stop_depth_threshold", s.controller.stop_depth_threshold},
                       {"speed_cap", s.controller.speed_cap},
                       {"governor_gain", s.controller.governor_gain},
                       {"integral_limit", s.integral_limit},
                       {"output_limit", s.output_limit},
                       {"lost_timeout", s.lost_timeout},
                       {"search_thrust", s.search_thrust},
                       {"gains", {{"kp", s.gains.kp}, {"ki", s.gains.ki}, {"kd", s.gains.kd}}}};
  const DisturbanceSpec& d = s.disturbance;
  doc["disturbance"] = {{"wind_force", {d.wind_force_x, d.wind_force_y}},
                        {"wave_amplitude", d.wave_amplitude},
                        {"wave_period", d.wave_period},
                        {"wave_direction", d.wave_direction},
                        {"wave_yaw_moment_amplitude", d.wave_yaw_moment_amplitude},
                        {"gust_sigma", d.gust_sigma}};
  return doc;
}

Scenario load_scenario(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open scenario file: " + path.string());
  json doc;
  try {
    in >> doc;
  } catch (const json::parse_error& e) {
    throw ValidationError(std::string("invalid JSON: ") + e.what(), path.string());
  }
  return scenario_from_json(doc);
}

Waypoint target_position(const Scenario& s, double t) {
  const TargetMotion& m = s.target_motion;
  switch (m.kind) {
    case TargetMotion::Kind::Static:
      return {s.target.x, s.target.y};
    case TargetMotion::Kind::ConstantVelocity:
      return {s.target.x + m.vx * t, s.target.y + m.vy * t};
    case TargetMotion::Kind::WaypointLoop: {
      const auto& w = m.waypoints;
      double perimeter = 0.0;
      for (std::size_t i = 0; i < w.size(); ++i) {
        const Waypoint& a = w[i];
        const Waypoint& b = w[(i + 1) % w.size()];
        perimeter += std::hypot(b.x - a.x, b.y - a.y);
      }
      if (perimeter <= 0.0) return w.front();
      double along = std::fmod(m.speed * t, perimeter);
      for (std::size_t i = 0; i < w.size(); ++i) {
        const Waypoint& a = w[i];
        const Waypoint& b = w[(i + 1) % w.size()];
        const double len = std::hypot(b.x - a.x, b.y - a.y);
        if (along <= len && len > 0.0) {
          const double f = along / len;
          return {a.x + f * (b.x - a.x), a.y + f * (b.y - a.y)};
        }
        along -= len;
      }
      return w.front();
    }
  }
  return {s.target.x, s.target.y};
}

std::filesystem::path preset_directory() {
  if (const char* env = std::getenv("MARINEX_PRESET_DIR"); env != nullptr && *env != '\0') {
    return env;
  }
  return MARINEX_DEFAULT_PRESET_DIR;
}

std::vector<std::string> list_presets(const std::filesystem::path& dir) {
  std::vector<std::string> names;
  std::error_code ec;
  for (const auto& entry : std::filesystem::directory_iterator(dir, ec)) {
    if (entry.is_regular_file() && entry.path().extension() == ".json") {
      names.push_back(entry.path().stem().string());
    }
  }
  std::sort(names.begin(), names.end());
  return names;
}

Scenario load_preset(const std::string& name, const std::filesystem::path& dir) {
  const auto path = dir / (name + ".json");
  if (name.empty() || name.find('/') != std::string::npos || !std::filesystem::exists(path)) {
    throw ValidationError("unknown preset '" + name + "' (searched " + dir.string() + ")", "preset");
  }
  return load_scenario(path);
}

void set_field(ojson& doc, const std::string& path, const json& value) {
  ojson* node = &doc;
  std::size_t start = 0;
  while (true) {
    const std::size_t dot = path.find('.', start);
    const std::string key = path.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
    if (!node->is_object() || !node->contains(key)) {
      throw ValidationError("unknown scenario field", path);
    }
    node = &(*node)[key];
    if (dot == std::string::npos) break;
    start = dot + 1;
  }
  if (node->is_object() || (node->is_array() && !value.is_array())) {
    throw ValidationError("not a scalar scenario field", path);
  }
  *node = value;
}

}  // namespace marinex
