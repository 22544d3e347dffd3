#include "marinex/sim_engine.hpp"

#include <cmath>

#include "marinex/error.hpp"
#include "marinex/sensing.hpp"

namespace marinex {
namespace {

constexpr std::uint64_t kDetectorStream = 1;
constexpr std::uint64_t kDisturbanceStream = 2;

std::string join(const std::vector<std::string>& parts) {
  std::string out;
  for (const auto& p : parts) {
    if (!out.empty()) out += ';';
    out += p;
  }
  return out;
}

}  // namespace

Disturbance disturbance_force(const DisturbanceSpec& spec, double t, Rng& rng) {
  const double gust_x = rng.gaussian(spec.gust_sigma);
  const double gust_y = rng.gaussian(spec.gust_sigma);

  double wave = 0.0;
  if (spec.wave_period > 0.0) wave = std::sin(2.0 * kPi * t / spec.wave_period);

  Disturbance d;
  d.force_x = spec.wind_force_x + spec.wave_amplitude * wave * std::cos(spec.wave_direction) + gust_x;
  d.force_y = spec.wind_force_y + spec.wave_amplitude * wave * std::sin(spec.wave_direction) + gust_y;
  d.moment = spec.wave_yaw_moment_amplitude * wave;
  return d;
}

Simulation::Simulation(Scenario scenario)
    : scenario_(std::move(scenario)),
      detector_rng_(mix_seed(scenario_.seed, kDetectorStream)),
      disturbance_rng_(mix_seed(scenario_.seed, kDisturbanceStream)) {
  validate(scenario_);
  nav_cfg_ = scenario_.navigator_config();
  nav_ = scenario_.initial_navigator();
  vessel_ = scenario_.initial_state;
  vessel_.heading = wrap_angle(vessel_.heading);
}

void Simulation::set_mode(Mode mode) {
  if (mode == nav_.mode) return;
  pending_events_.push_back("mode:" + std::string(to_string(nav_.mode)) + "->" +
                            std::string(to_string(mode)));
  nav_ = marinex::set_mode(nav_, mode);
}

void Simulation::set_gains(const PidGains& gains) {
  validate(gains);
  nav_cfg_.gains = gains;
  scenario_.gains = gains;
  pending_events_.push_back("gains");
}

void Simulation::reset_navigator() {
  nav_ = reset(nav_);
  pending_events_.push_back("reset");
}

TelemetryRecord Simulation::tick() {
  if (finished_) throw std::logic_error("simulation already finished");

  const double t = static_cast<double>(tick_) * scenario_.dt;
  const Waypoint target_xy = target_position(scenario_, t);
  TargetState target = scenario_.target;
  target.x = target_xy.x;
  target.y = target_xy.y;

  std::optional<Detection> detection;
  if (auto ideal = project_target(scenario_.camera, vessel_, target)) {
    detection = simulate_detection(*ideal, scenario_.camera, scenario_.detector, detector_rng_);
  }

  NavigatorInput input;
  input.detection = detection;
  if (nav_.mode == Mode::Teleop) input.teleop = teleop_;
  input.surge = vessel_.surge;
  input.dt = scenario_.dt;
  NavigatorOutput nav = navigate(nav_, input, nav_cfg_);

  const Disturbance dist = disturbance_force(scenario_.disturbance, t, disturbance_rng_);

  TelemetryRecord rec;
  rec.tick = tick_;
  rec.time = t;
  rec.state = vessel_;
  rec.target = target_xy;
  rec.thrust = nav.command;
  rec.detection = detection;
  rec.pixel_error = nav.pixel_error;
  rec.pid = nav.pid_terms;
  rec.mode = nav.state.mode;
  rec.phase = nav.state.phase;
  if (nav.detection_accepted) rec.depth = detection->depth;
  rec.range = std::hypot(target_xy.x - vessel_.x, target_xy.y - vessel_.y);
  rec.disturbance = dist;
  pending_events_.insert(pending_events_.end(), nav.events.begin(), nav.events.end());
  rec.event = join(pending_events_);
  pending_events_.clear();

  nav_ = nav.state;
  const bool held = nav_.mode == Mode::Auto && nav_.phase == AutoPhase::Hold;
  if (tick_ >= scenario_.tick_count() || (scenario_.end_on_hold && held)) {
    finished_ = true;
  } else {
    vessel_ = step(vessel_, nav.command, dist, scenario_.dt, scenario_.vessel);
  }
  ++tick_;
  return rec;
}

RunResult run(const Scenario& scenario) {
  Simulation sim(scenario);
  RunResult result;
  result.telemetry.reserve(static_cast<std::size_t>(sim.tick_count() + 1));
  while (!sim.finished()) result.telemetry.push_back(sim.tick());
  result.metrics = compute_metrics(result.telemetry);
  return result;
}

Metrics compute_metrics(const std::vector<TelemetryRecord>& telemetry, const MetricsConfig& cfg) {
  if (telemetry.empty()) throw ValidationError("telemetry is empty", "telemetry");

  Metrics m;
  for (std::size_t k = 1; k < telemetry.size(); ++k) {
    const VesselState& a = telemetry[k - 1].state;
    const VesselState& b = telemetry[k].state;
    m.path_length += std::hypot(b.x - a.x, b.y - a.y);
  }

  for (const auto& rec : telemetry) {
    if (rec.depth) m.final_depth = rec.depth;
    if (rec.mode == Mode::Auto && rec.phase == AutoPhase::Hold) {
      m.success = true;
      m.time_to_intercept = rec.time;
      break;
    }
  }

  // Autonomous steering samples, up to and including the HOLD entry.
  std::vector<const TelemetryRecord*> steering;
  for (const auto& rec : telemetry) {
    if (rec.mode == Mode::Auto && rec.pixel_error) steering.push_back(&rec);
    if (m.time_to_intercept && rec.time >= *m.time_to_intercept) break;
  }

  // Overshoot: largest excursion past zero relative to the first error sign.
  int initial_sign = 0;
  for (const auto* rec : steering) {
    const double e = *rec->pixel_error;
    if (initial_sign == 0) {
      if (e != 0.0) initial_sign = e > 0.0 ? 1 : -1;
      continue;
    }
    m.max_overshoot = std::max(m.max_overshoot, -initial_sign * e);
  }

  // Settling: start of the first run of in-band samples lasting >= hold time.
  // Ticks without a detection neither extend nor break a run.
  std::optional<double> run_start;
  for (const auto* rec : steering) {
    const bool in_band = std::abs(*rec->pixel_error) < cfg.settle_band_px;
    if (!in_band) {
      run_start.reset();
      continue;
    }
    if (!run_start) run_start = rec->time;
    if (rec->time - *run_start >= cfg.settle_hold_s - 1e-9) {
      m.settling_time = run_start;
      break;
    }
  }

  if (m.settling_time) {
    double sum_sq = 0.0;
    std::size_t n = 0;
    for (const auto* rec : steering) {
      if (rec->time < *m.settling_time) continue;
      sum_sq += *rec->pixel_error * *rec->pixel_error;
      ++n;
    }
    m.rms_pixel_error_after_settling = n > 0 ? std::sqrt(sum_sq / static_cast<double>(n)) : 0.0;
  }
  return m;
}

}  // namespace marinex
