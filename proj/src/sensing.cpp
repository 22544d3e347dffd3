#include "marinex/sensing.hpp"

#include <algorithm>
#include <cmath>

#include "marinex/error.hpp"

namespace marinex {
namespace {

bool in_unit_interval(double p) { return std::isfinite(p) && p >= 0.0 && p <= 1.0; }

}  // namespace

double CameraModel::focal_px() const { return (image_width / 2.0) / std::tan(hfov / 2.0); }

void validate(const CameraModel& cam) {
  if (!std::isfinite(cam.image_width) || cam.image_width <= 0.0) {
    throw ValidationError("must be > 0", "image_width");
  }
  if (!std::isfinite(cam.image_height) || cam.image_height <= 0.0) {
    throw ValidationError("must be > 0", "image_height");
  }
  if (!std::isfinite(cam.hfov) || cam.hfov <= 0.0 || cam.hfov >= kPi) {
    throw ValidationError("must lie in (0, pi)", "hfov");
  }
  if (!std::isfinite(cam.max_range) || cam.max_range <= 0.0) {
    throw ValidationError("must be > 0", "max_range");
  }
}

void validate(const TargetState& t) {
  if (!std::isfinite(t.x) || !std::isfinite(t.y)) throw ValidationError("must be finite", "position");
  if (!std::isfinite(t.beam) || t.beam <= 0.0) throw ValidationError("must be > 0", "beam");
  if (!std::isfinite(t.height_above_water) || t.height_above_water <= 0.0) {
    throw ValidationError("must be > 0", "height_above_water");
  }
}

void validate(const DetectorConfig& cfg) {
  if (!std::isfinite(cfg.pixel_noise_sigma) || cfg.pixel_noise_sigma < 0.0) {
    throw ValidationError("must be >= 0", "pixel_noise_sigma");
  }
  if (!std::isfinite(cfg.depth_noise_sigma) || cfg.depth_noise_sigma < 0.0) {
    throw ValidationError("must be >= 0", "depth_noise_sigma");
  }
  if (!in_unit_interval(cfg.dropout_prob)) throw ValidationError("must lie in [0, 1]", "dropout_prob");
  if (!in_unit_interval(cfg.min_confidence)) throw ValidationError("must lie in [0, 1]", "min_confidence");
}

double camera_bearing(const VesselState& vessel, double target_x, double target_y) {
  return wrap_angle(vessel.heading - std::atan2(target_y - vessel.y, target_x - vessel.x));
}

std::optional<Detection> project_target(const CameraModel& cam, const VesselState& vessel,
                                        const TargetState& target) {
  const double range = std::hypot(target.x - vessel.x, target.y - vessel.y);
  if (!(range > 0.0) || range > cam.max_range) return std::nullopt;

  const double bearing = camera_bearing(vessel, target.x, target.y);
  if (std::abs(bearing) >= cam.hfov / 2.0) return std::nullopt;

  const double f = cam.focal_px();
  Detection det;
  det.center_x = cam.image_width / 2.0 + f * std::tan(bearing);
  // Camera sits at the waterline; the box centre is half the freeboard up.
  det.center_y = cam.image_height / 2.0 - f * (target.height_above_water / 2.0) / range;
  det.box_w = std::max(1.0, f * target.beam / range);
  det.box_h = std::max(1.0, f * target.height_above_water / range);
  det.confidence = 1.0;
  det.depth = range;
  return det;
}

std::optional<Detection> simulate_detection(const Detection& ideal, const CameraModel& cam,
                                            const DetectorConfig& cfg, Rng& rng) {
  if (cfg.dropout_prob > 0.0 && rng.bernoulli(cfg.dropout_prob)) return std::nullopt;

  const double dx = rng.gaussian(cfg.pixel_noise_sigma);
  const double dy = rng.gaussian(cfg.pixel_noise_sigma);
  const double dw = rng.gaussian(cfg.pixel_noise_sigma);
  const double dh = rng.gaussian(cfg.pixel_noise_sigma);
  const double dd = rng.gaussian(cfg.depth_noise_sigma);

  Detection det;
  det.center_x = std::clamp(ideal.center_x + dx, 0.0, cam.image_width);
  det.center_y = std::clamp(ideal.center_y + dy, 0.0, cam.image_height);
  det.box_w = std::max(1.0, ideal.box_w + dw);
  det.box_h = std::max(1.0, ideal.box_h + dh);
  det.depth = std::max(kMinDepth, ideal.depth + dd);

  // Localisation error relative to the box size lowers the score.
  const double miss = std::hypot(dx, dy) / std::max(ideal.box_w, ideal.box_h);
  det.confidence = std::clamp(ideal.confidence - miss, cfg.min_confidence, 1.0);
  return det;
}

double measure_depth(const VesselState& vessel, const TargetState& target,
                     const DetectorConfig& cfg, Rng& rng) {
  const double range = std::hypot(target.x - vessel.x, target.y - vessel.y);
  return std::max(kMinDepth, range + rng.gaussian(cfg.depth_noise_sigma));
}

}  // namespace marinex
