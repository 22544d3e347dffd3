#pragma once

#include <optional>

#include "marinex/random.hpp"
#include "marinex/vessel_dynamics.hpp"

namespace marinex {

// Forward-looking pinhole camera on the bow, optical axis along the hull.
struct CameraModel {
  double image_width = 1280.0;   // px
  double image_height = 720.0;   // px
  double hfov = kPi / 2.0;       // rad
  double max_range = 60.0;       // m

  double focal_px() const;
};

struct TargetState {
  double x = 0.0;
  double y = 0.0;
  double beam = 0.5;                // m
  double height_above_water = 0.4;  // m
};

// Bounding-box level detection. center_x is the measured target column used
// by the steering loop.
struct Detection {
  double center_x = 0.0;
  double center_y = 0.0;
  double box_w = 1.0;
  double box_h = 1.0;
  double confidence = 1.0;
  double depth = 1.0;  // m

  bool operator==(const Detection&) const = default;
};

struct DetectorConfig {
  double pixel_noise_sigma = 0.0;  // px
  double dropout_prob = 0.0;
  double depth_noise_sigma = 0.0;  // m
  double min_confidence = 0.25;
};

inline constexpr double kMinDepth = 0.1;  // m

void validate(const CameraModel& cam);
void validate(const TargetState& target);
void validate(const DetectorConfig& cfg);

// Relative bearing of the target from the bow, positive to starboard, so that
// it grows with the image column.
double camera_bearing(const VesselState& vessel, double target_x, double target_y);

// Noise-free detection of the target, or nullopt when it lies outside the
// horizontal field of view or beyond max_range.
std::optional<Detection> project_target(const CameraModel& cam, const VesselState& vessel,
                                        const TargetState& target);

// Applies dropout, pixel and depth noise to an ideal detection. The output is
// clamped into the image and assigned a confidence in [min_confidence, 1].
std::optional<Detection> simulate_detection(const Detection& ideal, const CameraModel& cam,
                                            const DetectorConfig& cfg, Rng& rng);

// Noisy range to the target, floored at kMinDepth.
double measure_depth(const VesselState& vessel, const TargetState& target,
                     const DetectorConfig& cfg, Rng& rng);

}  // namespace marinex
