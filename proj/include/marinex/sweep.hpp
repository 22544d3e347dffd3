#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "json.hpp"
#include "marinex/scenario.hpp"
#include "marinex/sim_engine.hpp"

namespace marinex {

struct SweepCell {
  nlohmann::json value;  // axis value
  int runs = 0;
  int successes = 0;
  double success_rate = 0.0;
  // Means over successful runs; NaN when there are none.
  double mean_time_to_intercept = 0.0;
  double mean_settling_time = 0.0;
  double mean_rms_pixel_error = 0.0;
  // Mean over all runs.
  double mean_path_length = 0.0;
  std::vector<Metrics> per_seed;
};

struct SweepResult {
  std::string axis;
  std::vector<std::uint64_t> seeds;
  std::vector<SweepCell> cells;
};

// Runs `base` once per (value, seed). `axis` is a dotted scenario field path
// (see set_field); the seed is overridden per run. Independent runs are
// spread over `workers` threads (0 = hardware concurrency); results do not
// depend on the worker count.
SweepResult sweep(const Scenario& base, const std::string& axis,
                  const std::vector<nlohmann::json>& values,
                  const std::vector<std::uint64_t>& seeds, unsigned workers = 0);

void write_sweep_csv(std::ostream& out, const SweepResult& result);

}  // namespace marinex
