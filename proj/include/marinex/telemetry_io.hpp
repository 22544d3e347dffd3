#pragma once

// Telemetry serialisation. JSONL carries one record per line with full
// double precision (round-trips bit-exactly); CSV is a flat projection with a
// fixed column order. Field names and column order are frozen per
// kTelemetrySchemaVersion.

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "json.hpp"
#include "marinex/sim_engine.hpp"

namespace marinex {

inline constexpr int kTelemetrySchemaVersion = 1;

nlohmann::ordered_json to_json(const TelemetryRecord& rec);
TelemetryRecord record_from_json(const nlohmann::json& doc);

nlohmann::ordered_json to_json(const Metrics& metrics);
Metrics metrics_from_json(const nlohmann::json& doc);

std::string to_jsonl_line(const TelemetryRecord& rec);
void write_jsonl(std::ostream& out, const std::vector<TelemetryRecord>& telemetry);
// Throws ValidationError naming the 1-based line number of the first bad line.
std::vector<TelemetryRecord> read_jsonl(std::istream& in);
std::vector<TelemetryRecord> read_jsonl(const std::filesystem::path& path);

const std::vector<std::string>& csv_columns();
void write_csv(std::ostream& out, const std::vector<TelemetryRecord>& telemetry);

// Per-tick pixel error and trajectory series for plotting.
void write_plot_csv(std::ostream& out, const std::vector<TelemetryRecord>& telemetry);
// Simple SVG line charts: trajectory (x/y) and pixel error over time.
std::string trajectory_svg(const std::vector<TelemetryRecord>& telemetry);
std::string pixel_error_svg(const std::vector<TelemetryRecord>& telemetry);

// Writes to a sibling temporary file and renames it into place.
void write_file_atomic(const std::filesystem::path& path, const std::string& contents);

// Shortest text that parses back to the same double.
std::string format_double(double v);

}  // namespace marinex
