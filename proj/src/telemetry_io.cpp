#include "marinex/telemetry_io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>

#include "marinex/error.hpp"

namespace marinex {
namespace {

using json = nlohmann::json;
using ojson = nlohmann::ordered_json;

template <typename T>
ojson optional_number(const std::optional<T>& v) {
  return v ? ojson(*v) : ojson(nullptr);
}

std::optional<double> read_optional(const json& doc, const char* key) {
  const auto it = doc.find(key);
  if (it == doc.end() || it->is_null()) return std::nullopt;
  return it->get<double>();
}

std::string csv_optional(const std::optional<double>& v) { return v ? format_double(*v) : ""; }

// Linear map of a data range onto a pixel span; degenerate ranges map to the
// span centre.
struct Axis {
  double lo = 0.0;
  double hi = 1.0;
  double p0 = 0.0;
  double p1 = 1.0;
  double operator()(double v) const {
    if (hi - lo <= 0.0) return (p0 + p1) / 2.0;
    return p0 + (v - lo) / (hi - lo) * (p1 - p0);
  }
};

std::string svg_chart(const std::string& title, const std::vector<std::pair<double, double>>& pts,
                      const std::vector<std::pair<double, double>>& markers, bool equal_aspect) {
  constexpr double kW = 640.0;
  constexpr double kH = 480.0;
  constexpr double kPad = 40.0;
  double xmin = std::numeric_limits<double>::infinity();
  double xmax = -xmin;
  double ymin = xmin;
  double ymax = -xmin;
  for (const auto* set : {&pts, &markers}) {
    for (const auto& [x, y] : *set) {
      xmin = std::min(xmin, x);
      xmax = std::max(xmax, x);
      ymin = std::min(ymin, y);
      ymax = std::max(ymax, y);
    }
  }
  if (!std::isfinite(xmin)) xmin = xmax = ymin = ymax = 0.0;
  if (equal_aspect) {
    const double span = std::max(xmax - xmin, ymax - ymin);
    xmax = xmin + span;
    ymax = ymin + span;
  }
  const Axis ax{xmin, xmax, kPad, kW - kPad};
  const Axis ay{ymin, ymax, kH - kPad, kPad};

  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kW << "\" height=\"" << kH
      << "\" viewBox=\"0 0 " << kW << ' ' << kH << "\">\n"
      << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
      << "<text x=\"" << kPad << "\" y=\"24\" font-family=\"sans-serif\" font-size=\"14\">" << title
      << "</text>\n"
      << "<rect x=\"" << kPad << "\" y=\"" << kPad << "\" width=\"" << kW - 2 * kPad
      << "\" height=\"" << kH - 2 * kPad << "\" fill=\"none\" stroke=\"#999\"/>\n"
      << "<polyline fill=\"none\" stroke=\"#1f77b4\" stroke-width=\"1.5\" points=\"";
  for (const auto& [x, y] : pts) svg << ax(x) << ',' << ay(y) << ' ';
  svg << "\"/>\n";
  for (const auto& [x, y] : markers) {
    svg << "<circle cx=\"" << ax(x) << "\" cy=\"" << ay(y) << "\" r=\"4\" fill=\"#d62728\"/>\n";
  }
  svg << "</svg>\n";
  return svg.str();
}

}  // namespace

std::string format_double(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

ojson to_json(const TelemetryRecord& r) {
  ojson doc;
  doc["tick"] = r.tick;
  doc["time"] = r.time;
  doc["state"] = {{"x", r.state.x},         {"y", r.state.y},       {"heading", r.state.heading},
                  {"surge", r.state.surge}, {"sway", r.state.sway}, {"yaw_rate", r.state.yaw_rate}};
  doc["target"] = {{"x", r.target.x}, {"y", r.target.y}};
  doc["thrust"] = {{"left", r.thrust.left}, {"right", r.thrust.right}};
  if (r.detection) {
    const Detection& d = *r.detection;
    doc["detection"] = {{"center_x", d.center_x}, {"center_y", d.center_y},
                        {"box_w", d.box_w},       {"box_h", d.box_h},
                        {"confidence", d.confidence}, {"depth", d.depth}};
  } else {
    doc["detection"] = nullptr;
  }
  doc["pixel_error"] = optional_number(r.pixel_error);
  if (r.pid) {
    doc["pid"] = {{"p", r.pid->p}, {"i", r.pid->i}, {"d", r.pid->d}};
  } else {
    doc["pid"] = nullptr;
  }
  doc["mode"] = std::string(to_string(r.mode));
  doc["phase"] = std::string(to_string(r.phase));
  doc["depth"] = optional_number(r.depth);
  doc["range"] = r.range;
  doc["disturbance"] = {{"fx", r.disturbance.force_x},
                        {"fy", r.disturbance.force_y},
                        {"moment", r.disturbance.moment}};
  doc["event"] = r.event;
  return doc;
}

TelemetryRecord record_from_json(const json& doc) {
  TelemetryRecord r;
  r.tick = doc.at("tick").get<long>();
  r.time = doc.at("time").get<double>();
  const json& s = doc.at("state");
  r.state = {s.at("x").get<double>(),     s.at("y").get<double>(),    s.at("heading").get<double>(),
             s.at("surge").get<double>(), s.at("sway").get<double>(), s.at("yaw_rate").get<double>()};
  r.target = {doc.at("target").at("x").get<double>(), doc.at("target").at("y").get<double>()};
  r.thrust = {doc.at("thrust").at("left").get<double>(), doc.at("thrust").at("right").get<double>()};
  if (const json& d = doc.at("detection"); !d.is_null()) {
    r.detection = Detection{d.at("center_x").get<double>(), d.at("center_y").get<double>(),
                            d.at("box_w").get<double>(),    d.at("box_h").get<double>(),
                            d.at("confidence").get<double>(), d.at("depth").get<double>()};
  }
  r.pixel_error = read_optional(doc, "pixel_error");
  if (const json& p = doc.at("pid"); !p.is_null()) {
    r.pid = PidTerms{p.at("p").get<double>(), p.at("i").get<double>(), p.at("d").get<double>()};
  }
  r.mode = parse_mode(doc.at("mode").get<std::string>());
  r.phase = parse_phase(doc.at("phase").get<std::string>());
  r.depth = read_optional(doc, "depth");
  r.range = doc.at("range").get<double>();
  const json& dist = doc.at("disturbance");
  r.disturbance = {dist.at("fx").get<double>(), dist.at("fy").get<double>(),
                   dist.at("moment").get<double>()};
  r.event = doc.value("event", "");
  return r;
}

ojson to_json(const Metrics& m) {
  ojson doc;
  doc["schema_version"] = kTelemetrySchemaVersion;
  doc["success"] = m.success;
  doc["time_to_intercept"] = optional_number(m.time_to_intercept);
  doc["settling_time"] = optional_number(m.settling_time);
  doc["rms_pixel_error_after_settling"] = optional_number(m.rms_pixel_error_after_settling);
  doc["max_overshoot"] = m.max_overshoot;
  doc["path_length"] = m.path_length;
  doc["final_depth"] = optional_number(m.final_depth);
  return doc;
}

Metrics metrics_from_json(const json& doc) {
  Metrics m;
  m.success = doc.at("success").get<bool>();
  m.time_to_intercept = read_optional(doc, "time_to_intercept");
  m.settling_time = read_optional(doc, "settling_time");
  m.rms_pixel_error_after_settling = read_optional(doc, "rms_pixel_error_after_settling");
  m.max_overshoot = doc.at("max_overshoot").get<double>();
  m.path_length = doc.at("path_length").get<double>();
  m.final_depth = read_optional(doc, "final_depth");
  return m;
}

std::string to_jsonl_line(const TelemetryRecord& rec) { return to_json(rec).dump(); }

void write_jsonl(std::ostream& out, const std::vector<TelemetryRecord>& telemetry) {
  for (const auto& rec : telemetry) out << to_jsonl_line(rec) << '\n';
}

std::vector<TelemetryRecord> read_jsonl(std::istream& in) {
  std::vector<TelemetryRecord> out;
  std::string line;
  long line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      out.push_back(record_from_json(json::parse(line)));
    } catch (const std::exception& e) {
      throw ValidationError(std::string("malformed telemetry record: ") + e.what(),
                            "line " + std::to_string(line_no));
    }
    if (out.size() > 1 && out.back().tick <= out[out.size() - 2].tick) {
      throw ValidationError("tick numbers must increase", "line " + std::to_string(line_no));
    }
  }
  return out;
}

std::vector<TelemetryRecord> read_jsonl(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open telemetry file: " + path.string());
  return read_jsonl(in);
}

const std::vector<std::string>& csv_columns() {
  static const std::vector<std::string> columns = {
      "tick",       "time",       "x",          "y",           "heading",     "surge",
      "sway",       "yaw_rate",   "target_x",   "target_y",    "thrust_left", "thrust_right",
      "detected",   "center_x",   "center_y",   "box_w",       "box_h",       "confidence",
      "depth",      "pixel_error", "pid_p",     "pid_i",       "pid_d",       "mode",
      "phase",      "range",      "dist_fx",    "dist_fy",     "dist_moment", "event"};
  return columns;
}

void write_csv(std::ostream& out, const std::vector<TelemetryRecord>& telemetry) {
  const auto& cols = csv_columns();
  for (std::size_t i = 0; i < cols.size(); ++i) out << (i ? "," : "") << cols[i];
  out << '\n';
  for (const auto& r : telemetry) {
    const auto f = [](double v) { return format_double(v); };
    const Detection* d = r.detection ? &*r.detection : nullptr;
    out << r.tick << ',' << f(r.time) << ',' << f(r.state.x) << ',' << f(r.state.y) << ','
        << f(r.state.heading) << ',' << f(r.state.surge) << ',' << f(r.state.sway) << ','
        << f(r.state.yaw_rate) << ',' << f(r.target.x) << ',' << f(r.target.y) << ','
        << f(r.thrust.left) << ',' << f(r.thrust.right) << ',' << (d ? 1 : 0) << ','
        << (d ? f(d->center_x) : "") << ',' << (d ? f(d->center_y) : "") << ','
        << (d ? f(d->box_w) : "") << ',' << (d ? f(d->box_h) : "") << ','
        << (d ? f(d->confidence) : "") << ',' << csv_optional(r.depth) << ','
        << csv_optional(r.pixel_error) << ',' << (r.pid ? f(r.pid->p) : "") << ','
        << (r.pid ? f(r.pid->i) : "") << ',' << (r.pid ? f(r.pid->d) : "") << ','
        << to_string(r.mode) << ',' << to_string(r.phase) << ',' << f(r.range) << ','
        << f(r.disturbance.force_x) << ',' << f(r.disturbance.force_y) << ','
        << f(r.disturbance.moment) << ',' << r.event << '\n';
  }
}

void write_plot_csv(std::ostream& out, const std::vector<TelemetryRecord>& telemetry) {
  out << "time,x,y,target_x,target_y,pixel_error,range\n";
  for (const auto& r : telemetry) {
    out << format_double(r.time) << ',' << format_double(r.state.x) << ','
        << format_double(r.state.y) << ',' << format_double(r.target.x) << ','
        << format_double(r.target.y) << ',' << csv_optional(r.pixel_error) << ','
        << format_double(r.range) << '\n';
  }
}

std::string trajectory_svg(const std::vector<TelemetryRecord>& telemetry) {
  std::vector<std::pair<double, double>> path;
  std::vector<std::pair<double, double>> target;
  for (const auto& r : telemetry) path.emplace_back(r.state.x, r.state.y);
  if (!telemetry.empty()) target.emplace_back(telemetry.back().target.x, telemetry.back().target.y);
  return svg_chart("trajectory (m)", path, target, true);
}

std::string pixel_error_svg(const std::vector<TelemetryRecord>& telemetry) {
  std::vector<std::pair<double, double>> series;
  for (const auto& r : telemetry) {
    if (r.pixel_error) series.emplace_back(r.time, *r.pixel_error);
  }
  return svg_chart("pixel error (px) vs time (s)", series, {}, false);
}

void write_file_atomic(const std::filesystem::path& path, const std::string& contents) {
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + tmp.string());
    out << contents;
    out.flush();
    if (!out) throw std::runtime_error("write failed: " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

}  // namespace marinex
