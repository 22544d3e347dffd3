// marinex: headless entry point.
//
// Exit codes: 0 executed, 1 execution error (diagnostic on stderr),
// 2 bad usage, 3 mission failed under --require-success or replay mismatch.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"
#include "marinex/error.hpp"
#include "marinex/scenario.hpp"
#include "marinex/sim_engine.hpp"
#include "marinex/sweep.hpp"
#include "marinex/telemetry_io.hpp"
#include "marinex/yolo_loss.hpp"

#ifdef MARINEX_HAS_GATEWAY
#include "marinex/gateway_server.hpp"
#endif

namespace fs = std::filesystem;
using json = nlohmann::json;
using ojson = nlohmann::ordered_json;

namespace {

constexpr int kExitError = 1;
constexpr int kExitUsage = 2;
constexpr int kExitMission = 3;

struct ScenarioSource {
  std::string path;
  std::string preset;
  std::optional<std::uint64_t> seed;

  void add_to(CLI::App* app) {
    auto* s = app->add_option("--scenario", path, "Scenario JSON file");
    auto* p = app->add_option("--preset", preset, "Preset name (see `marinex presets`)");
    s->excludes(p);
    app->add_option("--seed", seed, "Override the scenario seed");
  }

  marinex::Scenario load() const {
    if (path.empty() && preset.empty()) {
      throw marinex::ValidationError("one of --scenario or --preset is required", "scenario");
    }
    marinex::Scenario s = path.empty() ? marinex::load_preset(preset) : marinex::load_scenario(path);
    if (seed) s.seed = *seed;
    marinex::validate(s);
    return s;
  }
};

std::string render(const std::function<void(std::ostream&)>& fn) {
  std::ostringstream out;
  fn(out);
  return out.str();
}

int cmd_run(const ScenarioSource& src, const std::string& out_dir, bool require_success, bool plot) {
  const marinex::Scenario scenario = src.load();
  const marinex::RunResult result = marinex::run(scenario);
  const fs::path dir(out_dir);
  fs::create_directories(dir);

  ojson files;
  const auto emit = [&](const std::string& key, const std::string& name, const std::string& text) {
    marinex::write_file_atomic(dir / name, text);
    files[key] = (dir / name).string();
  };
  emit("telemetry_jsonl", "telemetry.jsonl",
       render([&](std::ostream& o) { marinex::write_jsonl(o, result.telemetry); }));
  emit("telemetry_csv", "telemetry.csv",
       render([&](std::ostream& o) { marinex::write_csv(o, result.telemetry); }));
  emit("metrics", "metrics.json", marinex::to_json(result.metrics).dump(2) + "\n");
  if (plot) {
    emit("plot_csv", "plot.csv",
         render([&](std::ostream& o) { marinex::write_plot_csv(o, result.telemetry); }));
    emit("trajectory_svg", "trajectory.svg", marinex::trajectory_svg(result.telemetry));
    emit("pixel_error_svg", "pixel_error.svg", marinex::pixel_error_svg(result.telemetry));
  }

  const int status = require_success && !result.metrics.success ? kExitMission : 0;
  ojson report;
  report["schema_version"] = marinex::kTelemetrySchemaVersion;
  report["scenario"] = scenario.name;
  report["seed"] = scenario.seed;
  report["metrics"] = marinex::to_json(result.metrics);
  report["files"] = files;
  report["exit_status"] = status;
  marinex::write_file_atomic(dir / "report.json", report.dump(2) + "\n");
  std::cout << report.dump(2) << "\n";
  return status;
}

std::vector<json> parse_values(const std::vector<std::string>& raw) {
  std::vector<json> values;
  for (const auto& text : raw) {
    try {
      values.push_back(json::parse(text));
    } catch (const json::parse_error&) {
      values.emplace_back(text);  // bare words are strings
    }
  }
  return values;
}

int cmd_sweep(const ScenarioSource& src, const std::string& axis, const std::vector<std::string>& raw,
              int seed_count, std::uint64_t first_seed, unsigned workers, const std::string& out) {
  if (seed_count < 1) throw marinex::ValidationError("must be at least 1", "seeds");
  const marinex::Scenario base = src.load();
  std::vector<std::uint64_t> seeds;
  for (int i = 0; i < seed_count; ++i) seeds.push_back(first_seed + static_cast<std::uint64_t>(i));
  const auto result = marinex::sweep(base, axis, parse_values(raw), seeds, workers);
  const std::string table = render([&](std::ostream& o) { marinex::write_sweep_csv(o, result); });
  if (!out.empty()) marinex::write_file_atomic(out, table);
  std::cout << table;
  return 0;
}

int cmd_replay(const std::string& path, const std::string& metrics_path, bool plot,
               const std::string& out_dir) {
  const auto telemetry = marinex::read_jsonl(fs::path(path));
  if (telemetry.empty()) throw marinex::ValidationError("telemetry file has no records", path);
  const marinex::Metrics metrics = marinex::compute_metrics(telemetry);

  ojson summary;
  summary["schema_version"] = marinex::kTelemetrySchemaVersion;
  summary["records"] = telemetry.size();
  summary["first_tick"] = telemetry.front().tick;
  summary["last_tick"] = telemetry.back().tick;
  summary["duration"] = telemetry.back().time - telemetry.front().time;
  summary["metrics"] = marinex::to_json(metrics);

  int status = 0;
  fs::path stored = metrics_path;
  if (stored.empty()) stored = fs::path(path).parent_path() / "metrics.json";
  if (fs::exists(stored)) {
    std::ifstream in(stored);
    const marinex::Metrics expected = marinex::metrics_from_json(json::parse(in));
    summary["stored_metrics"] = stored.string();
    summary["metrics_match"] = expected == metrics;
    if (!(expected == metrics)) status = kExitMission;
  } else if (!metrics_path.empty()) {
    throw std::runtime_error("cannot open metrics file: " + metrics_path);
  }

  if (plot) {
    const std::string csv = render([&](std::ostream& o) { marinex::write_plot_csv(o, telemetry); });
    if (out_dir.empty()) {
      std::cout << csv;
      return status;
    }
    fs::create_directories(out_dir);
    marinex::write_file_atomic(fs::path(out_dir) / "plot.csv", csv);
    marinex::write_file_atomic(fs::path(out_dir) / "trajectory.svg", marinex::trajectory_svg(telemetry));
    marinex::write_file_atomic(fs::path(out_dir) / "pixel_error.svg", marinex::pixel_error_svg(telemetry));
    summary["plot_csv"] = (fs::path(out_dir) / "plot.csv").string();
  }
  std::cout << summary.dump(2) << "\n";
  return status;
}

int cmd_presets() {
  const auto dir = marinex::preset_directory();
  for (const auto& name : marinex::list_presets(dir)) {
    std::string description;
    try {
      description = marinex::load_preset(name, dir).description;
    } catch (const std::exception& e) {
      description = std::string("(invalid: ") + e.what() + ")";
    }
    std::cout << name << "\t" << description << "\n";
  }
  return 0;
}

int cmd_loss(const std::string& fixture, double tolerance) {
  int status = 0;
  ojson cases = ojson::array();
  for (const auto& c : marinex::yolo::load_fixture(fixture)) {
    const auto got = marinex::yolo::evaluate(c.prediction, c.ground_truth, c.weights);
    ojson entry;
    entry["name"] = c.name;
    entry["box"] = got.box;
    entry["cls"] = got.cls;
    entry["obj"] = got.obj;
    entry["total"] = got.total;
    if (c.has_expected) {
      const bool ok = std::abs(got.box - c.expected.box) <= tolerance &&
                      std::abs(got.cls - c.expected.cls) <= tolerance &&
                      std::abs(got.obj - c.expected.obj) <= tolerance &&
                      std::abs(got.total - c.expected.total) <= tolerance;
      entry["matches_expected"] = ok;
      if (!ok) status = kExitMission;
    }
    cases.push_back(entry);
  }
  std::cout << cases.dump(2) << "\n";
  return status;
}

#ifdef MARINEX_HAS_GATEWAY
int cmd_serve(const std::string& address, unsigned short port, double rate, bool headless,
              const std::string& static_dir) {
  marinex::GatewayOptions opts;
  opts.address = address;
  opts.port = port;
  opts.default_rate = rate;
  opts.pace = headless ? marinex::Pace::Headless : marinex::Pace::RealTime;
  opts.static_dir = static_dir;
  marinex::GatewayServer server(opts);
  std::cerr << "marinex gateway listening on http://" << address << ":" << server.port() << "\n";
  server.run();
  return 0;
}
#endif

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"marinex: USV simulator and control stack"};
  app.require_subcommand(1);

  ScenarioSource run_src;
  std::string run_out = "out";
  bool require_success = false;
  bool run_plot = false;
  auto* run = app.add_subcommand("run", "Run one scenario and write telemetry, CSV and metrics");
  run_src.add_to(run);
  run->add_option("--out", run_out, "Output directory")->capture_default_str();
  run->add_flag("--require-success", require_success, "Exit 3 when the mission does not reach HOLD");
  run->add_flag("--plot", run_plot, "Also write plot.csv and SVG charts");

  ScenarioSource sweep_src;
  std::string axis;
  std::vector<std::string> values;
  int seed_count = 1;
  std::uint64_t first_seed = 1;
  unsigned workers = 0;
  std::string sweep_out;
  auto* sweep = app.add_subcommand("sweep", "Run a scenario over an axis of values and seeds");
  sweep_src.add_to(sweep);
  sweep->add_option("--axis", axis, "Dotted scenario field, e.g. controller.speed_cap")->required();
  sweep->add_option("--values", values, "Axis values (JSON literals)")->required()->delimiter(',');
  sweep->add_option("--seeds", seed_count, "Number of seeds per value")->capture_default_str();
  sweep->add_option("--first-seed", first_seed, "First seed; seeds are consecutive")->capture_default_str();
  sweep->add_option("--workers", workers, "Worker threads (0 = all cores)")->capture_default_str();
  sweep->add_option("--out", sweep_out, "Also write the table to this CSV file");

  std::string replay_path;
  std::string replay_metrics;
  bool replay_plot = false;
  std::string replay_out;
  auto* replay = app.add_subcommand("replay", "Re-derive metrics from a telemetry JSONL file");
  replay->add_option("telemetry", replay_path, "telemetry.jsonl")->required();
  replay->add_option("--metrics", replay_metrics, "Stored metrics to compare (default: sibling metrics.json)");
  replay->add_flag("--plot", replay_plot, "Emit plot-ready CSV (stdout, or --out directory)");
  replay->add_option("--out", replay_out, "Directory for plot output");

  auto* presets = app.add_subcommand("presets", "List scenario presets");

  std::string fixture;
  double tolerance = 1e-12;
  auto* loss = app.add_subcommand("loss", "Evaluate detector loss fixtures");
  loss->add_option("fixture", fixture, "Fixture JSON")->required()->check(CLI::ExistingFile);
  loss->add_option("--tolerance", tolerance, "Absolute tolerance vs expected values")->capture_default_str();

#ifdef MARINEX_HAS_GATEWAY
  std::string address = "127.0.0.1";
  unsigned short port = 8080;
  double rate = 10.0;
  bool headless = false;
  std::string static_dir;
  auto* serve = app.add_subcommand("serve", "Start the HTTP/WebSocket gateway");
  serve->add_option("--port", port, "TCP port (0 = any free port)")->capture_default_str();
  serve->add_option("--address", address, "Bind address")->capture_default_str();
  serve->add_option("--rate", rate, "Default telemetry stream rate in Hz")->capture_default_str();
  serve->add_flag("--headless", headless, "Run sessions at maximum speed instead of wall clock");
  serve->add_option("--static", static_dir, "Directory served for non-API GET requests");
#endif

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : kExitUsage;
  }

  try {
    if (*run) return cmd_run(run_src, run_out, require_success, run_plot);
    if (*sweep) return cmd_sweep(sweep_src, axis, values, seed_count, first_seed, workers, sweep_out);
    if (*replay) return cmd_replay(replay_path, replay_metrics, replay_plot, replay_out);
    if (*presets) return cmd_presets();
    if (*loss) return cmd_loss(fixture, tolerance);
#ifdef MARINEX_HAS_GATEWAY
    if (*serve) return cmd_serve(address, port, rate, headless, static_dir);
#endif
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitError;
  }
  return 0;
}
