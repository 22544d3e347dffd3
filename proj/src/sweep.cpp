#include "marinex/sweep.hpp"

#include <atomic>
#include <cmath>
#include <limits>
#include <ostream>
#include <thread>

#include "marinex/error.hpp"
#include "marinex/telemetry_io.hpp"

namespace marinex {
namespace {

double mean(double sum, int n) {
  return n > 0 ? sum / n : std::numeric_limits<double>::quiet_NaN();
}

std::string csv_value(const nlohmann::json& v) {
  if (v.is_number_float()) return format_double(v.get<double>());
  if (v.is_string()) return v.get<std::string>();
  return v.dump();
}

}  // namespace

SweepResult sweep(const Scenario& base, const std::string& axis,
                  const std::vector<nlohmann::json>& values,
                  const std::vector<std::uint64_t>& seeds, unsigned workers) {
  if (values.empty()) throw ValidationError("at least one value is required", "values");
  if (seeds.empty()) throw ValidationError("at least one seed is required", "seeds");

  // Build every scenario up front so axis errors surface before any run.
  std::vector<Scenario> variants;
  const auto doc = scenario_to_json(base);
  for (const auto& value : values) {
    auto edited = doc;
    set_field(edited, axis, value);
    variants.push_back(scenario_from_json(nlohmann::json::parse(edited.dump())));
  }

  const std::size_t total = variants.size() * seeds.size();
  std::vector<Metrics> metrics(total);
  std::atomic<std::size_t> next{0};
  const auto worker = [&] {
    for (std::size_t job = next++; job < total; job = next++) {
      Scenario s = variants[job / seeds.size()];
      s.seed = seeds[job % seeds.size()];
      metrics[job] = run(s).metrics;
    }
  };

  if (workers == 0) workers = std::max(1u, std::thread::hardware_concurrency());
  workers = static_cast<unsigned>(std::min<std::size_t>(workers, total));
  std::vector<std::thread> pool;
  for (unsigned w = 1; w < workers; ++w) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();

  SweepResult result;
  result.axis = axis;
  result.seeds = seeds;
  for (std::size_t v = 0; v < variants.size(); ++v) {
    SweepCell cell;
    cell.value = values[v];
    double tti = 0.0;
    double settle = 0.0;
    double rms = 0.0;
    double path = 0.0;
    int settled = 0;
    for (std::size_t k = 0; k < seeds.size(); ++k) {
      const Metrics& m = metrics[v * seeds.size() + k];
      cell.per_seed.push_back(m);
      ++cell.runs;
      path += m.path_length;
      if (!m.success) continue;
      ++cell.successes;
      tti += *m.time_to_intercept;
      if (m.settling_time) {
        ++settled;
        settle += *m.settling_time;
        rms += *m.rms_pixel_error_after_settling;
      }
    }
    cell.success_rate = static_cast<double>(cell.successes) / cell.runs;
    cell.mean_time_to_intercept = mean(tti, cell.successes);
    cell.mean_settling_time = mean(settle, settled);
    cell.mean_rms_pixel_error = mean(rms, settled);
    cell.mean_path_length = path / cell.runs;
    result.cells.push_back(std::move(cell));
  }
  return result;
}

void write_sweep_csv(std::ostream& out, const SweepResult& r) {
  out << r.axis << ",runs,successes,success_rate,mean_time_to_intercept,mean_settling_time,"
               "mean_rms_pixel_error,mean_path_length\n";
  const auto opt = [](double v) { return std::isnan(v) ? std::string() : format_double(v); };
  for (const auto& c : r.cells) {
    out << csv_value(c.value) << ',' << c.runs << ',' << c.successes << ','
        << format_double(c.success_rate) << ',' << opt(c.mean_time_to_intercept) << ','
        << opt(c.mean_settling_time) << ',' << opt(c.mean_rms_pixel_error) << ','
        << format_double(c.mean_path_length) << '\n';
  }
}

}  // namespace marinex
