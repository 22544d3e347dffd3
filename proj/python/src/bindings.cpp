// Python bindings. Structured values cross the boundary as JSON text; the
// marinex package turns them into dicts.

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "marinex/error.hpp"
#include "marinex/scenario.hpp"
#include "marinex/sensing.hpp"
#include "marinex/servo_controller.hpp"
#include "marinex/sim_engine.hpp"
#include "marinex/sweep.hpp"
#include "marinex/telemetry_io.hpp"
#include "marinex/vessel_dynamics.hpp"
#include "marinex/yolo_loss.hpp"

namespace py = pybind11;
using namespace marinex;
using json = nlohmann::json;
using ojson = nlohmann::ordered_json;

namespace {

std::filesystem::path dir_or_default(const std::string& dir) {
  return dir.empty() ? preset_directory() : std::filesystem::path(dir);
}

Scenario parse_scenario(const std::string& text) { return scenario_from_json(json::parse(text)); }

std::string telemetry_json(const std::vector<TelemetryRecord>& telemetry) {
  ojson arr = ojson::array();
  for (const auto& r : telemetry) arr.push_back(to_json(r));
  return arr.dump();
}

VesselParams params_from(const json& doc) {
  Scenario s;
  s = scenario_from_json({{"vessel", {{"params", doc}}}});
  return s.vessel;
}

VesselState state_from(const json& doc) {
  return scenario_from_json({{"vessel", {{"initial_state", doc}}}}).initial_state;
}

ojson state_json(const VesselState& s) {
  return {{"x", s.x}, {"y", s.y}, {"heading", s.heading},
          {"surge", s.surge}, {"sway", s.sway}, {"yaw_rate", s.yaw_rate}};
}

class PySimulation {
 public:
  explicit PySimulation(const std::string& scenario) : sim_(parse_scenario(scenario)) {}
  std::string tick() { return to_json(sim_.tick()).dump(); }
  bool finished() const { return sim_.finished(); }
  long next_tick() const { return sim_.next_tick(); }
  long tick_count() const { return sim_.tick_count(); }
  void set_mode(const std::string& mode) { sim_.set_mode(parse_mode(mode)); }
  void set_teleop(double left, double right) { sim_.set_teleop({left, right}); }
  void set_gains(double kp, double ki, double kd) { sim_.set_gains({kp, ki, kd}); }
  void reset() { sim_.reset_navigator(); }
  std::string mode() const { return std::string(to_string(sim_.navigator().mode)); }
  std::string phase() const { return std::string(to_string(sim_.navigator().phase)); }

 private:
  Simulation sim_;
};

}  // namespace

PYBIND11_MODULE(_marinex, m) {
  m.doc() = "marinex USV simulator core";

  py::register_exception<ValidationError>(m, "ValidationError", PyExc_ValueError);

  m.def("default_preset_dir", [] { return preset_directory().string(); });
  m.def("list_presets", [](const std::string& dir) { return list_presets(dir_or_default(dir)); },
        py::arg("dir") = "");
  m.def("load_preset",
        [](const std::string& name, const std::string& dir) {
          return scenario_to_json(load_preset(name, dir_or_default(dir))).dump();
        },
        py::arg("name"), py::arg("dir") = "");
  m.def("normalize_scenario", [](const std::string& text) {
    return scenario_to_json(parse_scenario(text)).dump();
  });

  m.def("run", [](const std::string& scenario) {
    RunResult r;
    {
      py::gil_scoped_release release;
      r = run(parse_scenario(scenario));
    }
    ojson doc;
    doc["metrics"] = to_json(r.metrics);
    doc["telemetry"] = json::parse(telemetry_json(r.telemetry));
    return doc.dump();
  });

  m.def("telemetry_jsonl", [](const std::string& scenario) {
    std::ostringstream out;
    write_jsonl(out, run(parse_scenario(scenario)).telemetry);
    return out.str();
  });

  m.def("compute_metrics", [](const std::string& jsonl) {
    std::istringstream in(jsonl);
    return to_json(compute_metrics(read_jsonl(in))).dump();
  });

  m.def("sweep",
        [](const std::string& scenario, const std::string& axis, const std::string& values,
           const std::vector<std::uint64_t>& seeds, unsigned workers) {
          const json vals = json::parse(values);
          if (!vals.is_array()) throw ValidationError("must be a JSON array", "values");
          SweepResult r;
          {
            py::gil_scoped_release release;
            r = sweep(parse_scenario(scenario), axis, {vals.begin(), vals.end()}, seeds, workers);
          }
          std::ostringstream csv;
          write_sweep_csv(csv, r);
          return csv.str();
        },
        py::arg("scenario"), py::arg("axis"), py::arg("values"), py::arg("seeds"),
        py::arg("workers") = 0);

  m.def("vessel_step",
        [](const std::string& state, double left, double right, double dt, const std::string& params) {
          const VesselParams p = params.empty() ? VesselParams{} : params_from(json::parse(params));
          return state_json(step(state_from(json::parse(state)), {left, right}, {}, dt, p)).dump();
        },
        py::arg("state"), py::arg("left"), py::arg("right"), py::arg("dt") = 0.02,
        py::arg("params") = "");
  m.def("steady_state_speed", [] { return steady_state_speed(VesselParams{}); });

  m.def("camera_bearing", [](const std::string& state, double tx, double ty) {
    return camera_bearing(state_from(json::parse(state)), tx, ty);
  });
  m.def("project_target", [](const std::string& state, double tx, double ty) -> py::object {
    TargetState t;
    t.x = tx;
    t.y = ty;
    const auto det = project_target(CameraModel{}, state_from(json::parse(state)), t);
    if (!det) return py::none();
    py::dict d;
    d["center_x"] = det->center_x;
    d["center_y"] = det->center_y;
    d["box_w"] = det->box_w;
    d["box_h"] = det->box_h;
    d["depth"] = det->depth;
    return d;
  });

  m.def("pid_update",
        [](double error, double dt, double kp, double ki, double kd, double integral,
           double prev_error, bool primed) {
          PidState s;
          s.integral = integral;
          s.prev_error = prev_error;
          s.primed = primed;
          const auto out = pid_update(s, {kp, ki, kd}, error, dt);
          py::dict d;
          d["u"] = out.u;
          d["p"] = out.terms.p;
          d["i"] = out.terms.i;
          d["d"] = out.terms.d;
          d["integral"] = out.state.integral;
          return d;
        },
        py::arg("error"), py::arg("dt"), py::arg("kp"), py::arg("ki"), py::arg("kd"),
        py::arg("integral") = 0.0, py::arg("prev_error") = 0.0, py::arg("primed") = false);

  m.def("evaluate_loss_fixture", [](const std::string& path) {
    ojson out = ojson::array();
    for (const auto& c : yolo::load_fixture(path)) {
      const auto b = yolo::evaluate(c.prediction, c.ground_truth, c.weights);
      out.push_back({{"name", c.name}, {"box", b.box}, {"cls", b.cls}, {"obj", b.obj}, {"total", b.total}});
    }
    return out.dump();
  });

  py::class_<PySimulation>(m, "Simulation")
      .def(py::init<const std::string&>())
      .def("tick", &PySimulation::tick)
      .def_property_readonly("finished", &PySimulation::finished)
      .def_property_readonly("next_tick", &PySimulation::next_tick)
      .def_property_readonly("tick_count", &PySimulation::tick_count)
      .def_property_readonly("mode", &PySimulation::mode)
      .def_property_readonly("phase", &PySimulation::phase)
      .def("set_mode", &PySimulation::set_mode)
      .def("set_teleop", &PySimulation::set_teleop)
      .def("set_gains", &PySimulation::set_gains)
      .def("reset", &PySimulation::reset);
}
