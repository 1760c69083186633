#include <cmath>
#include <limits>
#include <sstream>
#include <string>

#include <pybind11/eigen.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "vids/errors.hpp"
#include "vids/harness.hpp"

namespace py = pybind11;
using namespace vids;

namespace {

py::array_t<double> column(const std::vector<double>& v) { return py::array_t<double>(v.size(), v.data()); }

py::dict simulate(const RunConfig& cfg) {
  auto scenario = sim::generate_scenario(cfg.seed, cfg.scenario.duration_s, cfg.scenario.style);
  scenario.noise_std = cfg.scenario.noise_std;
  scenario.interpolation = cfg.scenario.interpolation;
  const auto log = sim::run_log(cfg.vehicle, scenario);

  std::vector<double> t, throttle, brake, steer, speed, yaw, accel, m_accel, m_speed, m_yaw, label;
  for (const auto& r : log) {
    t.push_back(r.state.time_s);
    throttle.push_back(r.cmd.throttle);
    brake.push_back(r.cmd.brake);
    steer.push_back(r.cmd.steer);
    speed.push_back(r.state.speed_mps);
    yaw.push_back(r.state.yaw_rate_rps);
    accel.push_back(r.state.accel_mps2);
    m_accel.push_back(r.meas.accel_mps2);
    m_speed.push_back(r.meas.speed_mps);
    m_yaw.push_back(r.meas.yaw_rate_rps);
    label.push_back(r.accel_label);
  }
  py::dict out;
  out["time_s"] = column(t);
  out["throttle"] = column(throttle);
  out["brake"] = column(brake);
  out["steer"] = column(steer);
  out["speed"] = column(speed);
  out["yaw_rate"] = column(yaw);
  out["accel"] = column(accel);
  out["meas_accel"] = column(m_accel);
  out["meas_speed"] = column(m_speed);
  out["meas_yaw"] = column(m_yaw);
  out["accel_next"] = column(label);
  return out;
}

py::dict trace_dict(const EstimatorTrace& trace) {
  const auto n = static_cast<py::ssize_t>(trace.residuals.size());
  py::array_t<double> residuals({n, py::ssize_t{3}});
  auto r = residuals.mutable_unchecked<2>();
  for (py::ssize_t k = 0; k < n; ++k) {
    const auto& v = trace.residuals[static_cast<std::size_t>(k)];
    for (py::ssize_t j = 0; j < 3; ++j) r(k, j) = v ? (*v)[j] : std::numeric_limits<double>::quiet_NaN();
  }
  py::dict out;
  out["residuals"] = residuals;
  out["s1"] = column(trace.s1);
  out["s2"] = column(trace.s2);
  out["alarm"] = py::array_t<int>(trace.alarm.size(), trace.alarm.data());
  if (trace.kind == EstimatorKind::ukf_ml) {
    out["online_rate"] = column(trace.online_rate);
    out["online_step"] = column(trace.online_step);
  }
  return out;
}

py::list sweep_rows(const std::vector<SweepRow>& rows) {
  py::list out;
  for (const auto& row : rows) {
    py::dict d;
    d["estimator"] = to_string(row.estimator);
    d["t1"] = row.t1;
    d["t2"] = row.t2;
    d["tp"] = row.metrics.tp_rate;
    d["fp"] = row.metrics.fp_rate;
    d["tn"] = row.metrics.tn_rate;
    d["fn"] = row.metrics.fn_rate;
    d["f1"] = row.metrics.f1;
    out.append(d);
  }
  return out;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Residual-based vehicle intrusion detection: simulator, filters, detector and harness.";

  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<RuntimeError>(m, "VidsRuntimeError", PyExc_RuntimeError);

  py::class_<RunConfig>(m, "Config")
      .def(py::init<>())
      .def_static("from_text", &parse_config, py::arg("text"))
      .def_static("load", &load_config, py::arg("path"))
      .def_readwrite("seed", &RunConfig::seed)
      .def_property(
          "duration_s", [](const RunConfig& c) { return c.scenario.duration_s; },
          [](RunConfig& c, double v) { c.scenario.duration_s = v; })
      .def_property(
          "epochs", [](const RunConfig& c) { return c.train.train.epochs; },
          [](RunConfig& c, int v) { c.train.train.epochs = v; })
      .def_property(
          "attack_enabled", [](const RunConfig& c) { return c.attack.enabled; },
          [](RunConfig& c, bool v) { c.attack.enabled = v; })
      .def_property(
          "sweep_scale", [](const RunConfig& c) { return c.sweep.scale; },
          [](RunConfig& c, double v) { c.sweep.scale = v; })
      .def("validate", &RunConfig::validate)
      .def("t1_list", [](const RunConfig& c) { return c.sweep.t1_list(); });

  py::class_<ml::MlpModel>(m, "Model")
      .def_static("load", py::overload_cast<const std::string&>(&ml::load_model), py::arg("path"))
      .def("save", [](const ml::MlpModel& model, const std::string& path) { ml::save_model(model, path); })
      .def("parameters", [](const ml::MlpModel& model) { return Eigen::VectorXd(model.flatten()); })
      .def_readonly("seed", &ml::MlpModel::seed);

  py::class_<ExperimentResult>(m, "Run")
      .def_property_readonly("time_s",
                             [](const ExperimentResult& r) {
                               std::vector<double> t;
                               for (const auto& row : r.rows) t.push_back(row.t);
                               return column(t);
                             })
      .def_property_readonly("attack_active",
                             [](const ExperimentResult& r) {
                               std::vector<int> a;
                               for (const auto& row : r.rows) a.push_back(row.attack_active ? 1 : 0);
                               return py::array_t<int>(a.size(), a.data());
                             })
      .def("estimators",
           [](const ExperimentResult& r) {
             std::vector<std::string> names;
             for (const auto& t : r.traces) names.emplace_back(to_string(t.kind));
             return names;
           })
      .def("trace", [](const ExperimentResult& r, const std::string& name) {
        for (const auto& t : r.traces)
          if (name == to_string(t.kind)) return trace_dict(t);
        throw ConfigError("no estimator named '" + name + "' in this run");
      });

  m.def("simulate", &simulate, py::arg("config"), "Attack-free rollout of the configured scenario.");
  m.def(
      "train",
      [](const RunConfig& cfg) {
        const auto r = train_model(cfg);
        std::vector<double> train_mse, val_mse;
        for (const auto& p : r.curve) {
          train_mse.push_back(p.train_mse);
          val_mse.push_back(p.val_mse);
        }
        py::dict curve;
        curve["train_mse"] = column(train_mse);
        curve["val_mse"] = column(val_mse);
        return py::make_tuple(r.model, curve);
      },
      py::arg("config"), "Train the dynamics network; returns (model, loss curve).");
  m.def(
      "run",
      [](const RunConfig& cfg, const ml::MlpModel* model) {
        py::gil_scoped_release release;
        return run_experiment(cfg, model);
      },
      py::arg("config"), py::arg("model") = nullptr);
  m.def(
      "sweep",
      [](const ExperimentResult& result, const RunConfig& cfg) {
        const auto s = sweep_thresholds(result, cfg.detector, cfg.sweep.t1_list());
        py::dict out;
        out["rows"] = sweep_rows(s.rows);
        out["best"] = sweep_rows(s.best);
        return out;
      },
      py::arg("run"), py::arg("config"));
  m.def(
      "metrics_json",
      [](const ExperimentResult& result, const RunConfig& cfg) { return run_metrics_json(result, cfg).dump(); },
      py::arg("run"), py::arg("config"));
  m.def("unify_control", &unify_control, py::arg("throttle"), py::arg("brake"));
  m.def(
      "adaptive_rate",
      [](const Eigen::VectorXd& residual, double s_rate) { return ml::adaptive_rate(residual, s_rate); },
      py::arg("residual"), py::arg("s_rate") = 1.0);
}
