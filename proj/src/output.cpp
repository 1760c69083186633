#include <charconv>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <ostream>

#include "vids/errors.hpp"
#include "vids/harness.hpp"

namespace vids {

std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

namespace {

using nlohmann::json;

void write_vehicle_columns(std::ostream& out, double t, const sim::ControlCommand& cmd,
                           const sim::VehicleState& s, const sim::Measurement& m) {
  out << format_double(t) << ',' << format_double(cmd.throttle) << ',' << format_double(cmd.brake) << ','
      << format_double(cmd.steer) << ',' << format_double(cmd.unified()) << ',' << format_double(s.speed_mps)
      << ',' << format_double(s.yaw_rate_rps) << ',' << format_double(s.accel_mps2) << ','
      << format_double(m.accel_mps2) << ',' << format_double(m.speed_mps) << ','
      << format_double(m.yaw_rate_rps);
}

constexpr const char* kVehicleHeader =
    "time_s,throttle,brake,steer,u,speed,yaw_rate,accel,meas_accel,meas_speed,meas_yaw";

json nullable(bool defined, double v) { return defined ? json(v) : json(nullptr); }

}  // namespace

void write_sim_csv(const std::vector<sim::LogRecord>& log, std::ostream& out) {
  out << kVehicleHeader << '\n';
  for (const auto& r : log) {
    write_vehicle_columns(out, r.state.time_s, r.cmd, r.state, r.meas);
    out << '\n';
  }
}

void write_run_csv(const ExperimentResult& result, EstimatorKind kind, std::ostream& out) {
  const EstimatorTrace& trace = result.trace(kind);
  out << kVehicleHeader << ",attack_active,r_accel,r_speed,r_yaw,s1,s2,alarm\n";
  for (std::size_t k = 0; k < result.rows.size(); ++k) {
    const auto& row = result.rows[k];
    write_vehicle_columns(out, row.t, row.cmd, row.state, row.meas);
    out << ',' << (row.attack_active ? 1 : 0);
    if (const auto& r = trace.residuals[k]) {
      out << ',' << format_double((*r)[0]) << ',' << format_double((*r)[1]) << ',' << format_double((*r)[2])
          << ',' << format_double(trace.s1[k]) << ',' << format_double(trace.s2[k]) << ',' << trace.alarm[k];
    } else {
      out << ",,,,,,";
    }
    out << '\n';
  }
}

void write_sweep_csv(const SweepResult& sweep, std::ostream& out) {
  out << "estimator,t1,t2,tp,fp,tn,fn,f1\n";
  for (const auto& r : sweep.rows) {
    const auto& m = r.metrics;
    out << to_string(r.estimator) << ',' << format_double(r.t1) << ',' << format_double(r.t2) << ','
        << format_double(m.tp_rate) << ',' << format_double(m.fp_rate) << ',' << format_double(m.tn_rate) << ','
        << format_double(m.fn_rate) << ',' << format_double(m.f1) << '\n';
  }
}

json metrics_json(const ConfusionCounts& c, double t1, double t2) {
  const bool pos = c.positives() > 0;
  const bool neg = c.negatives() > 0;
  const double p = static_cast<double>(c.positives());
  const double n = static_cast<double>(c.negatives());
  json j;
  j["t1"] = t1;
  j["t2"] = t2;
  j["tp_rate"] = nullable(pos, pos ? c.tp / p : 0.0);
  j["fn_rate"] = nullable(pos, pos ? c.fn / p : 0.0);
  j["tn_rate"] = nullable(neg, neg ? c.tn / n : 0.0);
  j["fp_rate"] = nullable(neg, neg ? c.fp / n : 0.0);
  if (pos && neg) {
    const double denom = static_cast<double>(2 * c.tp + c.fp + c.fn);
    j["f1"] = c.tp > 0 ? 2.0 * static_cast<double>(c.tp) / denom : 0.0;
  } else {
    j["f1"] = nullptr;
  }
  j["counts"] = {{"tp", c.tp}, {"fp", c.fp}, {"tn", c.tn}, {"fn", c.fn}};
  return j;
}

json run_metrics_json(const ExperimentResult& result, const RunConfig& cfg) {
  json j;
  j["schema"] = 1;
  j["seed"] = cfg.seed;
  j["steps"] = result.rows.size();
  for (const auto& trace : result.traces) {
    const auto labels = trace.labels(result.rows);
    const auto counts = count_labels(labels);
    json m = metrics_json(counts, cfg.detector.t1, cfg.detector.t2());
    if (trace.kind == EstimatorKind::ukf_ml) {
      m["online_updates"] = trace.online_updates;
      m["online_skipped"] = trace.online_skipped;
    }
    j["estimators"][to_string(trace.kind)] = m;
  }
  return j;
}

json report_json(const SweepResult& sweep, const RunConfig& cfg) {
  json j;
  j["schema"] = 1;
  j["seed"] = cfg.seed;
  for (const auto& b : sweep.best) {
    const auto& m = b.metrics;
    j["estimators"][to_string(b.estimator)] = {
        {"t1", b.t1},           {"t2", b.t2},           {"tp_rate", m.tp_rate}, {"fp_rate", m.fp_rate},
        {"tn_rate", m.tn_rate}, {"fn_rate", m.fn_rate}, {"f1", m.f1},
        {"counts", {{"tp", m.counts.tp}, {"fp", m.counts.fp}, {"tn", m.counts.tn}, {"fn", m.counts.fn}}}};
  }
  return j;
}

void write_file_atomic(const std::string& path, const std::string& contents) {
  namespace fs = std::filesystem;
  const fs::path target(path);
  if (target.has_parent_path()) fs::create_directories(target.parent_path());
  const fs::path tmp = target.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) throw RuntimeError("cannot write " + tmp.string());
    out << contents;
    if (!out) throw RuntimeError("write failed for " + tmp.string());
  }
  fs::rename(tmp, target);
}

}  // namespace vids
