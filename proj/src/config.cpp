#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "vids/errors.hpp"
#include "vids/harness.hpp"

namespace vids {

namespace pt = boost::property_tree;

namespace {

std::string trim(std::string s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

double to_double(const std::string& key, const std::string& raw) {
  const std::string v = trim(raw);
  try {
    std::size_t used = 0;
    const double d = std::stod(v, &used);
    if (used == v.size()) return d;
  } catch (const std::exception&) {
  }
  throw ConfigError("key '" + key + "': expected a number, got '" + raw + "'");
}

std::vector<double> to_list(const std::string& key, const std::string& raw) {
  std::vector<double> out;
  std::string cleaned = raw;
  for (char& ch : cleaned) {
    if (ch == ';' || ch == '[' || ch == ']') ch = ',';
  }
  std::stringstream ss(cleaned);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (trim(item).empty()) continue;
    out.push_back(to_double(key, item));
  }
  return out;
}

Eigen::Vector3d to_vec3(const std::string& key, const std::string& raw) {
  const auto v = to_list(key, raw);
  if (v.size() != 3) throw ConfigError("key '" + key + "': expected 3 values");
  return {v[0], v[1], v[2]};
}

bool to_bool(const std::string& key, const std::string& raw) {
  const std::string v = trim(raw);
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  throw ConfigError("key '" + key + "': expected a boolean, got '" + raw + "'");
}

long to_int(const std::string& key, const std::string& raw) {
  const double d = to_double(key, raw);
  if (d != static_cast<double>(static_cast<long>(d))) throw ConfigError("key '" + key + "': expected an integer");
  return static_cast<long>(d);
}

// Reads one section, rejecting keys the handler does not recognise.
class Section {
 public:
  Section(const pt::ptree& tree, std::string name) : name_(std::move(name)) {
    for (const auto& [k, v] : tree) values_[k] = v.data();
  }

  template <class F>
  void get(const std::string& key, F&& apply) {
    seen_.insert(key);
    auto it = values_.find(key);
    if (it != values_.end()) {
      const std::string qualified = name_ + "." + key;
      apply(qualified, it->second);
    }
  }

  void finish() const {
    for (const auto& [k, v] : values_) {
      if (!seen_.count(k)) throw ConfigError("unknown key '" + k + "' in [" + name_ + "]");
    }
  }

 private:
  std::string name_;
  std::map<std::string, std::string> values_;
  std::set<std::string> seen_;
};

auto set_double(double& dst) {
  return [&dst](const std::string& k, const std::string& v) { dst = to_double(k, v); };
}

}  // namespace

std::vector<double> SweepSpec::t1_list() const {
  if (!explicit_t1.empty()) return explicit_t1;
  const double lo = t1_min * scale;
  const double hi = t1_max * scale;
  std::vector<double> out;
  if (count < 1) return out;
  if (count == 1) return {lo};
  for (int i = 0; i < count; ++i) out.push_back(lo + (hi - lo) * i / (count - 1));
  out.back() = hi;
  return out;
}

void RunConfig::validate() const {
  vehicle.validate();
  if (!(scenario.duration_s > 0.0)) throw ConfigError("scenario duration_s must be > 0");
  for (double s : scenario.noise_std) {
    if (!(s >= 0.0)) throw ConfigError("scenario noise_std must be >= 0");
  }
  const double window_s = detector.window_n * vehicle.dt_s;
  if (scenario.duration_s < window_s) throw ConfigError("scenario is shorter than the detector window");
  attack.actuator_schedule.validate();
  attack.sensor_schedule.validate();
  filter.ut.validate(3);
  filter.online.validate();
  if ((filter.q_proc_diag.array() < 0.0).any()) throw ConfigError("q_proc_diag must be >= 0");
  if (filter.r_meas_diag && (filter.r_meas_diag->array() <= 0.0).any())
    throw ConfigError("r_meas_diag must be > 0");
  detector.validate();
  if (detector.dim() != 3) throw ConfigError("detector weights must have 3 channels");
  if (sweep.t1_list().empty()) throw ConfigError("sweep threshold list is empty");
  for (double t : sweep.t1_list()) {
    if (!(t > 0.0)) throw ConfigError("sweep thresholds must be > 0");
  }
  if (sweep.explicit_t1.empty() && sweep.count < 1) throw ConfigError("sweep count must be >= 1");
  train.train.validate();
  if (train.scenarios < 1 || !(train.duration_s > 0.0)) throw ConfigError("train needs >= 1 scenario of positive duration");
  if (filter.estimator != EstimatorChoice::kf && !filter.model_file.empty()) {
    std::ifstream probe(filter.model_file);
    if (!probe) throw ConfigError("model file '" + filter.model_file + "' does not exist");
  }
}

Eigen::Matrix3d RunConfig::r_meas() const {
  Eigen::Vector3d d;
  if (filter.r_meas_diag) {
    d = *filter.r_meas_diag;
  } else {
    for (int i = 0; i < 3; ++i) d[i] = std::max(scenario.noise_std[i] * scenario.noise_std[i], 1e-6);
  }
  return d.asDiagonal();
}

RunConfig parse_config(const std::string& text) {
  pt::ptree tree;
  try {
    std::istringstream in(text);
    pt::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError(std::string("config syntax error: ") + e.what());
  }

  RunConfig cfg;
  static const std::set<std::string> kSections = {"vehicle", "scenario", "attack", "filter",
                                                  "detector", "sweep", "train"};
  for (const auto& [name, sub] : tree) {
    if (!kSections.count(name)) throw ConfigError("unknown config section [" + name + "]");
    if (sub.empty()) throw ConfigError("config key '" + name + "' must be inside a section");
  }
  auto section = [&](const std::string& name) {
    const auto child = tree.get_child_optional(name);
    return Section(child ? *child : pt::ptree{}, name);
  };

  {
    auto s = section("vehicle");
    auto& v = cfg.vehicle;
    s.get("mass_kg", set_double(v.mass_kg));
    s.get("air_drag_coeff", set_double(v.air_drag_coeff));
    s.get("roll_coeff", set_double(v.roll_coeff));
    s.get("grade_angle_rad", set_double(v.grade_angle_rad));
    s.get("dt_s", set_double(v.dt_s));
    s.get("max_traction_accel", set_double(v.max_traction_accel));
    s.get("steer_gain", set_double(v.steer_gain));
    s.get("yaw_time_constant_s", set_double(v.yaw_time_constant_s));
    s.finish();
  }
  {
    auto s = section("scenario");
    auto& sc = cfg.scenario;
    s.get("seed", [&](auto& k, auto& v) { cfg.seed = static_cast<std::uint64_t>(to_int(k, v)); });
    s.get("style", [&](auto&, auto& v) { sc.style = sim::parse_driving_style(trim(v)); });
    s.get("duration_s", set_double(sc.duration_s));
    s.get("noise_std", [&](auto& k, auto& v) {
      const auto n = to_vec3(k, v);
      sc.noise_std = {n[0], n[1], n[2]};
    });
    s.get("interpolation", [&](auto& k, auto& v) {
      const auto m = trim(v);
      if (m == "linear") sc.interpolation = sim::Interpolation::linear;
      else if (m == "hold") sc.interpolation = sim::Interpolation::hold;
      else throw ConfigError("key '" + k + "': expected linear or hold");
    });
    s.finish();
  }
  {
    auto s = section("attack");
    auto& a = cfg.attack;
    s.get("enabled", [&](auto& k, auto& v) { a.enabled = to_bool(k, v); });
    s.get("start_s", [&](auto& k, auto& v) { a.actuator_schedule.start_s = a.sensor_schedule.start_s = to_double(k, v); });
    s.get("period_s", [&](auto& k, auto& v) {
      a.actuator_schedule.pwm_period_s = a.sensor_schedule.pwm_period_s = to_double(k, v);
    });
    s.get("duty", [&](auto& k, auto& v) { a.actuator_schedule.pwm_duty = a.sensor_schedule.pwm_duty = to_double(k, v); });
    s.get("end_s", [&](auto& k, auto& v) { a.actuator_schedule.end_s = a.sensor_schedule.end_s = to_double(k, v); });
    s.get("sensor_start_s", set_double(a.sensor_schedule.start_s));
    s.get("sensor_period_s", set_double(a.sensor_schedule.pwm_period_s));
    s.get("sensor_duty", set_double(a.sensor_schedule.pwm_duty));
    s.get("sensor_end_s", set_double(a.sensor_schedule.end_s));
    s.get("targets", [&](auto&, auto& v) { a.targets = attacks::AttackTargets::parse(trim(v), 3, 3); });
    s.finish();
  }
  {
    auto s = section("filter");
    auto& f = cfg.filter;
    s.get("estimator", [&](auto& k, auto& v) {
      const auto e = trim(v);
      if (e == "kf") f.estimator = EstimatorChoice::kf;
      else if (e == "ukf_ml") f.estimator = EstimatorChoice::ukf_ml;
      else if (e == "both") f.estimator = EstimatorChoice::both;
      else throw ConfigError("key '" + k + "': expected kf, ukf_ml or both");
    });
    s.get("phi", set_double(f.ut.phi));
    s.get("kappa", set_double(f.ut.kappa));
    s.get("beta_prior", set_double(f.ut.beta_prior));
    s.get("q_proc_diag", [&](auto& k, auto& v) { f.q_proc_diag = to_vec3(k, v); });
    s.get("r_meas_diag", [&](auto& k, auto& v) { f.r_meas_diag = to_vec3(k, v); });
    s.get("s_rate", set_double(f.online.s_rate));
    s.get("online_adapt", [&](auto& k, auto& v) { f.online.enabled = to_bool(k, v); });
    s.get("online_lr", set_double(f.online.base_lr));
    s.get("kf_r_travel_n", set_double(f.kf_r_travel_n));
    s.get("model_file", [&](auto&, auto& v) { f.model_file = trim(v); });
    s.finish();
  }
  {
    auto s = section("detector");
    auto& d = cfg.detector;
    s.get("window_n", [&](auto& k, auto& v) { d.window_n = static_cast<int>(to_int(k, v)); });
    s.get("w_r1", [&](auto& k, auto& v) { d.w_r1 = to_vec3(k, v); });
    s.get("w_r2", [&](auto& k, auto& v) {
      const auto w = to_list(k, v);
      if (w.size() == 3) {
        d.w_r2 = Eigen::Vector3d(w[0], w[1], w[2]).asDiagonal();
      } else if (w.size() == 9) {
        d.w_r2 = Eigen::Map<const Eigen::Matrix<double, 3, 3, Eigen::RowMajor>>(w.data());
      } else {
        throw ConfigError("key '" + k + "': expected 3 (diagonal) or 9 (row-major) values");
      }
    });
    s.get("t1", set_double(d.t1));
    s.get("gamma", set_double(d.gamma));
    s.finish();
  }
  {
    auto s = section("sweep");
    auto& w = cfg.sweep;
    s.get("t1_min", set_double(w.t1_min));
    s.get("t1_max", set_double(w.t1_max));
    s.get("count", [&](auto& k, auto& v) { w.count = static_cast<int>(to_int(k, v)); });
    s.get("scale", set_double(w.scale));
    s.get("t1_list", [&](auto& k, auto& v) { w.explicit_t1 = to_list(k, v); });
    s.finish();
  }
  {
    auto s = section("train");
    auto& t = cfg.train;
    s.get("seed", [&](auto& k, auto& v) { t.train.seed = static_cast<std::uint64_t>(to_int(k, v)); });
    s.get("epochs", [&](auto& k, auto& v) { t.train.epochs = static_cast<int>(to_int(k, v)); });
    s.get("batch_size", [&](auto& k, auto& v) { t.train.batch_size = static_cast<int>(to_int(k, v)); });
    s.get("learning_rate", set_double(t.train.base_lr));
    s.get("train_fraction", set_double(t.train.train_fraction));
    s.get("scenarios", [&](auto& k, auto& v) { t.scenarios = static_cast<int>(to_int(k, v)); });
    s.get("duration_s", set_double(t.duration_s));
    s.get("source", [&](auto& k, auto& v) {
      const auto m = trim(v);
      if (m == "measured") t.source = ml::SampleSource::measured;
      else if (m == "truth") t.source = ml::SampleSource::truth;
      else throw ConfigError("key '" + k + "': expected measured or truth");
    });
    s.finish();
  }
  cfg.validate();
  return cfg;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

}  // namespace vids
