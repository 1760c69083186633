#include "vids/attacks.hpp"

#include <algorithm>
#include <cmath>
#include <regex>
#include <sstream>

#include "vids/errors.hpp"

namespace vids::attacks {

void AttackSchedule::validate() const {
  if (!(start_s >= 0.0)) throw ConfigError("attack start_s must be >= 0");
  if (!(pwm_period_s > 0.0)) throw ConfigError("attack period_s must be > 0");
  if (!(pwm_duty >= 0.0 && pwm_duty <= 1.0)) throw ConfigError("attack duty must be in [0, 1]");
  if (!(start_s < end_s)) throw ConfigError("attack start_s must be < end_s");
}

bool is_active(const AttackSchedule& schedule, double t) {
  if (t < schedule.start_s || t >= schedule.end_s) return false;
  if (schedule.pwm_duty <= 0.0) return false;
  if (schedule.pwm_duty >= 1.0) return true;
  const double phase = std::fmod(t - schedule.start_s, schedule.pwm_period_s);
  return phase < schedule.pwm_duty * schedule.pwm_period_s;
}

namespace {

std::vector<int> checked(std::vector<int> idx, int dim, const char* what) {
  std::sort(idx.begin(), idx.end());
  idx.erase(std::unique(idx.begin(), idx.end()), idx.end());
  for (int i : idx) {
    if (i < 1 || i > dim) {
      throw ConfigError(std::string(what) + " index " + std::to_string(i) + " outside 1.." +
                        std::to_string(dim));
    }
  }
  return idx;
}

std::vector<int> parse_list(const std::string& body) {
  std::vector<int> out;
  std::stringstream ss(body);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item.erase(std::remove_if(item.begin(), item.end(), ::isspace), item.end());
    if (item.empty()) continue;
    try {
      std::size_t used = 0;
      out.push_back(std::stoi(item, &used));
      if (used != item.size()) throw ConfigError("");
    } catch (const std::exception&) {
      throw ConfigError("bad attack target index '" + item + "'");
    }
  }
  return out;
}

std::string join(const std::vector<int>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + std::to_string(v[i]);
  return s;
}

Eigen::VectorXd mask(const Eigen::VectorXd& x, const std::vector<int>& idx, int dim, bool active,
                     const char* what) {
  if (x.size() != dim) throw ConfigError(std::string(what) + " vector has wrong dimension");
  if (!active) return x;
  Eigen::VectorXd out = x;
  for (int i : idx) out[i - 1] = 0.0;
  return out;
}

}  // namespace

AttackTargets::AttackTargets(std::vector<int> actuator_indices, std::vector<int> sensor_indices,
                             int actuator_dim, int sensor_dim)
    : actuator_(checked(std::move(actuator_indices), actuator_dim, "actuator")),
      sensor_(checked(std::move(sensor_indices), sensor_dim, "sensor")),
      p_(actuator_dim),
      m_(sensor_dim) {}

AttackTargets AttackTargets::parse(const std::string& text, int actuator_dim, int sensor_dim) {
  static const std::regex entry(R"((actuator|sensor)\s*:\s*\[([^\]]*)\])");
  std::vector<int> act, sen;
  std::string rest = text;
  for (std::sregex_iterator it(text.begin(), text.end(), entry), end; it != end; ++it) {
    auto& dst = (*it)[1] == "actuator" ? act : sen;
    auto parsed = parse_list((*it)[2]);
    dst.insert(dst.end(), parsed.begin(), parsed.end());
    rest.replace(rest.find(it->str()), it->str().size(), std::string(it->str().size(), ' '));
  }
  if (rest.find_first_not_of(" \t") != std::string::npos)
    throw ConfigError("cannot parse attack targets '" + text + "'");
  return AttackTargets(std::move(act), std::move(sen), actuator_dim, sensor_dim);
}

std::string AttackTargets::to_string() const {
  return "actuator:[" + join(actuator_) + "] sensor:[" + join(sensor_) + "]";
}

Eigen::VectorXd attack_actuator(const Eigen::VectorXd& cmd, const AttackTargets& targets, bool active) {
  return mask(cmd, targets.actuator_indices(), targets.actuator_dim(), active, "actuator");
}

Eigen::VectorXd attack_sensor(const Eigen::VectorXd& y, const AttackTargets& targets, bool active) {
  return mask(y, targets.sensor_indices(), targets.sensor_dim(), active, "sensor");
}

}  // namespace vids::attacks
