#include "vids/preprocess.hpp"

#include "vids/errors.hpp"

namespace vids {

double unify_control(double throttle, double brake) {
  if (!(throttle >= 0.0 && throttle <= 1.0)) throw ConfigError("throttle outside [0, 1]");
  if (!(brake >= 0.0 && brake <= 1.0)) throw ConfigError("brake outside [0, 1]");
  return (throttle - brake + 1.0) / 2.0;
}

}  // namespace vids
