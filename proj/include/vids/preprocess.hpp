#pragma once

namespace vids {

/// Fold throttle and brake (each in [0, 1]) into one signal in [0, 1]:
/// 0 is full braking, 0.5 neutral, 1 full throttle. Throws ConfigError on
/// out-of-range input.
double unify_control(double throttle, double brake);

}  // namespace vids
