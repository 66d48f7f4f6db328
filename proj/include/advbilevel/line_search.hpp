#pragma once

#include <cmath>

namespace advbilevel {

struct BacktrackResult {
  double omega = 0.0;
  double value = 0.0;
  bool accepted = false;
};

/// Shrinks omega from `omega_start` by `shrink` until
///   eval(omega) < f0 + omega * slope_term
/// holds with a finite value, or omega drops below omega_min.
template <class Eval>
BacktrackResult backtrack(double f0, double slope_term, Eval&& eval, double omega_start,
                          double shrink, double omega_min) {
  double omega = omega_start;
  while (omega >= omega_min) {
    const double value = eval(omega);
    if (std::isfinite(value) && value < f0 + omega * slope_term) return {omega, value, true};
    omega *= shrink;
  }
  return {omega, 0.0, false};
}

}  // namespace advbilevel
