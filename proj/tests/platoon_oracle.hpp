#pragma once

#include <cmath>
#include <numbers>

#include "trafficeq/platoon.hpp"

namespace trafficeq::testing {

/// Follower speed amplitude over leader amplitude for a two-vehicle platoon
/// driven by v0 + eps sin(omega t), measured by projecting vehicle 1's speed
/// onto sin/cos over whole periods after `settle` seconds.
inline double measured_ratio(const AccelerationLaw<double>& law, double v0, double s0, double omega,
                             double eps, double dt = 0.01, double settle = 60.0, int periods = 4) {
  const double period = 2 * std::numbers::pi / omega;
  const long start = std::lround(settle / dt);
  const long window = std::lround(periods * period / dt);
  PlatoonState<double> init;
  init.x = Vector<double>::Zero(2);
  init.x(1) = -s0;
  init.v = Vector<double>::Constant(2, v0);
  if (law.order() == LawOrder::Third) init.a = Vector<double>::Zero(2);
  const auto run = simulate_continuous(law, init, Boundary<double>{LeaderProfile<double>::sinusoid(v0, eps, omega)},
                                       dt, start + window);
  const auto& S = run.surface;
  double a = 0, b = 0, mean = 0;
  for (long i = start; i < start + window; ++i) mean += S.speeds(i, 1);
  mean /= double(window);
  for (long i = start; i < start + window; ++i) {
    const double t = S.time(i);
    a += (S.speeds(i, 1) - mean) * std::sin(omega * t);
    b += (S.speeds(i, 1) - mean) * std::cos(omega * t);
  }
  return 2.0 * std::hypot(a, b) / double(window) / eps;
}

}  // namespace trafficeq::testing
