#pragma once

#include <array>
#include <cmath>
#include <complex>
#include <span>
#include <string>
#include <vector>

#include "trafficeq/acceleration_law.hpp"
#include "trafficeq/errors.hpp"
#include "trafficeq/steady_state.hpp"

namespace trafficeq {

template <typename Scalar>
struct AmplificationRatio {
  std::complex<Scalar> value;
  Scalar magnitude;
  Scalar phase;
};

/// eps_N / eps_{N-1} = (Psi_s + i w Psi_dv) / (-w^2 - i w Psi_v + Psi_s + i w Psi_dv)
/// for partials taken at (v0, s0, 0).
template <typename Scalar>
AmplificationRatio<Scalar> amplification_ratio(const Partials<Scalar>& p, Scalar omega) {
  if (!(omega > Scalar(0))) throw DomainError("amplification_ratio: omega must be positive");
  using C = std::complex<Scalar>;
  const C num(p.s, omega * p.dv);
  const C den(p.s - omega * omega, omega * (p.dv - p.v));
  if (std::abs(den) < Scalar(1e-14)) throw EvaluationError("amplification_ratio: singular denominator");
  const C r = num / den;
  return {r, std::abs(r), std::arg(r)};
}

template <typename Scalar>
AmplificationRatio<Scalar> amplification_ratio(const AccelerationLaw<Scalar>& law, Scalar v0, Scalar s0,
                                               Scalar omega) {
  return amplification_ratio(partials_at(law, v0, s0, Scalar(0)), omega);
}

/// Printed criterion: Psi_v^2 > 2 Psi_s.
template <typename Scalar>
bool string_stability_paper(const Partials<Scalar>& p) {
  return p.v * p.v > Scalar(2) * p.s;
}

template <typename Scalar>
bool string_stability_paper(const AccelerationLaw<Scalar>& law, Scalar v0, Scalar s0) {
  return string_stability_paper(partials_at(law, v0, s0, Scalar(0)));
}

/// Psi_v^2 - 2 Psi_v Psi_dv - 2 Psi_s. From |den|^2 - |num|^2 = w^2 (w^2 + this),
/// the ratio stays below 1 for every w > 0 iff it is positive.
template <typename Scalar>
Scalar exact_string_criterion(const Partials<Scalar>& p) {
  return p.v * p.v - Scalar(2) * p.v * p.dv - Scalar(2) * p.s;
}

template <typename Scalar>
struct ExactStringStability {
  bool stable;
  Scalar criterion;
  Scalar worst_omega;
  Scalar worst_ratio;
  /// Verdict of the numeric sweep alone (worst ratio below one).
  bool sweep_stable;
};

/// Sweep range and probe count of the frequency search.
struct OmegaSweep {
  double omega_min = 1e-3;
  double omega_max = 1e3;
  int probes = 200;
};

template <typename Scalar>
ExactStringStability<Scalar> string_stability_exact(const Partials<Scalar>& p, OmegaSweep sweep = {}) {
  const Scalar lmin = std::log(Scalar(sweep.omega_min));
  const Scalar lmax = std::log(Scalar(sweep.omega_max));
  auto mag = [&](Scalar log_omega) { return amplification_ratio(p, std::exp(log_omega)).magnitude; };

  int best = 0;
  Scalar best_mag = -1;
  std::vector<Scalar> grid(sweep.probes);
  for (int i = 0; i < sweep.probes; ++i) {
    grid[i] = lmin + (lmax - lmin) * Scalar(i) / Scalar(sweep.probes - 1);
    const Scalar m = mag(grid[i]);
    if (m > best_mag) {
      best_mag = m;
      best = i;
    }
  }
  // Golden-section refinement on the bracketing probe interval.
  Scalar a = grid[std::max(best - 1, 0)];
  Scalar b = grid[std::min(best + 1, sweep.probes - 1)];
  const Scalar phi = (std::sqrt(Scalar(5)) - Scalar(1)) / Scalar(2);
  Scalar c = b - phi * (b - a), d = a + phi * (b - a);
  Scalar fc = mag(c), fd = mag(d);
  for (int it = 0; it < 100 && b - a > Scalar(1e-12); ++it) {
    if (fc > fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - phi * (b - a);
      fc = mag(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + phi * (b - a);
      fd = mag(d);
    }
  }
  Scalar worst_log = grid[best];
  Scalar worst = best_mag;
  const Scalar refined = Scalar(0.5) * (a + b);
  if (mag(refined) > worst) {
    worst = mag(refined);
    worst_log = refined;
  }
  const Scalar crit = exact_string_criterion(p);
  return {crit > Scalar(0), crit, std::exp(worst_log), worst, worst < Scalar(1)};
}

template <typename Scalar>
ExactStringStability<Scalar> string_stability_exact(const AccelerationLaw<Scalar>& law, Scalar v0,
                                                    Scalar s0, OmegaSweep sweep = {}) {
  return string_stability_exact(partials_at(law, v0, s0, Scalar(0)), sweep);
}

/**
Linear stability of the uniform state (k0, v0) of
v_t + v v_x = Psi(v, 1/k, v_x/k), k_t + (k v)_x = 0 against e^{i(m x - w t)}.
The dispersion relation is w^2 + (2 b1 + 2 i b2) w + (d1 + i d2) = 0.
*/
template <typename Scalar>
struct ContinuumStability {
  Scalar v0, s0, m;
  Partials<Scalar> partials;
  Scalar b1, b2, d1, d2;
  /// b2 > 0 and 4 b1 b2 d2 - 4 d1 b2^2 > d2^2.
  bool printed_stable;
  std::array<std::complex<Scalar>, 2> roots;
  /// Both roots strictly in the lower half plane.
  bool root_stable;
};

template <typename Scalar>
ContinuumStability<Scalar> continuum_linear_stability(const Partials<Scalar>& p, Scalar v0, Scalar s0,
                                                      Scalar m = Scalar(1)) {
  ContinuumStability<Scalar> out{};
  out.v0 = v0;
  out.s0 = s0;
  out.m = m;
  out.partials = p;
  out.b1 = -(Scalar(2) * v0 - p.dv * s0) * m / Scalar(2);
  out.b2 = -p.v / Scalar(2);
  out.d1 = (v0 - p.dv * s0) * v0 * m * m;
  out.d2 = (p.v * v0 + p.s * s0) * m;

  const Scalar lhs_a = Scalar(4) * out.b1 * out.b2 * out.d2;
  const Scalar lhs_b = Scalar(4) * out.d1 * out.b2 * out.b2;
  const Scalar rhs = out.d2 * out.d2;
  // The boundary case (e.g. optimal velocity laws on a flat branch) is exact
  // equality; round-off must not turn it into a strict pass.
  const Scalar tol = Scalar(1e-12) * (std::abs(lhs_a) + std::abs(lhs_b) + rhs);
  out.printed_stable = out.b2 > Scalar(0) && lhs_a - lhs_b - rhs > tol;

  using C = std::complex<Scalar>;
  const C B(Scalar(2) * out.b1, Scalar(2) * out.b2);
  const C Cc(out.d1, out.d2);
  const C disc = std::sqrt(B * B - Scalar(4) * Cc);
  // Pick the larger-magnitude root first, then Vieta, to avoid cancellation.
  const C q = -Scalar(0.5) * (B + (std::real(std::conj(B) * disc) >= 0 ? disc : -disc));
  const C r1 = q;
  const C r2 = std::abs(q) > Scalar(0) ? Cc / q : C(0);
  out.roots = {r1, r2};
  const Scalar scale = std::abs(B) + std::sqrt(std::abs(Cc)) + std::numeric_limits<Scalar>::min();
  const Scalar root_tol = Scalar(1e-10) * scale;
  out.root_stable = std::imag(r1) < -root_tol && std::imag(r2) < -root_tol;
  return out;
}

template <typename Scalar>
ContinuumStability<Scalar> continuum_linear_stability(const AccelerationLaw<Scalar>& law, Scalar k0,
                                                      Scalar m = Scalar(1)) {
  const auto eq = solve_equilibrium_speed(law, k0);
  if (!eq.ok()) throw DomainError("continuum_linear_stability: no unique steady state at this density");
  const Scalar s0 = Scalar(1) / k0;
  return continuum_linear_stability(partials_at(law, eq.speed, s0, Scalar(0)), eq.speed, s0, m);
}

/// Everything known about the steady state at one density.
template <typename Scalar>
struct StabilityReport {
  Scalar k0 = 0;
  Scalar v0 = 0;
  Scalar s0 = 0;
  Partials<Scalar> partials{};
  bool degenerate = false;
  bool paper_string_stable = false;
  bool exact_string_stable = false;
  Scalar exact_criterion = 0;
  Scalar worst_omega = 0;
  Scalar worst_ratio = 0;
  bool continuum_linear_stable = false;
  bool continuum_root_stable = false;
  std::string notes;
};

template <typename Scalar>
StabilityReport<Scalar> stability_report(const AccelerationLaw<Scalar>& law, Scalar k0) {
  StabilityReport<Scalar> r;
  r.k0 = k0;
  r.s0 = Scalar(1) / k0;
  const auto eq = solve_equilibrium_speed(law, k0);
  if (!eq.ok()) {
    r.degenerate = true;
    r.v0 = std::numeric_limits<Scalar>::quiet_NaN();
    r.notes = eq.status == EquilibriumStatus::Degenerate ? "degenerate steady state" : "no steady state";
    return r;
  }
  r.v0 = eq.speed;
  r.partials = partials_at(law, r.v0, r.s0, Scalar(0));
  r.paper_string_stable = string_stability_paper(r.partials);
  const auto exact = string_stability_exact(r.partials);
  r.exact_string_stable = exact.stable;
  r.exact_criterion = exact.criterion;
  r.worst_omega = exact.worst_omega;
  r.worst_ratio = exact.worst_ratio;
  const auto cont = continuum_linear_stability(r.partials, r.v0, r.s0);
  r.continuum_linear_stable = cont.printed_stable;
  r.continuum_root_stable = cont.root_stable;
  if (r.paper_string_stable != r.exact_string_stable)
    r.notes = "printed and exact string criteria disagree (Psi_v Psi_dv cross term)";
  if (eq.multiplicity > 1) r.notes += (r.notes.empty() ? "" : "; ") + std::string("multiple steady states");
  return r;
}

/// One row per density; degenerate rows carry no verdicts.
template <typename Scalar>
std::vector<StabilityReport<Scalar>> stability_map(const AccelerationLaw<Scalar>& law,
                                                   std::span<const Scalar> k_grid) {
  std::vector<StabilityReport<Scalar>> rows;
  rows.reserve(k_grid.size());
  for (const Scalar k : k_grid) rows.push_back(stability_report(law, k));
  return rows;
}

}  // namespace trafficeq
