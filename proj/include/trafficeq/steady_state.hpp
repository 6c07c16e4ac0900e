#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "trafficeq/acceleration_law.hpp"
#include "trafficeq/errors.hpp"

namespace trafficeq {

enum class EquilibriumStatus { Root, Degenerate, NoRoot };

template <typename Scalar>
struct EquilibriumSolution {
  EquilibriumStatus status = EquilibriumStatus::NoRoot;
  Scalar speed = std::numeric_limits<Scalar>::quiet_NaN();
  /// Number of distinct roots detected on the probe grid.
  int multiplicity = 0;
  Scalar residual = std::numeric_limits<Scalar>::quiet_NaN();

  bool ok() const noexcept { return status == EquilibriumStatus::Root; }
};

/// Upper end of the equilibrium-speed bracket: twice the free speed, or 100 m/s.
template <typename Scalar>
Scalar equilibrium_bracket(const AccelerationLaw<Scalar>& law) {
  return law.traits().free_speed ? Scalar(2) * *law.traits().free_speed : Scalar(100);
}

/**
Solves Psi(v, 1/k, 0) = 0 for the smallest nonnegative v in the bracket.

A probe grid locates sign changes; each is refined by bisection and a final
Newton step. If Psi(., 1/k, 0) vanishes on the whole probe grid relative to
the law's acceleration scale (probing dv != 0 as well) the state is
Degenerate.
*/
template <typename Scalar>
EquilibriumSolution<Scalar> solve_equilibrium_speed(const AccelerationLaw<Scalar>& law, Scalar k,
                                                    int probes = 200) {
  if (!(k > Scalar(0))) throw DomainError("solve_equilibrium_speed: density must be positive");
  const Scalar s = Scalar(1) / k;
  const Scalar v_max = equilibrium_bracket(law);
  auto g = [&](Scalar v) { return law(v, s, Scalar(0)); };

  std::vector<Scalar> vs(probes + 1), gs(probes + 1);
  Scalar scale = 0, g_max = 0;
  const Scalar dv_probe = v_max / Scalar(20);
  for (int i = 0; i <= probes; ++i) {
    vs[i] = v_max * Scalar(i) / Scalar(probes);
    gs[i] = g(vs[i]);
    g_max = std::max(g_max, std::abs(gs[i]));
    scale = std::max({scale, std::abs(gs[i]), std::abs(law(vs[i], s, dv_probe)),
                      std::abs(law(vs[i], s, -dv_probe))});
  }
  if (scale == Scalar(0)) scale = 1;

  EquilibriumSolution<Scalar> out;
  if (g_max <= Scalar(1e-12) * scale) {
    out.status = EquilibriumStatus::Degenerate;
    return out;
  }

  bool found = false;
  for (int i = 0; i <= probes; ++i) {
    Scalar root;
    if (gs[i] == Scalar(0)) {
      root = vs[i];
    } else if (i < probes && gs[i + 1] != Scalar(0) && (gs[i] < 0) != (gs[i + 1] < 0)) {
      Scalar lo = vs[i], hi = vs[i + 1], glo = gs[i];
      for (int it = 0; it < 200 && hi - lo > std::numeric_limits<Scalar>::epsilon() * hi; ++it) {
        const Scalar mid = Scalar(0.5) * (lo + hi);
        const Scalar gm = g(mid);
        if (gm == Scalar(0)) {
          lo = hi = mid;
          break;
        }
        if ((gm < 0) == (glo < 0)) {
          lo = mid;
          glo = gm;
        } else {
          hi = mid;
        }
      }
      root = Scalar(0.5) * (lo + hi);
      const Scalar slope = partials_at(law, root, s, Scalar(0)).v;
      if (slope != Scalar(0) && std::isfinite(double(slope))) {
        const Scalar polished = root - g(root) / slope;
        if (polished >= vs[i] && polished <= vs[i + 1] && std::abs(g(polished)) < std::abs(g(root)))
          root = polished;
      }
    } else {
      continue;
    }
    ++out.multiplicity;
    if (!found) {
      found = true;
      out.speed = root;
      out.residual = g(root);
    }
  }
  out.status = found ? EquilibriumStatus::Root : EquilibriumStatus::NoRoot;
  return out;
}

/// Density of the IDM steady state at speed v:
/// k = (1/(d + tau v)) (1 - (v/v_f)^delta)^(1/2).
inline double idm_closed_form_density(double v, const IdmParams& p) {
  if (!(v >= 0.0 && v <= p.v_f)) throw DomainError("idm_closed_form_density: v outside [0, v_f]");
  return std::sqrt(1.0 - std::pow(v / p.v_f, p.delta)) / (p.d + p.tau * v);
}

template <typename Scalar>
struct SteadyStateSample {
  Scalar k;
  Scalar v;
  Scalar q;
  EquilibriumStatus status;
  int multiplicity;
};

template <typename Scalar>
struct SteadyStateCurve {
  std::string law_name;
  std::vector<SteadyStateSample<Scalar>> samples;
  bool degenerate = false;
  /// Adjacent samples where v increases with k (reported, not rejected).
  int monotonicity_violations = 0;
};

template <typename Scalar>
SteadyStateCurve<Scalar> fundamental_diagram_of(const AccelerationLaw<Scalar>& law,
                                                std::span<const Scalar> k_grid) {
  if (!std::is_sorted(k_grid.begin(), k_grid.end()))
    throw DomainError("fundamental_diagram_of: density grid must be sorted");
  SteadyStateCurve<Scalar> curve;
  curve.law_name = law.name();
  for (const Scalar k : k_grid) {
    const auto sol = solve_equilibrium_speed(law, k);
    if (sol.status == EquilibriumStatus::Degenerate) curve.degenerate = true;
    curve.samples.push_back({k, sol.speed, k * sol.speed, sol.status, sol.multiplicity});
  }
  for (std::size_t i = 1; i < curve.samples.size(); ++i) {
    const auto& a = curve.samples[i - 1];
    const auto& b = curve.samples[i];
    if (a.status == EquilibriumStatus::Root && b.status == EquilibriumStatus::Root &&
        b.v > a.v * (Scalar(1) + Scalar(1e-12)) + Scalar(1e-12))
      ++curve.monotonicity_violations;
  }
  return curve;
}

}  // namespace trafficeq
