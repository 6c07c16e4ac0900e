#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "trafficeq/errors.hpp"

namespace trafficeq {

enum class DiagramKind { Triangular, Greenshields, Tabulated };

inline const char* to_string(DiagramKind kind) {
  switch (kind) {
    case DiagramKind::Triangular: return "triangular";
    case DiagramKind::Greenshields: return "greenshields";
    case DiagramKind::Tabulated: return "tabulated";
  }
  return "unknown";
}

/**
Equilibrium flow-density relation q = phi(k) together with the equivalent
speed-spacing form theta(S) = S phi(1/S) and speed-density form
eta(k) = theta(1/k).

Immutable after construction. Densities are in veh/m, speeds in m/s.
*/
template <typename Scalar = double>
class FundamentalDiagram {
 public:
  using Sample = std::pair<Scalar, Scalar>;

  static FundamentalDiagram triangular(Scalar v_f, Scalar w, Scalar k_j) {
    require_positive(v_f, "v_f");
    require_positive(w, "w");
    require_positive(k_j, "k_j");
    return FundamentalDiagram(DiagramKind::Triangular, v_f, w, k_j, {});
  }

  static FundamentalDiagram greenshields(Scalar v_f, Scalar k_j) {
    require_positive(v_f, "v_f");
    require_positive(k_j, "k_j");
    return FundamentalDiagram(DiagramKind::Greenshields, v_f, Scalar(0), k_j, {});
  }

  /// Piecewise-linear (k, q) table. Must start at (0, 0), end at (k_j, 0),
  /// have strictly increasing k and nonnegative q.
  static FundamentalDiagram tabulated(std::vector<Sample> table) {
    if (table.size() < 3) throw ParameterError("tabulated diagram needs at least 3 samples");
    if (table.front().first != Scalar(0) || table.front().second != Scalar(0))
      throw ParameterError("tabulated diagram must start at (0, 0)");
    if (table.back().second != Scalar(0))
      throw ParameterError("tabulated diagram must end with zero flow at jam density");
    for (std::size_t i = 1; i < table.size(); ++i) {
      if (!(table[i].first > table[i - 1].first))
        throw ParameterError("tabulated densities must be strictly increasing");
      if (table[i].second < Scalar(0)) throw ParameterError("tabulated flows must be nonnegative");
    }
    const Scalar k_j = table.back().first;
    const Scalar v_f = table[1].second / table[1].first;
    const auto& a = table[table.size() - 2];
    const Scalar w = a.second / (k_j - a.first);
    require_positive(v_f, "v_f (first segment slope)");
    return FundamentalDiagram(DiagramKind::Tabulated, v_f, w, k_j, std::move(table));
  }

  DiagramKind kind() const noexcept { return kind_; }
  Scalar free_flow_speed() const noexcept { return v_f_; }
  /// Magnitude of the congested-branch wave speed (last segment for tables).
  Scalar wave_speed() const noexcept { return w_; }
  Scalar jam_density() const noexcept { return k_j_; }
  Scalar jam_spacing() const noexcept { return Scalar(1) / k_j_; }
  /// tau = 1/(w k_j); only meaningful for the triangular diagram.
  Scalar time_gap() const noexcept { return Scalar(1) / (w_ * k_j_); }
  const std::vector<Sample>& table() const noexcept { return table_; }

  /// Density at which flow is maximal.
  Scalar critical_density() const {
    switch (kind_) {
      case DiagramKind::Triangular: return w_ * k_j_ / (v_f_ + w_);
      case DiagramKind::Greenshields: return k_j_ / Scalar(2);
      case DiagramKind::Tabulated: {
        auto it = std::max_element(table_.begin(), table_.end(),
                                   [](const Sample& a, const Sample& b) { return a.second < b.second; });
        return it->first;
      }
    }
    return Scalar(0);
  }

  Scalar capacity() const { return flow(critical_density()); }

  /// Snaps round-off excursions past [0, k_j] and rejects real violations.
  Scalar checked_density(Scalar k) const {
    const Scalar tol = Scalar(1e-12) * k_j_;
    if (!(k >= -tol && k <= k_j_ + tol))
      throw DomainError("density " + std::to_string(double(k)) + " outside [0, k_j]");
    return std::clamp(k, Scalar(0), k_j_);
  }

  Scalar checked_spacing(Scalar s) const {
    const Scalar s_j = jam_spacing();
    if (!(s >= s_j * (Scalar(1) - Scalar(1e-12))))
      throw DomainError("spacing " + std::to_string(double(s)) + " below jam spacing");
    return std::max(s, s_j);
  }

  Scalar flow(Scalar k) const {
    k = checked_density(k);
    switch (kind_) {
      case DiagramKind::Triangular: return std::min(v_f_ * k, w_ * (k_j_ - k));
      case DiagramKind::Greenshields: return v_f_ * k * (Scalar(1) - k / k_j_);
      case DiagramKind::Tabulated: return interpolate(k);
    }
    return Scalar(0);
  }

  /// d phi / dk. At a triangular kink the congested slope is returned.
  Scalar flow_slope(Scalar k) const {
    k = checked_density(k);
    switch (kind_) {
      case DiagramKind::Triangular: return k < critical_density() ? v_f_ : -w_;
      case DiagramKind::Greenshields: return v_f_ * (Scalar(1) - Scalar(2) * k / k_j_);
      case DiagramKind::Tabulated: {
        const std::size_t i = segment(k);
        return (table_[i + 1].second - table_[i].second) / (table_[i + 1].first - table_[i].first);
      }
    }
    return Scalar(0);
  }

  Scalar speed_at_spacing(Scalar s) const {
    s = checked_spacing(s);
    switch (kind_) {
      case DiagramKind::Triangular: return std::min(v_f_, w_ * (k_j_ * s - Scalar(1)));
      case DiagramKind::Greenshields: return v_f_ * (Scalar(1) - Scalar(1) / (s * k_j_));
      case DiagramKind::Tabulated: return s * interpolate(std::min(Scalar(1) / s, k_j_));
    }
    return Scalar(0);
  }

  /// d theta / dS. Triangular returns the congested slope w k_j below the
  /// free-flow spacing and 0 at or above it.
  Scalar speed_at_spacing_slope(Scalar s) const {
    s = checked_spacing(s);
    switch (kind_) {
      case DiagramKind::Triangular:
        return w_ * (k_j_ * s - Scalar(1)) < v_f_ ? w_ * k_j_ : Scalar(0);
      case DiagramKind::Greenshields: return v_f_ / (s * s * k_j_);
      case DiagramKind::Tabulated: {
        // theta(S) = a S + b on a segment q = a + b k, so theta' is the intercept.
        const std::size_t i = segment(std::min(Scalar(1) / s, k_j_));
        const Scalar slope =
            (table_[i + 1].second - table_[i].second) / (table_[i + 1].first - table_[i].first);
        return table_[i].second - slope * table_[i].first;
      }
    }
    return Scalar(0);
  }

  /// max over S >= S_j of |theta'(S)|.
  Scalar max_speed_spacing_slope() const {
    switch (kind_) {
      case DiagramKind::Triangular: return w_ * k_j_;
      case DiagramKind::Greenshields: return v_f_ * k_j_;
      case DiagramKind::Tabulated: {
        Scalar best = 0;
        for (std::size_t i = 0; i + 1 < table_.size(); ++i) {
          const Scalar slope =
              (table_[i + 1].second - table_[i].second) / (table_[i + 1].first - table_[i].first);
          best = std::max(best, std::abs(table_[i].second - slope * table_[i].first));
        }
        return best;
      }
    }
    return Scalar(0);
  }

  /// max over k of |phi'(k)|, the fastest kinematic wave.
  Scalar max_wave_speed() const {
    switch (kind_) {
      case DiagramKind::Triangular: return std::max(v_f_, w_);
      case DiagramKind::Greenshields: return v_f_;
      case DiagramKind::Tabulated: {
        Scalar best = 0;
        for (std::size_t i = 0; i + 1 < table_.size(); ++i)
          best = std::max(best, std::abs((table_[i + 1].second - table_[i].second) /
                                         (table_[i + 1].first - table_[i].first)));
        return best;
      }
    }
    return Scalar(0);
  }

 private:
  FundamentalDiagram(DiagramKind kind, Scalar v_f, Scalar w, Scalar k_j, std::vector<Sample> table)
      : kind_(kind), v_f_(v_f), w_(w), k_j_(k_j), table_(std::move(table)) {}

  static void require_positive(Scalar value, const char* name) {
    if (!(value > Scalar(0)) || !std::isfinite(double(value)))
      throw ParameterError(std::string(name) + " must be positive and finite");
  }

  std::size_t segment(Scalar k) const {
    auto it = std::upper_bound(table_.begin(), table_.end(), k,
                               [](Scalar value, const Sample& s) { return value < s.first; });
    const auto idx = static_cast<std::size_t>(std::distance(table_.begin(), it));
    return std::clamp<std::size_t>(idx == 0 ? 0 : idx - 1, 0, table_.size() - 2);
  }

  Scalar interpolate(Scalar k) const {
    const std::size_t i = segment(k);
    const auto& [k0, q0] = table_[i];
    const auto& [k1, q1] = table_[i + 1];
    return q0 + (q1 - q0) * (k - k0) / (k1 - k0);
  }

  DiagramKind kind_;
  Scalar v_f_;
  Scalar w_;
  Scalar k_j_;
  std::vector<Sample> table_;
};

using FundamentalDiagramd = FundamentalDiagram<double>;

// Free-function forms, so call sites read like the formulas.

template <typename Scalar>
Scalar phi(const FundamentalDiagram<Scalar>& fd, Scalar k) {
  return fd.flow(k);
}

template <typename Scalar>
Scalar phi_prime(const FundamentalDiagram<Scalar>& fd, Scalar k) {
  return fd.flow_slope(k);
}

template <typename Scalar>
Scalar theta(const FundamentalDiagram<Scalar>& fd, Scalar s) {
  return fd.speed_at_spacing(s);
}

template <typename Scalar>
Scalar theta_prime(const FundamentalDiagram<Scalar>& fd, Scalar s) {
  return fd.speed_at_spacing_slope(s);
}

template <typename Scalar>
Scalar eta(const FundamentalDiagram<Scalar>& fd, Scalar k) {
  if (!(k > Scalar(0))) throw DomainError("eta requires positive density");
  return fd.speed_at_spacing(Scalar(1) / fd.checked_density(k));
}

/// d eta / dk; analytic for built-ins, central difference with h = 1e-6 k_j
/// for tables (one-sided within h of the domain ends).
template <typename Scalar>
Scalar eta_prime(const FundamentalDiagram<Scalar>& fd, Scalar k) {
  if (!(k > Scalar(0))) throw DomainError("eta_prime requires positive density");
  k = fd.checked_density(k);
  const Scalar k_j = fd.jam_density();
  switch (fd.kind()) {
    case DiagramKind::Triangular:
      return k < fd.critical_density() ? Scalar(0) : -fd.wave_speed() * k_j / (k * k);
    case DiagramKind::Greenshields: return -fd.free_flow_speed() / k_j;
    case DiagramKind::Tabulated: {
      const Scalar h = Scalar(1e-6) * k_j;
      const Scalar lo = std::max(k - h, h);
      const Scalar hi = std::min(k + h, k_j);
      return (eta(fd, hi) - eta(fd, lo)) / (hi - lo);
    }
  }
  return Scalar(0);
}

/// Largest stable time step of the vehicle-discrete first-order model with
/// vehicle-count step dN: dN / max|theta'(S)|. +inf when theta is flat.
template <typename Scalar>
Scalar cfl_max_dt(const FundamentalDiagram<Scalar>& fd, Scalar dN) {
  if (!(dN > Scalar(0))) throw DomainError("cfl_max_dt requires dN > 0");
  const Scalar slope = fd.max_speed_spacing_slope();
  if (slope == Scalar(0)) return std::numeric_limits<Scalar>::infinity();
  return dN / slope;
}

/// Sending function of the concave-flux Godunov rule.
template <typename Scalar>
Scalar demand(const FundamentalDiagram<Scalar>& fd, Scalar k) {
  return fd.flow(std::min(k, fd.critical_density()));
}

/// Receiving function of the concave-flux Godunov rule.
template <typename Scalar>
Scalar supply(const FundamentalDiagram<Scalar>& fd, Scalar k) {
  return fd.flow(std::max(k, fd.critical_density()));
}

}  // namespace trafficeq
