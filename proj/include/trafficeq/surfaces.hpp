#pragma once

#include <cmath>
#include <limits>
#include <optional>
#include <string>

#include <Eigen/Core>

#include "trafficeq/errors.hpp"

namespace trafficeq {

/// (time step x index) samples, one row per recorded time.
template <typename Scalar>
using Grid = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

/**
Discrete Lagrangian state X(t, N): positions[step][vehicle], vehicle index
increasing rearward. Speeds and accelerations are optional (same shape when
present). On a ring road positions are unwrapped and vehicle 0 follows
vehicle N-1 shifted by one circumference.
*/
template <typename Scalar = double>
struct TrajectorySurface {
  Scalar t0 = 0;
  Scalar dt = 1;
  Grid<Scalar> positions;
  Grid<Scalar> speeds;
  Grid<Scalar> accels;
  std::optional<Scalar> ring_length;

  Eigen::Index steps() const noexcept { return positions.rows(); }
  Eigen::Index vehicles() const noexcept { return positions.cols(); }
  Scalar time(Eigen::Index step) const noexcept { return t0 + Scalar(step) * dt; }
  bool has_speeds() const noexcept { return speeds.size() == positions.size() && speeds.size() > 0; }
  bool has_accels() const noexcept { return accels.size() == positions.size() && accels.size() > 0; }

  /// Spacing to the leader of vehicle n at a step; wraps on a ring.
  Scalar spacing(Eigen::Index step, Eigen::Index n) const {
    if (n > 0) return positions(step, n - 1) - positions(step, n);
    if (!ring_length) throw DomainError("vehicle 0 has no leader on an open road");
    return positions(step, vehicles() - 1) + *ring_length - positions(step, 0);
  }

  /// Throws DomainError on collisions, non-finite entries or shape mismatch.
  void validate() const {
    if (!(dt > Scalar(0))) throw DomainError("surface dt must be positive");
    if ((speeds.size() && (speeds.rows() != steps() || speeds.cols() != vehicles())) ||
        (accels.size() && (accels.rows() != steps() || accels.cols() != vehicles())))
      throw DomainError("surface matrices must share shape");
    for (Eigen::Index i = 0; i < steps(); ++i) {
      for (Eigen::Index n = 0; n < vehicles(); ++n) {
        if (!std::isfinite(double(positions(i, n))))
          throw DomainError("non-finite position at step " + std::to_string(i));
        if (n > 0 && !(positions(i, n - 1) > positions(i, n)))
          throw DomainError("collision between vehicles " + std::to_string(n - 1) + " and " +
                            std::to_string(n) + " at step " + std::to_string(i));
      }
      if (ring_length && vehicles() > 0 && !(spacing(i, 0) > Scalar(0)))
        throw DomainError("collision across the ring seam at step " + std::to_string(i));
    }
  }
};

/**
Discrete Eulerian state: density[step][cell] and speed[step][cell] on
uniform cells [x0 + c dx, x0 + (c+1) dx). Speed is NaN where no traffic is
present. `coverage` (fraction of each cell covered by vehicle pairs) is set
only for fields reconstructed from trajectories; `inflow`/`outflow` hold
cumulative boundary vehicle counts per recorded step for solver output.
*/
template <typename Scalar = double>
struct EulerianField {
  Scalar x0 = 0;
  Scalar dx = 1;
  Scalar t0 = 0;
  Scalar dt = 1;
  bool periodic = false;
  Grid<Scalar> density;
  Grid<Scalar> speed;
  Grid<Scalar> coverage;
  Vector<Scalar> inflow;
  Vector<Scalar> outflow;

  Eigen::Index steps() const noexcept { return density.rows(); }
  Eigen::Index cells() const noexcept { return density.cols(); }
  Scalar time(Eigen::Index step) const noexcept { return t0 + Scalar(step) * dt; }
  Scalar cell_center(Eigen::Index c) const noexcept { return x0 + (Scalar(c) + Scalar(0.5)) * dx; }
  Scalar length() const noexcept { return Scalar(cells()) * dx; }

  Scalar flow(Eigen::Index step, Eigen::Index c) const {
    const Scalar k = density(step, c);
    return k == Scalar(0) ? Scalar(0) : k * speed(step, c);
  }
};

/// Vehicles on the grid at one step: sum of k dx.
template <typename Scalar>
Scalar total_vehicles(const EulerianField<Scalar>& field, Eigen::Index step) {
  if (step < 0 || step >= field.steps()) throw DomainError("total_vehicles: step out of range");
  return field.density.row(step).sum() * field.dx;
}

}  // namespace trafficeq
