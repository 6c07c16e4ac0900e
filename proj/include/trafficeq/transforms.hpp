#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <span>
#include <vector>

#include "trafficeq/errors.hpp"
#include "trafficeq/surfaces.hpp"

namespace trafficeq {

/// Vehicle-discrete (dN = 1) and time-difference derivatives of X at one sample.
template <typename Scalar>
struct LagrangianDerivatives {
  Scalar x_t;
  Scalar x_n;
  Scalar x_tn;
  std::optional<Scalar> x_nn;  // needs two leaders
  Scalar x_tt;
};

namespace detail {

/// dX/dt of one vehicle: central in the interior, one-sided at the ends.
template <typename Scalar>
Scalar time_derivative(const TrajectorySurface<Scalar>& s, Eigen::Index step, Eigen::Index n) {
  const Eigen::Index last = s.steps() - 1;
  if (last < 1) throw DomainError("time derivatives need at least two steps");
  if (step == 0) return (s.positions(1, n) - s.positions(0, n)) / s.dt;
  if (step == last) return (s.positions(last, n) - s.positions(last - 1, n)) / s.dt;
  return (s.positions(step + 1, n) - s.positions(step - 1, n)) / (Scalar(2) * s.dt);
}

template <typename Scalar>
Scalar second_time_derivative(const TrajectorySurface<Scalar>& s, Eigen::Index step, Eigen::Index n) {
  const Eigen::Index last = s.steps() - 1;
  if (last < 2) throw DomainError("second time derivatives need at least three steps");
  const Eigen::Index c = std::clamp<Eigen::Index>(step, 1, last - 1);
  return (s.positions(c + 1, n) - Scalar(2) * s.positions(c, n) + s.positions(c - 1, n)) /
         (s.dt * s.dt);
}

template <typename Scalar>
Scalar vehicle_speed(const TrajectorySurface<Scalar>& s, Eigen::Index step, Eigen::Index n) {
  return s.has_speeds() ? s.speeds(step, n) : time_derivative(s, step, n);
}

}  // namespace detail

template <typename Scalar>
LagrangianDerivatives<Scalar> lagrangian_derivatives(const TrajectorySurface<Scalar>& surface,
                                                     Eigen::Index step, Eigen::Index n) {
  if (n < 1 || n >= surface.vehicles()) throw DomainError("vehicle index needs a leader in range");
  if (step < 0 || step >= surface.steps()) throw DomainError("step out of range");
  const auto& X = surface.positions;
  LagrangianDerivatives<Scalar> d;
  d.x_n = X(step, n) - X(step, n - 1);
  if (n >= 2) d.x_nn = X(step, n) + X(step, n - 2) - Scalar(2) * X(step, n - 1);
  d.x_t = detail::time_derivative(surface, step, n);
  d.x_tn = d.x_t - detail::time_derivative(surface, step, n - 1);
  d.x_tt = detail::second_time_derivative(surface, step, n);
  return d;
}

template <typename Scalar>
struct CellGrid {
  Scalar x0;
  Scalar dx;
  Eigen::Index cells;
};

/// Which vehicle's speed is carried by the segment between a pair.
enum class SegmentSpeed { Trailing, Leading, Average };

/**
Lagrangian -> Eulerian. Each consecutive pair assigns density 1/spacing to the
segment [X(n), X(n-1)); cells average that piecewise-constant density. Cell
speed is the flow-weighted mean of segment speeds. Uncovered cells get density
0 and speed NaN.
*/
template <typename Scalar>
EulerianField<Scalar> to_eulerian(const TrajectorySurface<Scalar>& surface, const CellGrid<Scalar>& grid,
                                  SegmentSpeed rule = SegmentSpeed::Trailing) {
  surface.validate();
  if (!(grid.dx > Scalar(0)) || grid.cells < 1) throw DomainError("to_eulerian: invalid grid");
  const Scalar length = grid.dx * Scalar(grid.cells);
  if (surface.ring_length &&
      std::abs(*surface.ring_length - length) > Scalar(1e-9) * *surface.ring_length)
    throw DomainError("to_eulerian: ring grid must span exactly one circumference");

  EulerianField<Scalar> field;
  field.x0 = grid.x0;
  field.dx = grid.dx;
  field.t0 = surface.t0;
  field.dt = surface.dt;
  field.periodic = surface.ring_length.has_value();
  const Eigen::Index steps = surface.steps();
  field.density = Grid<Scalar>::Zero(steps, grid.cells);
  field.speed = Grid<Scalar>::Constant(steps, grid.cells, std::numeric_limits<Scalar>::quiet_NaN());
  field.coverage = Grid<Scalar>::Zero(steps, grid.cells);

  std::vector<Scalar> mass(grid.cells), momentum(grid.cells), cover(grid.cells);

  auto deposit = [&](Scalar a, Scalar b, Scalar k, Scalar u) {
    // [a, b) in grid coordinates, clipped to the grid.
    a = std::max(a, grid.x0);
    b = std::min(b, grid.x0 + length);
    if (!(b > a)) return;
    auto c = static_cast<Eigen::Index>(std::floor((a - grid.x0) / grid.dx));
    c = std::clamp<Eigen::Index>(c, 0, grid.cells - 1);
    for (; c < grid.cells; ++c) {
      const Scalar lo = std::max(a, grid.x0 + Scalar(c) * grid.dx);
      const Scalar hi = std::min(b, grid.x0 + Scalar(c + 1) * grid.dx);
      if (hi <= lo) {
        if (grid.x0 + Scalar(c) * grid.dx >= b) break;
        continue;
      }
      const Scalar len = hi - lo;
      mass[c] += k * len;
      momentum[c] += k * u * len;
      cover[c] += len;
    }
  };

  auto segment = [&](Scalar back, Scalar front, Scalar u) {
    const Scalar k = Scalar(1) / (front - back);
    if (!surface.ring_length) {
      deposit(back, front, k, u);
      return;
    }
    const Scalar L = *surface.ring_length;
    const Scalar shift = std::floor((back - grid.x0) / L) * L;
    const Scalar a = back - shift;
    const Scalar b = front - shift;
    deposit(a, std::min(b, grid.x0 + L), k, u);
    if (b > grid.x0 + L) deposit(grid.x0, b - L, k, u);
  };

  const Eigen::Index N = surface.vehicles();
  for (Eigen::Index i = 0; i < steps; ++i) {
    std::fill(mass.begin(), mass.end(), Scalar(0));
    std::fill(momentum.begin(), momentum.end(), Scalar(0));
    std::fill(cover.begin(), cover.end(), Scalar(0));
    auto pair_speed = [&](Eigen::Index trailing, Eigen::Index leading) {
      const Scalar vt = detail::vehicle_speed(surface, i, trailing);
      const Scalar vl = detail::vehicle_speed(surface, i, leading);
      switch (rule) {
        case SegmentSpeed::Trailing: return vt;
        case SegmentSpeed::Leading: return vl;
        case SegmentSpeed::Average: return (vt + vl) / Scalar(2);
      }
      return vt;
    };
    for (Eigen::Index n = 1; n < N; ++n)
      segment(surface.positions(i, n), surface.positions(i, n - 1), pair_speed(n, n - 1));
    if (surface.ring_length && N > 0)
      segment(surface.positions(i, 0), surface.positions(i, N - 1) + *surface.ring_length,
              pair_speed(0, N - 1));
    for (Eigen::Index c = 0; c < grid.cells; ++c) {
      field.density(i, c) = mass[c] / grid.dx;
      field.coverage(i, c) = cover[c] / grid.dx;
      if (mass[c] > Scalar(0)) field.speed(i, c) = momentum[c] / mass[c];
    }
  }
  return field;
}

namespace detail {

/// Vehicles strictly downstream of x: integral of k from x to the right edge.
template <typename Scalar>
Scalar count_downstream(const EulerianField<Scalar>& f, Eigen::Index step, Scalar x) {
  Scalar n = 0;
  for (Eigen::Index c = f.cells() - 1; c >= 0; --c) {
    const Scalar left = f.x0 + Scalar(c) * f.dx;
    const Scalar right = left + f.dx;
    if (right <= x) break;
    n += f.density(step, c) * (right - std::max(left, x));
  }
  return n;
}

/// Position where the downstream count equals `target` (0 <= target <= total).
template <typename Scalar>
std::optional<Scalar> invert_count(const EulerianField<Scalar>& f, Eigen::Index step, Scalar target) {
  const Scalar tol = Scalar(1e-12) * std::max(Scalar(1), std::abs(target));
  Scalar before = 0;
  for (Eigen::Index c = f.cells() - 1; c >= 0; --c) {
    const Scalar k = f.density(step, c);
    const Scalar after = before + k * f.dx;
    if (k > Scalar(0) && target <= after + tol) {
      const Scalar right = f.x0 + Scalar(c + 1) * f.dx;
      return right - std::clamp((target - before) / k, Scalar(0), f.dx);
    }
    before = after;
  }
  return std::nullopt;
}

}  // namespace detail

/**
Eulerian -> Lagrangian by inverting the cumulative count
n(t, x) = n(t, x_R) + integral_x^{x_R} k dx'. Vehicle 0 is labelled by the
count at seed_positions[0] at the first step; labels stay fixed and the count
at the right boundary advances with the outflow (cumulative `outflow` if the
field carries it, k v at the last cell otherwise). Periodic fields wrap.
*/
template <typename Scalar>
TrajectorySurface<Scalar> to_trajectories(const EulerianField<Scalar>& field, Eigen::Index n_vehicles,
                                          std::span<const Scalar> seed_positions) {
  if (n_vehicles < 1) throw DomainError("to_trajectories: need at least one vehicle");
  if (seed_positions.empty()) throw DomainError("to_trajectories: seed position required");
  const Eigen::Index steps = field.steps();
  if (steps < 1) throw DomainError("to_trajectories: empty field");

  Vector<Scalar> boundary(steps);
  if (field.outflow.size() == steps) {
    boundary = field.outflow.array() - field.outflow(0);
  } else {
    boundary(0) = 0;
    const Eigen::Index last = field.cells() - 1;
    for (Eigen::Index i = 1; i < steps; ++i)
      boundary(i) = boundary(i - 1) +
                    Scalar(0.5) * field.dt * (field.flow(i - 1, last) + field.flow(i, last));
  }

  const Scalar label0 = detail::count_downstream(field, 0, seed_positions[0]);
  const Scalar total0 = field.density.row(0).sum() * field.dx;
  if (!field.periodic && label0 + Scalar(n_vehicles - 1) > total0 * (Scalar(1) + Scalar(1e-12)) + Scalar(1e-9))
    throw DomainError("to_trajectories: field holds fewer vehicles than requested");

  TrajectorySurface<Scalar> out;
  out.t0 = field.t0;
  out.dt = field.dt;
  out.positions.resize(steps, n_vehicles);
  out.speeds.resize(steps, n_vehicles);
  if (field.periodic) out.ring_length = field.length();

  for (Eigen::Index i = 0; i < steps; ++i) {
    const Scalar total = field.density.row(i).sum() * field.dx;
    for (Eigen::Index j = 0; j < n_vehicles; ++j) {
      Scalar r = label0 + Scalar(j) - boundary(i);
      Scalar wraps = 0;
      if (field.periodic) {
        if (!(total > Scalar(0))) throw DomainError("to_trajectories: empty periodic field");
        wraps = std::floor(r / total);
        r -= wraps * total;
      }
      const auto x = detail::invert_count(field, i, r);
      if (!x) throw DomainError("to_trajectories: vehicle " + std::to_string(j) + " left the field");
      out.positions(i, j) = *x - wraps * field.length();
      auto c = static_cast<Eigen::Index>(std::floor((*x - field.x0) / field.dx));
      c = std::clamp<Eigen::Index>(c, 0, field.cells() - 1);
      const Scalar u = field.speed(i, c);
      out.speeds(i, j) = std::isfinite(double(u)) ? u : Scalar(0);
    }
  }
  return out;
}

}  // namespace trafficeq
