#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <string>

#include "trafficeq/acceleration_law.hpp"
#include "trafficeq/errors.hpp"
#include "trafficeq/fundamental_diagram.hpp"
#include "trafficeq/surfaces.hpp"
#include "trafficeq/transforms.hpp"

namespace trafficeq {

enum class FieldBoundary { Periodic, InflowOutflow };

/// Speed carried by the density flux of the second-order scheme at face i+1/2:
/// Upwind uses k_i v_i; LeaderSpeed uses k_i v_{i+1}, the Eulerian image of
/// the spacing update ds_n/dt = v_{n-1} - v_n.
enum class SpeedFlux { Upwind, LeaderSpeed };

/// Grid, horizon and initial data of one continuum run. Inflow/outflow runs
/// feed (k_in, v_in) at the left edge; the right edge copies the last cell
/// into a ghost cell.
template <typename Scalar = double>
struct EulerianScenario {
  CellGrid<Scalar> grid{0, 1, 0};
  Scalar dt = 0;
  long steps = 0;
  long record_every = 1;
  Vector<Scalar> density;
  Vector<Scalar> speed;  // second-order runs only
  FieldBoundary boundary = FieldBoundary::Periodic;
  Scalar k_in = 0;
  Scalar v_in = 0;
  SpeedFlux flux = SpeedFlux::Upwind;
};

inline constexpr double k_floor = 1e-8;

namespace detail {

template <typename Scalar>
void check_scenario(const EulerianScenario<Scalar>& sc) {
  if (!(sc.grid.dx > Scalar(0))) throw ConfigError("dx must be positive", "pde.dx");
  if (sc.grid.cells < 2) throw ConfigError("need at least two cells", "pde.cells");
  if (!(sc.dt > Scalar(0))) throw ConfigError("dt must be positive", "pde.dt");
  if (sc.steps < 0) throw ConfigError("steps must be nonnegative", "pde.steps");
  if (sc.record_every < 1) throw ConfigError("record stride must be positive", "pde.record_every");
  if (sc.density.size() != sc.grid.cells) throw ConfigError("initial density size mismatch", "pde.initial");
  if (!sc.density.allFinite() || (sc.density.array() < Scalar(0)).any())
    throw ConfigError("initial density must be finite and nonnegative", "pde.initial");
}

template <typename Scalar>
EulerianField<Scalar> make_field(const EulerianScenario<Scalar>& sc) {
  EulerianField<Scalar> f;
  f.x0 = sc.grid.x0;
  f.dx = sc.grid.dx;
  f.dt = sc.dt * Scalar(sc.record_every);
  f.periodic = sc.boundary == FieldBoundary::Periodic;
  const long rows = sc.steps / sc.record_every + 1;
  f.density.resize(rows, sc.grid.cells);
  f.speed.resize(rows, sc.grid.cells);
  f.inflow = Vector<Scalar>::Zero(rows);
  f.outflow = Vector<Scalar>::Zero(rows);
  return f;
}

}  // namespace detail

/**
First-order Godunov scheme for k_t + phi(k)_x = 0 with the interface flux
F = min(demand(k_left), supply(k_right)).
*/
template <typename Scalar>
EulerianField<Scalar> solve_lwr_godunov(const FundamentalDiagram<Scalar>& fd, const EulerianScenario<Scalar>& sc) {
  detail::check_scenario(sc);
  const Scalar k_j = fd.jam_density();
  if ((sc.density.array() > k_j * (Scalar(1) + Scalar(1e-12))).any())
    throw ConfigError("initial density exceeds jam density", "pde.initial");
  if (sc.boundary == FieldBoundary::InflowOutflow && !(sc.k_in >= Scalar(0) && sc.k_in <= k_j))
    throw ConfigError("inflow density outside [0, k_j]", "pde.boundary.k_in");
  if (fd.max_wave_speed() * sc.dt / sc.grid.dx > Scalar(0.9))
    throw ConfigError("CFL number exceeds 0.9", "pde.dt");

  const Eigen::Index M = sc.grid.cells;
  const bool periodic = sc.boundary == FieldBoundary::Periodic;
  const Scalar v_f = fd.free_flow_speed();
  const Scalar ratio = sc.dt / sc.grid.dx;
  Vector<Scalar> k = sc.density.cwiseMin(k_j);
  Vector<Scalar> F(M + 1);  // F(i) is the flux through the left face of cell i
  Scalar in_total = 0, out_total = 0;

  auto field = detail::make_field(sc);
  auto record = [&](long row) {
    field.density.row(row) = k.transpose();
    for (Eigen::Index c = 0; c < M; ++c)
      field.speed(row, c) = k(c) > Scalar(0) ? phi(fd, k(c)) / k(c) : v_f;
    field.inflow(row) = in_total;
    field.outflow(row) = out_total;
  };
  record(0);

  for (long step = 1; step <= sc.steps; ++step) {
    for (Eigen::Index i = 1; i < M; ++i) F(i) = std::min(demand(fd, k(i - 1)), supply(fd, k(i)));
    if (periodic) {
      F(0) = std::min(demand(fd, k(M - 1)), supply(fd, k(0)));
      F(M) = F(0);
    } else {
      F(0) = std::min(demand(fd, sc.k_in), supply(fd, k(0)));
      F(M) = std::min(demand(fd, k(M - 1)), supply(fd, k(M - 1)));  // zero-gradient ghost cell
    }
    for (Eigen::Index i = 0; i < M; ++i) k(i) -= ratio * (F(i + 1) - F(i));
    in_total += sc.dt * F(0);
    out_total += sc.dt * F(M);
    if (step % sc.record_every == 0) record(step / sc.record_every);
  }
  return field;
}

/// Largest v + |Psi_dv| / k over the cells; the substep and CFL speed.
template <typename Scalar>
Scalar second_order_signal_speed(const AccelerationLaw<Scalar>& law, const Vector<Scalar>& k,
                                 const Vector<Scalar>& v) {
  Scalar c = 0;
  for (Eigen::Index i = 0; i < k.size(); ++i) {
    const Scalar kk = std::max(k(i), Scalar(k_floor));
    Scalar corr = 0;
    if (k(i) >= Scalar(k_floor)) corr = std::abs(partials_at(law, v(i), Scalar(1) / kk, Scalar(0)).dv) / kk;
    c = std::max(c, std::abs(v(i)) + corr);
  }
  return c;
}

/**
Method-of-lines upwind scheme for

    k_t + (k v)_x = 0,   v_t + v v_x = Psi(v, 1/k, v_x / k).

The flux k v takes k from the upwind (left) cell and v per SpeedFlux; the
advective v_x is a
backward difference, and the v_x inside Psi is a forward difference toward
the leader. Each macro step is split into equal explicit Euler substeps no
longer than 0.25 dx / max(v + |Psi_dv|/k) and 0.1 x the law's time constant.
Cells with k < k_floor carry the law's free speed.
*/
template <typename Scalar>
EulerianField<Scalar> solve_second_order(const AccelerationLaw<Scalar>& law, const EulerianScenario<Scalar>& sc) {
  detail::check_scenario(sc);
  if (law.order() != LawOrder::Second) throw ConfigError("continuum solver needs a second-order law", "model");
  if (sc.speed.size() != sc.grid.cells) throw ConfigError("initial speed size mismatch", "pde.initial");
  if (!sc.speed.allFinite() || (sc.speed.array() < Scalar(0)).any())
    throw ConfigError("initial speed must be finite and nonnegative", "pde.initial");

  const Eigen::Index M = sc.grid.cells;
  const Scalar dx = sc.grid.dx;
  const bool periodic = sc.boundary == FieldBoundary::Periodic;
  const std::optional<Scalar> v_free = law.traits().free_speed;

  Vector<Scalar> k = sc.density, v = sc.speed;
  for (Eigen::Index i = 0; i < M; ++i)
    if (k(i) < Scalar(k_floor) && v_free) v(i) = *v_free;

  Scalar c0 = second_order_signal_speed(law, k, v);
  if (!periodic) c0 = std::max(c0, sc.v_in);
  if (c0 * sc.dt / dx > Scalar(0.9)) throw ConfigError("CFL number exceeds 0.9", "pde.dt");

  Vector<Scalar> F(M + 1), kn(M), vn(M);
  Scalar in_total = 0, out_total = 0, t = 0;

  auto field = detail::make_field(sc);
  auto record = [&](long row) {
    field.density.row(row) = k.transpose();
    field.speed.row(row) = v.transpose();
    field.inflow(row) = in_total;
    field.outflow(row) = out_total;
  };
  record(0);

  auto substep = [&](Scalar h) {
    const bool leader = sc.flux == SpeedFlux::LeaderSpeed;
    for (Eigen::Index i = 1; i < M; ++i) F(i) = k(i - 1) * (leader ? v(i) : v(i - 1));
    if (periodic) {
      F(0) = k(M - 1) * (leader ? v(0) : v(M - 1));
      F(M) = F(0);
    } else {
      F(0) = sc.k_in * (leader ? v(0) : sc.v_in);
      F(M) = k(M - 1) * v(M - 1);
    }
    for (Eigen::Index i = 0; i < M; ++i) {
      kn(i) = k(i) - h / dx * (F(i + 1) - F(i));
      if (kn(i) < Scalar(k_floor) && v_free) {
        vn(i) = *v_free;
        continue;
      }
      const Scalar v_up = i > 0 ? v(i - 1) : (periodic ? v(M - 1) : sc.v_in);
      const Scalar v_down = i + 1 < M ? v(i + 1) : (periodic ? v(0) : v(i));
      const Scalar kk = std::max(k(i), Scalar(k_floor));
      Scalar psi;
      try {
        psi = law(v(i), Scalar(1) / kk, (v_down - v(i)) / dx / kk);
      } catch (const std::exception& e) {
        throw SimulationFault(std::string("law evaluation failed: ") + e.what(), double(t), long(i));
      }
      vn(i) = std::max(v(i) - h * v(i) * (v(i) - v_up) / dx + h * psi, Scalar(0));
    }
    for (Eigen::Index i = 0; i < M; ++i) {
      if (!std::isfinite(double(kn(i))) || !std::isfinite(double(vn(i))))
        throw SimulationFault("NaN in continuum state", double(t + h), long(i));
      if (kn(i) < Scalar(-1e-12)) throw SimulationFault("negative density", double(t + h), long(i));
    }
    in_total += h * F(0);
    out_total += h * F(M);
    k.swap(kn);
    v.swap(vn);
    t += h;
  };

  for (long step = 1; step <= sc.steps; ++step) {
    Scalar c = second_order_signal_speed(law, k, v);
    if (!periodic) c = std::max(c, sc.v_in);
    Scalar h_max = c > Scalar(0) ? Scalar(0.25) * dx / c : sc.dt;
    if (const auto tc = law.traits().time_constant) h_max = std::min(h_max, Scalar(0.1) * *tc);
    const long n_sub = std::max<long>(1, static_cast<long>(std::ceil(sc.dt / h_max * (Scalar(1) - Scalar(1e-12)))));
    const Scalar h = sc.dt / Scalar(n_sub);
    for (long j = 0; j < n_sub; ++j) substep(h);
    t = sc.dt * Scalar(step);
    if (step % sc.record_every == 0) record(step / sc.record_every);
  }
  return field;
}

}  // namespace trafficeq
