#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "trafficeq/acceleration_law.hpp"
#include "trafficeq/errors.hpp"
#include "trafficeq/fundamental_diagram.hpp"
#include "trafficeq/surfaces.hpp"

namespace trafficeq {

/// Prescribed motion of vehicle 0 on an open road.
template <typename Scalar = double>
class LeaderProfile {
 public:
  enum class Kind { Constant, Sinusoid, PiecewiseConstant };

  static LeaderProfile constant(Scalar v0) {
    if (!(v0 >= Scalar(0))) throw ParameterError("leader speed must be nonnegative");
    LeaderProfile p;
    p.kind_ = Kind::Constant;
    p.base_ = v0;
    return p;
  }

  /// v(t) = v0 + amplitude sin(omega t); requires amplitude <= v0.
  static LeaderProfile sinusoid(Scalar v0, Scalar amplitude, Scalar omega) {
    if (!(amplitude >= Scalar(0) && amplitude <= v0)) throw ParameterError("sinusoid would reverse");
    if (!(omega > Scalar(0))) throw ParameterError("sinusoid frequency must be positive");
    LeaderProfile p;
    p.kind_ = Kind::Sinusoid;
    p.base_ = v0;
    p.amplitude_ = amplitude;
    p.omega_ = omega;
    return p;
  }

  /// Speed v0 until the first breakpoint, then breakpoints[i].second from breakpoints[i].first on.
  static LeaderProfile piecewise(Scalar v0, std::vector<std::pair<Scalar, Scalar>> breakpoints) {
    if (!(v0 >= Scalar(0))) throw ParameterError("leader speed must be nonnegative");
    for (std::size_t i = 0; i < breakpoints.size(); ++i) {
      if (!(breakpoints[i].second >= Scalar(0))) throw ParameterError("leader speed must be nonnegative");
      if (i > 0 && !(breakpoints[i].first > breakpoints[i - 1].first))
        throw ParameterError("breakpoints must be strictly increasing in time");
    }
    LeaderProfile p;
    p.kind_ = Kind::PiecewiseConstant;
    p.base_ = v0;
    p.breakpoints_ = std::move(breakpoints);
    return p;
  }

  Kind kind() const noexcept { return kind_; }
  Scalar base_speed() const noexcept { return base_; }
  Scalar amplitude() const noexcept { return amplitude_; }
  Scalar omega() const noexcept { return omega_; }

  Scalar speed(Scalar t) const {
    switch (kind_) {
      case Kind::Constant: return base_;
      case Kind::Sinusoid: return base_ + amplitude_ * std::sin(omega_ * t);
      case Kind::PiecewiseConstant: {
        Scalar v = base_;
        for (const auto& [tb, vb] : breakpoints_)
          if (t >= tb) v = vb;
        return v;
      }
    }
    return base_;
  }

  /// Distance travelled from time 0 to t (closed form).
  Scalar displacement(Scalar t) const {
    switch (kind_) {
      case Kind::Constant: return base_ * t;
      case Kind::Sinusoid:
        return base_ * t + amplitude_ * (Scalar(1) - std::cos(omega_ * t)) / omega_;
      case Kind::PiecewiseConstant: {
        Scalar x = 0, t_prev = 0, v = base_;
        for (const auto& [tb, vb] : breakpoints_) {
          if (tb >= t) break;
          if (tb > t_prev) {
            x += v * (tb - t_prev);
            t_prev = tb;
          }
          v = vb;
        }
        return x + v * (t - t_prev);
      }
    }
    return Scalar(0);
  }

 private:
  Kind kind_ = Kind::Constant;
  Scalar base_ = 0;
  Scalar amplitude_ = 0;
  Scalar omega_ = 0;
  std::vector<std::pair<Scalar, Scalar>> breakpoints_;
};

template <typename Scalar = double>
struct RingRoad {
  Scalar length;
};

template <typename Scalar>
using Boundary = std::variant<LeaderProfile<Scalar>, RingRoad<Scalar>>;

/// Positions (vehicle 0 in front), speeds, and accelerations for third-order laws.
template <typename Scalar = double>
struct PlatoonState {
  Scalar time = 0;
  Vector<Scalar> x;
  Vector<Scalar> v;
  Vector<Scalar> a;

  Eigen::Index size() const noexcept { return x.size(); }
};

template <typename Scalar>
struct PlatoonRun {
  TrajectorySurface<Scalar> surface;
  /// Number of times a negative speed was clamped to zero.
  long clamp_events = 0;
};

namespace detail {

template <typename Scalar>
void check_initial(const PlatoonState<Scalar>& s, bool third_order) {
  if (s.x.size() < 2) throw ConfigError("platoon needs at least two vehicles", "sim.vehicles");
  if (s.v.size() != s.x.size()) throw ConfigError("speed vector size mismatch", "sim.initial");
  if (third_order && s.a.size() != s.x.size())
    throw ConfigError("third-order laws need initial accelerations", "sim.initial");
  for (Eigen::Index n = 1; n < s.x.size(); ++n)
    if (!(s.x(n - 1) > s.x(n))) throw ConfigError("initial positions must decrease rearward", "sim.initial");
  if ((s.v.array() < Scalar(0)).any()) throw ConfigError("initial speeds must be nonnegative", "sim.initial");
}

}  // namespace detail

/**
Time-continuous car following, integrated with classic fixed-step RK4.

With a LeaderProfile, vehicle 0 moves exactly as prescribed and vehicles
1..N-1 follow the law. On a RingRoad every vehicle follows the law and
vehicle 0 follows vehicle N-1 one circumference ahead. Third-order laws carry
acceleration as an extra state. Stage spacings below the law's minimum abort
the run with a SimulationFault.
*/
template <typename Scalar>
PlatoonRun<Scalar> simulate_continuous(const AccelerationLaw<Scalar>& law, const PlatoonState<Scalar>& initial,
                                       const Boundary<Scalar>& boundary, Scalar dt, long steps,
                                       long record_every = 1) {
  const bool third = law.order() == LawOrder::Third;
  detail::check_initial(initial, third);
  if (!(dt > Scalar(0))) throw ConfigError("dt must be positive", "sim.dt");
  if (steps < 0) throw ConfigError("steps must be nonnegative", "sim.steps");
  if (record_every < 1) throw ConfigError("record stride must be positive", "sim.record_every");
  if (const auto tc = law.traits().time_constant; tc && dt > Scalar(0.1) * *tc * (Scalar(1) + Scalar(1e-12)))
    throw ConfigError("dt exceeds 0.1 x the law's time constant", "sim.dt");

  const auto* ring = std::get_if<RingRoad<Scalar>>(&boundary);
  const auto* leader = std::get_if<LeaderProfile<Scalar>>(&boundary);
  const Eigen::Index N = initial.size();
  if (ring && !(initial.x(N - 1) + ring->length > initial.x(0)))
    throw ConfigError("platoon longer than the ring", "sim.boundary.length");
  const Scalar s_min = law.traits().min_spacing;
  const Eigen::Index first = ring ? 0 : 1;
  const Scalar leader_x0 = initial.x(0);
  const Scalar t_start = initial.time;

  Vector<Scalar> x = initial.x, v = initial.v;
  Vector<Scalar> a = third ? initial.a : Vector<Scalar>::Zero(N);

  auto leader_pos = [&](Scalar t) { return leader_x0 + leader->displacement(t) - leader->displacement(t_start); };

  // Stage derivative: writes dx, dv, da for the followed vehicles.
  Vector<Scalar> kx(N), kv(N), ka(N);
  auto derivative = [&](Scalar t, const Vector<Scalar>& xs, const Vector<Scalar>& vs, const Vector<Scalar>& as,
                        Vector<Scalar>& dx, Vector<Scalar>& dv, Vector<Scalar>& da) {
    dx.setZero();
    dv.setZero();
    da.setZero();
    if (leader) {
      dx(0) = leader->speed(t);
    }
    for (Eigen::Index n = first; n < N; ++n) {
      Scalar xl, vl;
      if (n == 0) {
        xl = xs(N - 1) + ring->length;
        vl = vs(N - 1);
      } else if (n == 1 && leader) {
        xl = leader_pos(t);
        vl = leader->speed(t);
      } else {
        xl = xs(n - 1);
        vl = vs(n - 1);
      }
      const Scalar gap = xl - xs(n);
      if (!(gap >= s_min)) throw SimulationFault("spacing below minimum (collision)", double(t), long(n));
      const Scalar vn = std::max(vs(n), Scalar(0));
      const Scalar psi = law(vn, gap, std::max(vl, Scalar(0)) - vn);
      if (!std::isfinite(double(psi))) throw SimulationFault("non-finite acceleration", double(t), long(n));
      dx(n) = vn;
      if (third) {
        dv(n) = as(n);
        da(n) = (psi - as(n)) / law.delay();
      } else {
        dv(n) = psi;
      }
    }
  };

  const long rows = steps / record_every + 1;
  PlatoonRun<Scalar> run;
  auto& surf = run.surface;
  surf.t0 = t_start;
  surf.dt = dt * Scalar(record_every);
  surf.positions.resize(rows, N);
  surf.speeds.resize(rows, N);
  if (third) surf.accels.resize(rows, N);
  if (ring) surf.ring_length = ring->length;

  auto record = [&](long row) {
    surf.positions.row(row) = x.transpose();
    surf.speeds.row(row) = v.transpose();
    if (third) surf.accels.row(row) = a.transpose();
  };
  record(0);

  Vector<Scalar> x1(N), v1(N), a1(N), x2(N), v2(N), a2(N), x3(N), v3(N), a3(N), x4(N), v4(N), a4(N);
  Vector<Scalar> xs(N), vs(N), as(N);
  for (long step = 1; step <= steps; ++step) {
    const Scalar t = t_start + Scalar(step - 1) * dt;
    derivative(t, x, v, a, x1, v1, a1);
    xs = x + Scalar(0.5) * dt * x1;
    vs = v + Scalar(0.5) * dt * v1;
    as = a + Scalar(0.5) * dt * a1;
    derivative(t + Scalar(0.5) * dt, xs, vs, as, x2, v2, a2);
    xs = x + Scalar(0.5) * dt * x2;
    vs = v + Scalar(0.5) * dt * v2;
    as = a + Scalar(0.5) * dt * a2;
    derivative(t + Scalar(0.5) * dt, xs, vs, as, x3, v3, a3);
    xs = x + dt * x3;
    vs = v + dt * v3;
    as = a + dt * a3;
    derivative(t + dt, xs, vs, as, x4, v4, a4);
    x += dt / Scalar(6) * (x1 + Scalar(2) * x2 + Scalar(2) * x3 + x4);
    v += dt / Scalar(6) * (v1 + Scalar(2) * v2 + Scalar(2) * v3 + v4);
    a += dt / Scalar(6) * (a1 + Scalar(2) * a2 + Scalar(2) * a3 + a4);
    const Scalar t_new = t_start + Scalar(step) * dt;
    if (leader) {
      x(0) = leader_pos(t_new);
      v(0) = leader->speed(t_new);
    }
    for (Eigen::Index n = first; n < N; ++n) {
      if (v(n) < Scalar(0)) {
        v(n) = 0;
        ++run.clamp_events;
      }
    }
    if (step % record_every == 0) record(step / record_every);
  }
  return run;
}

namespace detail {

template <typename Scalar>
Vector<Scalar> leader_track(const LeaderProfile<Scalar>& leader, Scalar x0, Scalar dt, long steps) {
  Vector<Scalar> out(steps + 2);
  for (long i = 0; i <= steps + 1; ++i) out(i) = x0 + leader.displacement(Scalar(i) * dt);
  return out;
}

/// Speed over [t, t + dt) from consecutive positions; shared by both
/// time-discrete schemes so identical positions give identical speeds.
template <typename Scalar>
void finite_speeds(TrajectorySurface<Scalar>& surf, const Vector<Scalar>& next_row) {
  const Eigen::Index last = surf.steps() - 1;
  surf.speeds.resize(surf.steps(), surf.vehicles());
  for (Eigen::Index i = 0; i < last; ++i)
    surf.speeds.row(i) = (surf.positions.row(i + 1) - surf.positions.row(i)) / surf.dt;
  surf.speeds.row(last) = (next_row.transpose() - surf.positions.row(last)) / surf.dt;
}

}  // namespace detail

/**
Time-discrete first-order car following

    X(t+dt, N) = X(t, N) + dt min{v_f, (X(t, N-1) - X(t, N) - S_j) / tau}

for the triangular diagram (X + dt theta(spacing) otherwise). The triangular
update is evaluated as min{X + dt v_f, (1 - r) X + r (X(N-1) - S_j)} with
r = dt / tau, which is the same expression and collapses to the Newell rule
bit-for-bit when dt = tau.
*/
template <typename Scalar>
TrajectorySurface<Scalar> simulate_pipes_discrete(const FundamentalDiagram<Scalar>& fd,
                                                  const Vector<Scalar>& initial_positions,
                                                  const LeaderProfile<Scalar>& leader, Scalar dt, long steps) {
  const Eigen::Index N = initial_positions.size();
  if (N < 2) throw ConfigError("platoon needs at least two vehicles", "sim.vehicles");
  if (!(dt > Scalar(0)) || dt > cfl_max_dt(fd, Scalar(1)) * (Scalar(1) + Scalar(1e-12)))
    throw ConfigError("dt violates the CFL bound 1/max|theta'|", "sim.dt");
  for (Eigen::Index n = 1; n < N; ++n)
    if (!(initial_positions(n - 1) > initial_positions(n)))
      throw ConfigError("initial positions must decrease rearward", "sim.initial");

  const bool tri = fd.kind() == DiagramKind::Triangular;
  const Scalar v_f = fd.free_flow_speed();
  const Scalar s_j = fd.jam_spacing();
  const Scalar r = dt / fd.time_gap();
  const Vector<Scalar> lead = detail::leader_track(leader, initial_positions(0), dt, steps);

  auto advance = [&](const Vector<Scalar>& x, long next_step) {
    Vector<Scalar> y(N);
    y(0) = lead(next_step);
    for (Eigen::Index n = 1; n < N; ++n) {
      if (tri) {
        y(n) = std::min(x(n) + dt * v_f, (Scalar(1) - r) * x(n) + r * (x(n - 1) - s_j));
      } else {
        y(n) = x(n) + dt * theta(fd, x(n - 1) - x(n));
      }
    }
    return y;
  };

  TrajectorySurface<Scalar> surf;
  surf.dt = dt;
  surf.positions.resize(steps + 1, N);
  Vector<Scalar> x = initial_positions;
  surf.positions.row(0) = x.transpose();
  for (long step = 1; step <= steps; ++step) {
    x = advance(x, step);
    surf.positions.row(step) = x.transpose();
  }
  detail::finite_speeds(surf, advance(x, steps + 1));
  return surf;
}

/// Newell's rule X(t+tau, N) = min{X(t, N) + tau v_f, X(t, N-1) - S_j}.
template <typename Scalar>
TrajectorySurface<Scalar> simulate_newell(const FundamentalDiagram<Scalar>& fd, const Vector<Scalar>& initial_positions,
                                          const LeaderProfile<Scalar>& leader, long steps) {
  if (fd.kind() != DiagramKind::Triangular)
    throw ConfigError("Newell's model needs a triangular diagram", "fd.kind");
  const Eigen::Index N = initial_positions.size();
  if (N < 2) throw ConfigError("platoon needs at least two vehicles", "sim.vehicles");
  for (Eigen::Index n = 1; n < N; ++n)
    if (!(initial_positions(n - 1) > initial_positions(n)))
      throw ConfigError("initial positions must decrease rearward", "sim.initial");

  const Scalar tau = fd.time_gap();
  const Scalar v_f = fd.free_flow_speed();
  const Scalar s_j = fd.jam_spacing();
  const Vector<Scalar> lead = detail::leader_track(leader, initial_positions(0), tau, steps);

  auto advance = [&](const Vector<Scalar>& x, long next_step) {
    Vector<Scalar> y(N);
    y(0) = lead(next_step);
    for (Eigen::Index n = 1; n < N; ++n) y(n) = std::min(x(n) + tau * v_f, x(n - 1) - s_j);
    return y;
  };

  TrajectorySurface<Scalar> surf;
  surf.dt = tau;
  surf.positions.resize(steps + 1, N);
  Vector<Scalar> x = initial_positions;
  surf.positions.row(0) = x.transpose();
  for (long step = 1; step <= steps; ++step) {
    x = advance(x, step);
    surf.positions.row(step) = x.transpose();
  }
  detail::finite_speeds(surf, advance(x, steps + 1));
  return surf;
}

}  // namespace trafficeq
