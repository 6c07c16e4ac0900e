#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <complex>
#include <exception>
#include <limits>
#include <numbers>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include "trafficeq/acceleration_law.hpp"
#include "trafficeq/continuum.hpp"
#include "trafficeq/errors.hpp"
#include "trafficeq/fundamental_diagram.hpp"
#include "trafficeq/platoon.hpp"
#include "trafficeq/steady_state.hpp"
#include "trafficeq/surfaces.hpp"
#include "trafficeq/transforms.hpp"

namespace trafficeq {

/// Discrepancy between the car-following (cf) and continuum (pde) arms at one resolution.
template <typename Scalar>
struct ResolutionResult {
  static constexpr Scalar nan = std::numeric_limits<Scalar>::quiet_NaN();

  std::string label;
  Scalar scale = 1;
  Scalar dx = nan;
  long vehicles = 0;
  long cells = 0;
  bool compared = false;
  std::string fault;
  Scalar l1_k = nan, linf_k = nan, l1_v = nan, linf_v = nan;
  /// Largest gap in vehicle count over the compared cells, any recorded step.
  Scalar count_gap = nan;
  Scalar growth_cf = nan, growth_pde = nan;
  /// Terminal shock positions and mean shock speeds (Riemann cases).
  Scalar front_cf = nan, front_pde = nan, front_exact = nan;
  Scalar speed_cf = nan, speed_pde = nan, speed_exact = nan;
};

template <typename Scalar>
struct EquivalenceReport {
  std::string scenario;
  std::string model;
  std::vector<ResolutionResult<Scalar>> table;
  /// Acceptance bound of the verdict (meaning depends on the scenario).
  Scalar threshold = std::numeric_limits<Scalar>::quiet_NaN();
  /// pass | fail | growth_agree | growth_disagree | incomparable
  std::string verdict;
  /// Refinement increased the L1 density error somewhere.
  bool convergence_violation = false;
  /// log(e_i / e_{i+1}) / log(h_i / h_{i+1}) of L1 density between consecutive rows.
  std::vector<Scalar> l1_rates;
};

namespace detail {

template <typename Scalar>
bool covered(const EulerianField<Scalar>& f, Eigen::Index row, Eigen::Index c) {
  return f.coverage.size() == 0 || f.coverage(row, c) >= Scalar(1) - Scalar(1e-9);
}

/// Norms of (a - b) on one row over cells where both are defined; L1 is a
/// length-weighted mean.
template <typename Scalar>
void field_norms(const EulerianField<Scalar>& cf, const EulerianField<Scalar>& pde, Eigen::Index row_cf,
                 Eigen::Index row_pde, ResolutionResult<Scalar>& out) {
  Scalar l1k = 0, lik = 0, l1v = 0, liv = 0, len = 0;
  for (Eigen::Index c = 0; c < cf.cells(); ++c) {
    if (!covered(cf, row_cf, c)) continue;
    const Scalar dk = std::abs(cf.density(row_cf, c) - pde.density(row_pde, c));
    const Scalar dv = std::abs(cf.speed(row_cf, c) - pde.speed(row_pde, c));
    l1k += dk * cf.dx;
    lik = std::max(lik, dk);
    if (std::isfinite(double(dv))) {
      l1v += dv * cf.dx;
      liv = std::max(liv, dv);
    }
    len += cf.dx;
  }
  if (len == Scalar(0)) throw DomainError("no cell is defined in both representations");
  out.l1_k = l1k / len;
  out.linf_k = lik;
  out.l1_v = l1v / len;
  out.linf_v = liv;
}

template <typename Scalar>
Scalar count_gap(const EulerianField<Scalar>& cf, const EulerianField<Scalar>& pde, long stride_cf,
                 long stride_pde) {
  Scalar gap = 0;
  const Eigen::Index rows = std::min((cf.steps() - 1) / stride_cf, (pde.steps() - 1) / stride_pde) + 1;
  for (Eigen::Index r = 0; r < rows; ++r) {
    Scalar a = 0, b = 0;
    for (Eigen::Index c = 0; c < cf.cells(); ++c) {
      if (!covered(cf, r * stride_cf, c)) continue;
      a += cf.density(r * stride_cf, c) * cf.dx;
      b += pde.density(r * stride_pde, c) * pde.dx;
    }
    gap = std::max(gap, std::abs(a - b));
  }
  return gap;
}

/// Rightmost position where density rises through `mid` (a queue's upstream edge).
template <typename Scalar>
Scalar shock_front(const EulerianField<Scalar>& f, Eigen::Index row, Scalar mid) {
  for (Eigen::Index c = f.cells() - 1; c > 0; --c) {
    if (!covered(f, row, c) || !covered(f, row, c - 1)) return std::numeric_limits<Scalar>::quiet_NaN();
    const Scalar hi = f.density(row, c), lo = f.density(row, c - 1);
    if (hi >= mid && lo < mid) return f.cell_center(c - 1) + f.dx * (mid - lo) / (hi - lo);
  }
  return std::numeric_limits<Scalar>::quiet_NaN();
}

template <typename Scalar>
void finish_rates(EquivalenceReport<Scalar>& rep) {
  for (std::size_t i = 1; i < rep.table.size(); ++i) {
    const auto& a = rep.table[i - 1];
    const auto& b = rep.table[i];
    if (!a.compared || !b.compared || !(a.l1_k > Scalar(0)) || !(b.l1_k > Scalar(0))) continue;
    rep.l1_rates.push_back(std::log(a.l1_k / b.l1_k) / std::log(b.scale / a.scale));
    if (b.l1_k > a.l1_k * (Scalar(1) + Scalar(1e-9)) + Scalar(1e-15)) rep.convergence_violation = true;
  }
}

}  // namespace detail

/// |c_m| of the m-th spatial Fourier mode of density on one row, divided by the mean.
template <typename Scalar>
Scalar modal_amplitude(const EulerianField<Scalar>& f, Eigen::Index row, int mode = 1) {
  std::complex<Scalar> acc = 0;
  const Eigen::Index M = f.cells();
  for (Eigen::Index c = 0; c < M; ++c) {
    const Scalar phase = -Scalar(2) * std::numbers::pi_v<Scalar> * Scalar(mode) * (Scalar(c) + Scalar(0.5)) / Scalar(M);
    acc += f.density(row, c) * std::complex<Scalar>(std::cos(phase), std::sin(phase));
  }
  const Scalar mean = f.density.row(row).mean();
  return mean > Scalar(0) ? Scalar(2) * std::abs(acc) / (Scalar(M) * mean) : Scalar(0);
}

/**
Least-squares slope of log amplitude over recorded rows, restricted to the
linear regime: the fit stops once the amplitude exceeds ten times its initial
value or 0.2. Returns NaN for unperturbed fields.
*/
template <typename Scalar>
Scalar modal_growth_rate(const EulerianField<Scalar>& f, long stride = 1, int mode = 1) {
  const Scalar a0 = modal_amplitude(f, 0, mode);
  if (!(a0 > Scalar(1e-10))) return std::numeric_limits<Scalar>::quiet_NaN();
  Scalar st = 0, sy = 0, stt = 0, sty = 0;
  long n = 0;
  for (Eigen::Index r = 0; r < f.steps(); r += stride) {
    const Scalar a = modal_amplitude(f, r, mode);
    if (!(a > Scalar(0)) || a > Scalar(10) * a0 || a > Scalar(0.2)) break;
    const Scalar t = f.time(r), y = std::log(a);
    st += t;
    sy += y;
    stt += t * t;
    sty += t * y;
    ++n;
  }
  if (n < 2) return std::numeric_limits<Scalar>::quiet_NaN();
  return (Scalar(n) * sty - st * sy) / (Scalar(n) * stt - st * st);
}

/// Initial data of an LWR comparison. Riemann cases start with k_left on
/// [0, split * length) and k_right beyond; uniform cases use k_left throughout.
template <typename Scalar = double>
struct LwrCase {
  enum class Kind { Uniform, Riemann };
  std::string id;
  Kind kind = Kind::Riemann;
  Scalar k_left = 0;
  Scalar k_right = 0;
  Scalar length = 0;
  Scalar split = Scalar(0.75);
  Scalar horizon = 0;
  Scalar dx = 0;
};

/**
Newell platoon against Godunov on matched initial data.

Refinement by a factor r scales the road length, split point and horizon by
r with dx and the vehicle spacing fixed; since LWR solutions are
self-similar, this is the same problem seen at r times the resolution in both
arms. Norms are evaluated on the terminal step over fully covered cells, with
L1 measured per unit road length.
*/
template <typename Scalar>
EquivalenceReport<Scalar> compare_lwr(const FundamentalDiagram<Scalar>& fd, const LwrCase<Scalar>& lc,
                                      std::span<const int> scales) {
  if (fd.kind() != DiagramKind::Triangular) throw ConfigError("the Newell arm needs a triangular diagram", "fd.kind");
  if (!(lc.dx > Scalar(0)) || !(lc.length > Scalar(0)) || !(lc.horizon > Scalar(0)))
    throw ConfigError("dx, length and horizon must be positive", "compare");
  if (!(lc.split > Scalar(0) && lc.split < Scalar(1))) throw ConfigError("split must lie in (0, 1)", "compare.split");
  const Scalar k_j = fd.jam_density();
  for (Scalar k : {lc.k_left, lc.k_right})
    if (!(k > Scalar(0) && k <= k_j)) throw ConfigError("densities must lie in (0, k_j]", "compare");

  const bool riemann = lc.kind == LwrCase<Scalar>::Kind::Riemann;
  const Scalar k_r = riemann ? lc.k_right : lc.k_left;
  const Scalar tau = fd.time_gap();
  EquivalenceReport<Scalar> rep;
  rep.scenario = lc.id;
  rep.model = "lwr_newell";

  for (const int r : scales) {
    if (r < 1) throw ConfigError("refinement factors must be positive", "compare.resolutions");
    ResolutionResult<Scalar> res;
    res.scale = Scalar(r);
    res.dx = lc.dx;
    const Scalar length = lc.length * Scalar(r);
    const long cells = std::lround(length / lc.dx);
    if (std::abs(Scalar(cells) * lc.dx - length) > Scalar(1e-9) * length)
      throw ConfigError("length must be a multiple of dx", "compare.dx");
    res.cells = cells;
    res.label = "x" + std::to_string(r);
    const Scalar x_split = lc.split * length;
    const long newell_steps = std::lround(lc.horizon * Scalar(r) / tau);
    const Scalar horizon = Scalar(newell_steps) * tau;

    // Initial field: exact cell averages of the step profile.
    EulerianField<Scalar> init;
    init.dx = lc.dx;
    init.density.resize(1, cells);
    init.speed.resize(1, cells);
    for (long c = 0; c < cells; ++c) {
      const Scalar a = Scalar(c) * lc.dx, b = a + lc.dx;
      const Scalar left_part = std::clamp(x_split - a, Scalar(0), lc.dx);
      const Scalar k = (left_part * lc.k_left + (lc.dx - left_part) * k_r) / lc.dx;
      init.density(0, c) = k;
      init.speed(0, c) = eta(fd, k);
      (void)b;
    }

    // Newell arm: the queue head sits at the right edge and moves at eta(k_r).
    const Scalar total = init.density.row(0).sum() * lc.dx;
    const auto n_veh = static_cast<Eigen::Index>(std::floor(total * (Scalar(1) + Scalar(1e-12))));
    const Scalar seed[] = {length};
    const auto seeded = to_trajectories(init, n_veh, std::span<const Scalar>(seed));
    const Vector<Scalar> x0 = seeded.positions.row(0).transpose();
    const auto leader = LeaderProfile<Scalar>::constant(eta(fd, k_r));
    const auto platoon = simulate_newell(fd, x0, leader, newell_steps);
    res.vehicles = long(n_veh);
    const CellGrid<Scalar> grid{0, lc.dx, cells};
    const auto cf = to_eulerian(platoon, grid);

    // Godunov arm on the same grid, recorded every tau.
    const long sub = std::max<long>(1, long(std::ceil(fd.max_wave_speed() * tau / (Scalar(0.9) * lc.dx) - Scalar(1e-12))));
    EulerianScenario<Scalar> sc;
    sc.grid = grid;
    sc.dt = tau / Scalar(sub);
    sc.steps = newell_steps * sub;
    sc.record_every = sub;
    sc.density = init.density.row(0).transpose();
    sc.boundary = FieldBoundary::InflowOutflow;
    sc.k_in = lc.k_left;
    const auto pde = solve_lwr_godunov(fd, sc);

    const Eigen::Index last = cf.steps() - 1;
    detail::field_norms(cf, pde, last, last, res);
    res.count_gap = detail::count_gap(cf, pde, 1, 1);
    if (riemann) {
      const Scalar mid = Scalar(0.5) * (lc.k_left + k_r);
      res.front_cf = detail::shock_front(cf, last, mid);
      res.front_pde = detail::shock_front(pde, last, mid);
      res.speed_exact = (phi(fd, k_r) - phi(fd, lc.k_left)) / (k_r - lc.k_left);
      res.front_exact = x_split + res.speed_exact * horizon;
      res.speed_cf = (res.front_cf - x_split) / horizon;
      res.speed_pde = (res.front_pde - x_split) / horizon;
    }
    res.compared = true;
    rep.table.push_back(res);
  }
  detail::finish_rates(rep);

  if (rep.table.empty()) {
    rep.verdict = "pass";
    return rep;
  }
  const auto& fin = rep.table.back();
  if (riemann) {
    // Shock speeds of both arms within 3% and fronts within max(dx, upstream spacing).
    rep.threshold = Scalar(0.03);
    const Scalar tol_front = std::max(lc.dx, Scalar(1) / std::min(lc.k_left, k_r));
    const bool ok = std::abs(fin.speed_cf / fin.speed_exact - 1) <= rep.threshold &&
                    std::abs(fin.speed_pde / fin.speed_exact - 1) <= rep.threshold &&
                    std::abs(fin.front_cf - fin.front_pde) <= tol_front;
    rep.verdict = ok ? "pass" : "fail";
  } else {
    rep.threshold = lc.k_left / (Scalar(2) * Scalar(fin.cells));
    rep.verdict = fin.linf_k <= rep.threshold ? "pass" : "fail";
  }
  return rep;
}

enum class Regime { Stable, Unstable };

/**
Ring-road pairing for second-order laws. At refinement r the ring carries
r * base_vehicles vehicles at mean density k0 (ring length scales with r),
so the perturbation wavelength grows against the vehicle spacing while the
cell size stays dx = s0 / cells_per_vehicle.
*/
template <typename Scalar = double>
struct RingCase {
  std::string id;
  Regime regime = Regime::Stable;
  Scalar k0 = 0;
  /// Relative amplitude of the sinusoidal spacing perturbation.
  Scalar amplitude = Scalar(0.01);
  int mode = 1;
  long base_vehicles = 20;
  Scalar cells_per_vehicle = 1;
  Scalar horizon = 200;
  Scalar dt_cf = Scalar(0.05);
  Scalar record_dt = 1;
  /// Terminal L-infinity density discrepancy allowed, as a fraction of k0.
  Scalar threshold = Scalar(0.05);
  SpeedFlux flux = SpeedFlux::LeaderSpeed;
};

namespace detail {

template <typename Scalar>
ResolutionResult<Scalar> ring_pair(const AccelerationLaw<Scalar>& law, const RingCase<Scalar>& rc, int r) {
  ResolutionResult<Scalar> res;
  res.scale = Scalar(r);
  const long N = rc.base_vehicles * r;
  const Scalar s0 = Scalar(1) / rc.k0;
  const Scalar L = Scalar(N) * s0;
  const long cells = std::max<long>(2, std::lround(Scalar(N) * rc.cells_per_vehicle));
  res.vehicles = N;
  res.cells = cells;
  res.dx = L / Scalar(cells);
  res.label = "N" + std::to_string(N) + "_M" + std::to_string(cells);

  // Platoon with spacing s_n = s0 (1 + A sin(2 pi mode n / N)) at the matching steady speeds.
  PlatoonState<Scalar> st;
  st.x.resize(N);
  st.v.resize(N);
  Scalar x = L - Scalar(0.5) * s0;
  for (long n = 0; n < N; ++n) {
    const Scalar s = s0 * (Scalar(1) + rc.amplitude * std::sin(Scalar(2) * std::numbers::pi_v<Scalar> *
                                                                   Scalar(rc.mode) * Scalar(n) / Scalar(N)));
    if (n > 0) x -= s;
    st.x(n) = x;
    const auto eq = solve_equilibrium_speed(law, Scalar(1) / s);
    if (!eq.ok()) throw DomainError("no steady state at the perturbed spacing");
    st.v(n) = eq.speed;
  }
  if (law.order() == LawOrder::Third) st.a = Vector<Scalar>::Zero(N);

  Scalar dt_cf = rc.dt_cf;
  if (const auto tc = law.traits().time_constant) dt_cf = std::min(dt_cf, Scalar(0.1) * *tc);
  const long cf_sub = std::max<long>(1, long(std::ceil(rc.record_dt / dt_cf - Scalar(1e-9))));
  dt_cf = rc.record_dt / Scalar(cf_sub);
  const long rows = std::lround(rc.horizon / rc.record_dt);

  const CellGrid<Scalar> grid{0, res.dx, cells};
  TrajectorySurface<Scalar> initial;
  initial.dt = rc.record_dt;
  initial.positions = st.x.transpose();
  initial.speeds = st.v.transpose();
  initial.ring_length = L;
  const auto init_field = to_eulerian(initial, grid);

  EulerianScenario<Scalar> sc;
  sc.grid = grid;
  sc.density = init_field.density.row(0).transpose();
  sc.speed = init_field.speed.row(0).transpose();
  sc.flux = rc.flux;
  const Scalar c0 = second_order_signal_speed(law, sc.density, sc.speed);
  const long pde_sub = std::max<long>(1, long(std::ceil(c0 * rc.record_dt / (Scalar(0.9) * res.dx) - Scalar(1e-9))));
  sc.dt = rc.record_dt / Scalar(pde_sub);
  sc.steps = rows * pde_sub;
  sc.record_every = pde_sub;

  EulerianField<Scalar> cf, pde;
  try {
    const auto run = simulate_continuous(law, st, Boundary<Scalar>{RingRoad<Scalar>{L}}, dt_cf, rows * cf_sub, cf_sub);
    cf = to_eulerian(run.surface, grid);
  } catch (const std::exception& e) {
    res.fault = std::string("car-following arm: ") + e.what();
    return res;
  }
  try {
    pde = solve_second_order(law, sc);
  } catch (const std::exception& e) {
    res.fault = std::string("continuum arm: ") + e.what();
    return res;
  }
  field_norms(cf, pde, cf.steps() - 1, pde.steps() - 1, res);
  res.count_gap = count_gap(cf, pde, 1, 1);
  res.growth_cf = modal_growth_rate(cf, 1, rc.mode);
  res.growth_pde = modal_growth_rate(pde, 1, rc.mode);
  res.compared = true;
  return res;
}

template <typename Scalar>
void ring_verdict(EquivalenceReport<Scalar>& rep, const RingCase<Scalar>& rc) {
  if (rep.table.empty()) {
    rep.verdict = "pass";
    return;
  }
  const auto& fin = rep.table.back();
  if (!fin.compared) {
    rep.verdict = "incomparable";
    return;
  }
  if (rc.regime == Regime::Stable) {
    rep.threshold = rc.threshold * rc.k0;
    rep.verdict = fin.linf_k <= rep.threshold ? "pass" : "fail";
  } else {
    const bool same = (fin.growth_cf > 0) == (fin.growth_pde > 0);
    rep.verdict = same ? "growth_agree" : "growth_disagree";
  }
}

}  // namespace detail

/// Ring-road comparison of a law against its continuum form; faults in
/// either arm leave that row uncompared with the fault attached.
template <typename Scalar>
EquivalenceReport<Scalar> compare_second_order(const AccelerationLaw<Scalar>& law, const RingCase<Scalar>& rc,
                                               std::span<const int> scales) {
  if (!(rc.k0 > Scalar(0))) throw ConfigError("k0 must be positive", "suite.k0");
  if (!(rc.amplitude >= Scalar(0) && rc.amplitude < Scalar(0.5)))
    throw ConfigError("amplitude must lie in [0, 0.5)", "suite.amplitude");
  if (rc.base_vehicles < 2) throw ConfigError("need at least two vehicles", "suite.vehicles");
  if (!(rc.horizon > Scalar(0) && rc.record_dt > Scalar(0) && rc.dt_cf > Scalar(0)))
    throw ConfigError("horizon and time steps must be positive", "suite.horizon");
  if (!(rc.cells_per_vehicle > Scalar(0))) throw ConfigError("cells per vehicle must be positive", "suite.cells_per_vehicle");
  const auto eq = solve_equilibrium_speed(law, rc.k0);
  if (!eq.ok()) throw DomainError(law.name() + " has no unique steady state at k0");

  EquivalenceReport<Scalar> rep;
  rep.scenario = rc.id;
  rep.model = law.name();
  for (const int r : scales) {
    if (r < 1) throw ConfigError("refinement factors must be positive", "suite.resolutions");
    rep.table.push_back(detail::ring_pair(law, rc, r));
  }
  detail::finish_rates(rep);
  detail::ring_verdict(rep, rc);
  return rep;
}

template <typename Scalar>
struct SuiteCase {
  std::string scenario;
  std::string model;
  AccelerationLaw<Scalar> law;
  RingCase<Scalar> ring;
};

/**
One report per (case, resolution), in case-major order regardless of
`jobs`. Every entry is isolated: an exception marks only that report
incomparable.
*/
template <typename Scalar>
std::vector<EquivalenceReport<Scalar>> run_suite(const std::vector<SuiteCase<Scalar>>& cases,
                                                 std::span<const int> scales, unsigned jobs = 1) {
  const std::size_t total = cases.size() * scales.size();
  std::vector<EquivalenceReport<Scalar>> out(total);
  auto work = [&](std::size_t idx) {
    const auto& sc = cases[idx / scales.size()];
    const int r = scales[idx % scales.size()];
    auto& rep = out[idx];
    try {
      rep = compare_second_order(sc.law, sc.ring, std::span<const int>(&r, 1));
    } catch (const std::exception& e) {
      rep = {};
      ResolutionResult<Scalar> row;
      row.scale = Scalar(r);
      row.label = "x" + std::to_string(r);
      row.fault = e.what();
      rep.table.push_back(row);
      rep.verdict = "incomparable";
    }
    rep.scenario = sc.scenario;
    rep.model = sc.model;
  };
  jobs = std::max(1u, std::min<unsigned>(jobs, unsigned(std::max<std::size_t>(total, 1))));
  if (jobs == 1) {
    for (std::size_t i = 0; i < total; ++i) work(i);
    return out;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  for (unsigned j = 0; j < jobs; ++j)
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < total; i = next++) work(i);
    });
  for (auto& t : pool) t.join();
  return out;
}

}  // namespace trafficeq
