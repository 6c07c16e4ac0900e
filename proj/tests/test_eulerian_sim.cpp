#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "trafficeq/continuum.hpp"
#include "trafficeq/equivalence.hpp"

using namespace trafficeq;

namespace {

const auto tri = FundamentalDiagram<double>::triangular(20, 5, 0.2);

EulerianScenario<double> grid(double length, double dx, double dt, double horizon, long record_every = 1) {
  EulerianScenario<double> sc;
  const auto M = Eigen::Index(std::lround(length / dx));
  sc.grid = CellGrid<double>{0, dx, M};
  sc.dt = dt;
  sc.steps = std::lround(horizon / dt);
  sc.record_every = record_every;
  sc.density = Vector<double>::Zero(M);
  return sc;
}

template <typename F>
void fill(Vector<double>& v, const EulerianScenario<double>& sc, F f) {
  for (Eigen::Index c = 0; c < sc.grid.cells; ++c) v(c) = f(sc.grid.x0 + (c + 0.5) * sc.grid.dx);
}

double relative_drift(const EulerianField<double>& f) {
  const double n0 = total_vehicles(f, 0);
  double worst = 0;
  for (Eigen::Index r = 0; r < f.steps(); ++r) worst = std::max(worst, std::abs(total_vehicles(f, r) - n0) / n0);
  return worst;
}

// Greenshields rarefaction fan from k_j on the left to k_r on the right.
double greenshields_fan(double xi, double v_f, double k_j, double k_l, double k_r) {
  const double left = v_f * (1 - 2 * k_l / k_j), right = v_f * (1 - 2 * k_r / k_j);
  if (xi <= left) return k_l;
  if (xi >= right) return k_r;
  return 0.5 * k_j * (1 - xi / v_f);
}

}  // namespace

TEST_CASE("Godunov keeps a uniform periodic state exactly") {
  auto sc = grid(1000, 5, 0.2, 100, 50);
  sc.density.setConstant(0.07);
  const auto f = solve_lwr_godunov(tri, sc);
  CHECK((f.density.array() == 0.07).all());
}

TEST_CASE("Godunov shock front tracks Rankine-Hugoniot") {
  auto sc = grid(2000, 5, 0.05, 200, 4000);
  fill(sc.density, sc, [](double x) { return x < 1500 ? 0.02 : 0.2; });
  sc.boundary = FieldBoundary::InflowOutflow;
  sc.k_in = 0.02;
  const auto f = solve_lwr_godunov(tri, sc);
  const double speed = (phi(tri, 0.2) - phi(tri, 0.02)) / (0.2 - 0.02);
  CHECK(speed == doctest::Approx(-2.2222).epsilon(1e-4));
  const double front = detail::shock_front(f, f.steps() - 1, 0.11);
  CHECK(std::abs(front - (1500 + speed * 200)) <= 2 * 5.0);
}

TEST_CASE("Godunov rarefaction converges to the analytic fan") {
  const auto gs = FundamentalDiagram<double>::greenshields(20, 0.2);
  const double horizon = 40;
  auto l1 = [&](double dx) {
    auto sc = grid(2000, dx, 0.02 * dx, horizon, std::lround(horizon / (0.02 * dx)));
    fill(sc.density, sc, [](double x) { return x < 1000 ? 0.2 : 0.02; });
    sc.boundary = FieldBoundary::InflowOutflow;
    sc.k_in = 0.2;
    const auto f = solve_lwr_godunov(gs, sc);
    double err = 0;
    for (Eigen::Index c = 0; c < f.cells(); ++c)
      err += std::abs(f.density(1, c) - greenshields_fan((f.cell_center(c) - 1000) / horizon, 20, 0.2, 0.2, 0.02)) * dx;
    return err;
  };
  const double e1 = l1(10), e2 = l1(5), e3 = l1(2.5);
  CHECK(std::log2(e1 / e2) == doctest::Approx(1.0).epsilon(0.3));
  CHECK(std::log2(e2 / e3) == doctest::Approx(1.0).epsilon(0.3));
}

TEST_CASE("Godunov maximum principle") {
  auto sc = grid(1000, 5, 0.2, 200, 10);
  std::mt19937 rng(7);
  std::uniform_real_distribution<double> u(0.03, 0.15);
  for (Eigen::Index c = 0; c < sc.grid.cells; ++c) sc.density(c) = u(rng);
  const double lo = sc.density.minCoeff(), hi = sc.density.maxCoeff();
  const auto f = solve_lwr_godunov(tri, sc);
  CHECK(f.density.minCoeff() >= lo - 1e-15);
  CHECK(f.density.maxCoeff() <= hi + 1e-15);
}

TEST_CASE("periodic runs conserve vehicles over 1e4 steps") {
  SUBCASE("Godunov") {
    auto sc = grid(1000, 5, 0.2, 2000, 100);
    fill(sc.density, sc, [](double x) { return 0.08 + 0.05 * std::sin(2 * std::numbers::pi * x / 1000); });
    CHECK(sc.steps == 10000);
    CHECK(relative_drift(solve_lwr_godunov(tri, sc)) <= 1e-12);
  }
  SUBCASE("second order") {
    const auto law = make_ovm(0.4, tri);
    auto sc = grid(400, 4, 0.05, 500, 100);
    fill(sc.density, sc, [](double x) { return 0.1 * (1 + 0.01 * std::sin(2 * std::numbers::pi * x / 400)); });
    sc.speed.resize(sc.grid.cells);
    for (Eigen::Index c = 0; c < sc.grid.cells; ++c) sc.speed(c) = theta(tri, 1 / sc.density(c));
    sc.flux = SpeedFlux::LeaderSpeed;
    CHECK(sc.steps == 10000);
    CHECK(relative_drift(solve_second_order(law, sc)) <= 1e-10);
  }
}

TEST_CASE("inflow/outflow bookkeeping") {
  auto sc = grid(1000, 5, 0.1, 100, 10);
  fill(sc.density, sc, [](double x) { return x < 500 ? 0.03 : 0.12; });
  sc.boundary = FieldBoundary::InflowOutflow;
  sc.k_in = 0.05;
  SUBCASE("Godunov") {
    const auto f = solve_lwr_godunov(tri, sc);
    for (Eigen::Index r = 0; r < f.steps(); ++r) {
      const double change = total_vehicles(f, r) - total_vehicles(f, 0);
      CHECK(std::abs(change - (f.inflow(r) - f.outflow(r))) <= 1e-10 * total_vehicles(f, 0));
    }
  }
  SUBCASE("second order") {
    fill(sc.density, sc, [](double x) { return 0.065 + 0.015 * std::tanh((x - 500) / 100); });
    sc.v_in = theta(tri, 1 / 0.05);
    sc.speed.resize(sc.grid.cells);
    for (Eigen::Index c = 0; c < sc.grid.cells; ++c) sc.speed(c) = theta(tri, 1 / sc.density(c));
    sc.flux = SpeedFlux::LeaderSpeed;
    sc.dt = 0.05;
    sc.steps = 1000;
    sc.record_every = 20;
    const auto f = solve_second_order(make_ovm(0.4, tri), sc);
    for (Eigen::Index r = 0; r < f.steps(); ++r) {
      const double change = total_vehicles(f, r) - total_vehicles(f, 0);
      CHECK(std::abs(change - (f.inflow(r) - f.outflow(r))) <= 1e-10 * total_vehicles(f, 0));
    }
  }
}

TEST_CASE("CFL violations are configuration errors") {
  auto sc = grid(1000, 5, 0.3, 10);
  sc.density.setConstant(0.05);
  try {
    solve_lwr_godunov(tri, sc);
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    CHECK(e.path() == "pde.dt");
  }
  sc.speed = Vector<double>::Constant(sc.grid.cells, 20);
  try {
    solve_second_order(make_ovm(0.4, tri), sc);
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    CHECK(e.path() == "pde.dt");
  }
}

TEST_CASE("second-order equilibrium is stationary") {
  const auto law = make_ovm(0.4, tri);
  for (const auto flux : {SpeedFlux::Upwind, SpeedFlux::LeaderSpeed}) {
    auto sc = grid(400, 4, 0.02, 20, 1000);
    sc.density.setConstant(0.1);
    sc.speed = Vector<double>::Constant(sc.grid.cells, theta(tri, 10.0));
    sc.flux = flux;
    const auto f = solve_second_order(law, sc);
    CHECK((f.density.row(1).array() - 0.1).abs().maxCoeff() <= 1e-8);
    CHECK((f.speed.row(1).array() - 5.0).abs().maxCoeff() <= 1e-8);
  }
}

TEST_CASE("continuum OVM amplifies small perturbations at every tested state") {
  const auto law = make_ovm(0.5, tri);
  for (double k0 : {0.06, 0.1, 0.15}) {
    auto sc = grid(400, 2, 0.05, 40, 20);
    fill(sc.density, sc, [&](double x) { return k0 * (1 + 0.01 * std::sin(2 * std::numbers::pi * x / 400)); });
    sc.speed.resize(sc.grid.cells);
    for (Eigen::Index c = 0; c < sc.grid.cells; ++c) sc.speed(c) = theta(tri, 1 / sc.density(c));
    sc.flux = SpeedFlux::LeaderSpeed;
    const auto f = solve_second_order(law, sc);
    CAPTURE(k0);
    CHECK(modal_growth_rate(f) > 0);
    CHECK(modal_amplitude(f, f.steps() - 1) > modal_amplitude(f, 0));
  }
}

TEST_CASE("linear GM continuum advects speed at v - 1/(T k)") {
  const auto gm = make_linear_gm(1.0);
  const double horizon = 40, base = 15;
  auto sc = grid(1000, 1, 0.02, horizon, std::lround(horizon / 0.02));
  sc.density.setConstant(0.1);
  sc.speed.resize(sc.grid.cells);
  fill(sc.speed, sc, [&](double x) { return base + 0.5 * std::exp(-std::pow((x - 300) / 30, 2)); });
  sc.flux = SpeedFlux::LeaderSpeed;
  const auto f = solve_second_order(gm, sc);
  auto centroid = [&](Eigen::Index r) {
    double s = 0, w = 0;
    for (Eigen::Index c = 0; c < f.cells(); ++c) {
      s += (f.speed(r, c) - base) * f.cell_center(c);
      w += f.speed(r, c) - base;
    }
    return s / w;
  };
  const double measured = (centroid(1) - centroid(0)) / horizon;
  const double expected = base - 1 / (1.0 * 0.1);
  CHECK(std::abs(measured - expected) <= 0.05 * expected);
}

TEST_CASE("second-order solver is pure advection when Psi vanishes") {
  typename AccelerationLaw<double>::Traits traits;
  const AccelerationLaw<double> none(
      "zero", {}, [](double, double, double) { return 0.0; },
      [](double, double, double) { return Partials<double>{0, 0, 0}; }, traits);
  const double horizon = 30;
  auto sc = grid(1000, 1, 0.05, horizon, std::lround(horizon / 0.05));
  fill(sc.density, sc, [](double x) { return 0.05 + 0.02 * std::exp(-std::pow((x - 300) / 40, 2)); });
  sc.speed = Vector<double>::Constant(sc.grid.cells, 10);
  const auto f = solve_second_order(none, sc);
  CHECK((f.speed.array() == 10.0).all());
  auto centroid = [&](Eigen::Index r) {
    double s = 0, w = 0;
    for (Eigen::Index c = 0; c < f.cells(); ++c) {
      s += (f.density(r, c) - 0.05) * f.cell_center(c);
      w += f.density(r, c) - 0.05;
    }
    return s / w;
  };
  CHECK((centroid(1) - centroid(0)) / horizon == doctest::Approx(10).epsilon(1e-3));
}

TEST_CASE("second-order solver rejects first-order input") {
  auto sc = grid(100, 5, 0.1, 1);
  sc.density.setConstant(0.05);
  sc.speed = Vector<double>::Constant(sc.grid.cells, 5);
  CHECK_THROWS_AS(solve_second_order(make_third_order(make_ovm(0.4, tri), 0.2), sc), ConfigError);
  sc.speed.resize(3);
  CHECK_THROWS_AS(solve_second_order(make_ovm(0.4, tri), sc), ConfigError);
}
