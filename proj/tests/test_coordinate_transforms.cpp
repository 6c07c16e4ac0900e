#include <doctest.h>

#include <cmath>

#include "trafficeq/table1.hpp"
#include "trafficeq/transforms.hpp"

using namespace trafficeq;
using Surface = TrajectorySurface<double>;

namespace {

/// Samples x = f(t, n) on steps x vehicles.
template <typename F>
Surface sample(F f, int steps, int vehicles, double dt) {
  Surface s;
  s.dt = dt;
  s.positions.resize(steps, vehicles);
  for (int i = 0; i < steps; ++i)
    for (int n = 0; n < vehicles; ++n) s.positions(i, n) = f(i * dt, double(n));
  return s;
}

}  // namespace

TEST_CASE("Lagrangian derivatives of a uniform platoon") {
  const Surface s = sample([](double t, double n) { return 10 * t - 25 * n; }, 5, 4, 0.5);
  const auto d = lagrangian_derivatives(s, 2, 2);
  CHECK(std::abs(d.x_t - 10.0) <= 1e-9);
  CHECK(d.x_n == -25.0);
  CHECK(std::abs(d.x_tn) <= 1e-9);
  REQUIRE(d.x_nn.has_value());
  CHECK(*d.x_nn == 0.0);
  CHECK(std::abs(d.x_tt) <= 1e-9);
  CHECK_FALSE(lagrangian_derivatives(s, 2, 1).x_nn.has_value());
  CHECK_THROWS_AS(lagrangian_derivatives(s, 2, 0), DomainError);
  CHECK_THROWS_AS(lagrangian_derivatives(s, 5, 1), DomainError);
}

TEST_CASE("second vehicle difference of a quadratic surface is exact") {
  const double c = 0.75;
  const Surface s = sample([c](double, double n) { return 1000 - 25 * n - c * n * n; }, 3, 6, 1.0);
  for (int n = 2; n < 6; ++n) CHECK(*lagrangian_derivatives(s, 1, n).x_nn == -2 * c);
}

TEST_CASE("to_eulerian of a uniform platoon") {
  Surface s = sample([](double t, double n) { return 2000 + 10 * t - 25 * n; }, 3, 41, 1.0);
  const auto f = to_eulerian(s, CellGrid<double>{1000, 10, 100});
  for (Eigen::Index i = 0; i < f.steps(); ++i)
    for (Eigen::Index c = 0; c < f.cells(); ++c)
      if (f.coverage(i, c) >= 1.0 - 1e-12) {
        CHECK(f.density(i, c) == doctest::Approx(0.04).epsilon(1e-12));
        CHECK(f.speed(i, c) == doctest::Approx(10.0).epsilon(1e-12));
      }
  // 40 gaps of 25 m span exactly 40 vehicles' worth of density.
  CHECK(total_vehicles(f, 0) == doctest::Approx(40.0).epsilon(1e-12));
}

TEST_CASE("to_eulerian of a two-spacing platoon") {
  // Front 10 vehicles at spacing 20, rear 10 at 40.
  Surface s;
  s.dt = 1;
  s.positions.resize(1, 21);
  double x = 1000;
  for (int n = 0; n < 21; ++n) {
    if (n > 0) x -= n <= 10 ? 20.0 : 40.0;
    s.positions(0, n) = x;
  }
  s.speeds = Grid<double>::Constant(1, 21, 10.0);
  const auto f = to_eulerian(s, CellGrid<double>{0, 30, 34});
  int k05 = 0, k025 = 0, mixed = 0;
  for (Eigen::Index c = 0; c < f.cells(); ++c) {
    if (f.coverage(0, c) < 1.0) continue;
    const double k = f.density(0, c);
    if (std::abs(k - 0.05) < 1e-12) ++k05;
    else if (std::abs(k - 0.025) < 1e-12) ++k025;
    else ++mixed;
  }
  CHECK(k05 > 0);
  CHECK(k025 > 0);
  CHECK(mixed == 1);
  CHECK(std::abs(total_vehicles(f, 0) - 20.0) <= 1.0);
  CHECK(std::isnan(f.speed(0, 0)));
}

TEST_CASE("to_trajectories of constant and step densities") {
  EulerianField<double> f;
  f.dx = 10;
  f.dt = 1;
  f.density = Grid<double>::Constant(2, 100, 0.04);
  f.speed = Grid<double>::Zero(2, 100);
  const std::vector<double> seed{1000.0};
  const auto s = to_trajectories(f, 30, std::span<const double>(seed));
  for (int n = 1; n < 30; ++n) CHECK(s.positions(0, n - 1) - s.positions(0, n) == doctest::Approx(25.0).epsilon(1e-12));
  CHECK(s.positions(0, 0) == doctest::Approx(1000.0));

  for (Eigen::Index c = 0; c < 100; ++c) f.density.col(c).setConstant(c >= 50 ? 0.05 : 0.025);
  const auto t = to_trajectories(f, 30, std::span<const double>(seed));
  for (int n = 1; n < 30; ++n) {
    const double gap = t.positions(0, n - 1) - t.positions(0, n);
    if (t.positions(0, n) >= 500) CHECK(gap == doctest::Approx(20.0).epsilon(1e-9));
    if (t.positions(0, n - 1) <= 500) CHECK(gap == doctest::Approx(40.0).epsilon(1e-9));
  }
  CHECK_THROWS_AS(to_trajectories(f, 1000, std::span<const double>(seed)), DomainError);
}

TEST_CASE("round trip Lagrangian -> Eulerian -> Lagrangian within one cell") {
  auto X = [](double t, double n) { return 3000 + 12 * t - 25 * n + 4 * std::sin(0.3 * n + 0.2 * t); };
  for (double dx : {5.0, 2.5, 1.25}) {
    Surface s = sample(X, 4, 60, 1.0);
    const auto f = to_eulerian(s, CellGrid<double>{1000, dx, long(2200 / dx)});
    const std::vector<double> seed{s.positions(0, 5)};
    const auto back = to_trajectories(f, 40, std::span<const double>(seed));
    double worst = 0;
    for (int n = 0; n < 40; ++n) worst = std::max(worst, std::abs(back.positions(0, n) - s.positions(0, n + 5)));
    CHECK(worst <= dx);
  }
}

TEST_CASE("variable-pair residuals") {
  std::vector<std::pair<double, double>> samples;
  for (double t : {1.0, 2.5, 4.0})
    for (double n : {10.0, 17.0, 23.0}) samples.emplace_back(t, n);

  const auto lin = verify_table1(linear_surface(12.0, 25.0), samples, {1.0, 0.1, 1.0});
  CHECK(lin.rows.size() == 12);
  for (const auto& r : lin.rows) CHECK_MESSAGE(r.max_residual <= 1e-9, r.name);

  const auto wave = wave_surface(12.0, 25.0, 2.0, 0.2, 0.3);
  std::vector<Table1Report<double>> reps;
  for (double h : {0.2, 0.1, 0.05}) reps.push_back(verify_table1(wave, samples, {h, h / 4, h}));
  for (std::size_t r = 0; r < reps[0].rows.size(); ++r) {
    const double e0 = reps[0].rows[r].max_residual, e1 = reps[1].rows[r].max_residual, e2 = reps[2].rows[r].max_residual;
    CHECK_MESSAGE(std::log2(e0 / e1) >= 0.9, reps[0].rows[r].name);
    CHECK_MESSAGE(std::log2(e1 / e2) >= 0.9, reps[0].rows[r].name);
  }
}

TEST_CASE("surface validation rejects collisions") {
  Surface s = sample([](double, double n) { return -10 * n; }, 2, 3, 1.0);
  s.positions(1, 2) = s.positions(1, 1) + 1;
  CHECK_THROWS_AS(s.validate(), DomainError);
  CHECK_THROWS_AS(to_eulerian(s, CellGrid<double>{-50, 1, 60}), DomainError);
}
