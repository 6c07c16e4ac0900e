#include <doctest.h>

#include <cmath>
#include <limits>
#include <random>

#include "trafficeq/fundamental_diagram.hpp"

using namespace trafficeq;
using Fd = FundamentalDiagram<double>;

namespace {

Fd tri() { return Fd::triangular(20, 5, 0.2); }
Fd green() { return Fd::greenshields(20, 0.2); }

Fd sampled_greenshields(int n) {
  std::vector<std::pair<double, double>> table;
  const Fd g = green();
  for (int i = 0; i <= n; ++i) {
    const double k = 0.2 * double(i) / double(n);
    table.emplace_back(k, phi(g, k));
  }
  return Fd::tabulated(table);
}

}  // namespace

TEST_CASE("phi examples") {
  CHECK(phi(tri(), 0.01) == doctest::Approx(0.2).epsilon(1e-15));
  CHECK(phi(green(), 0.1) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(tri().critical_density() == doctest::Approx(0.04));
  CHECK(phi(tri(), 0.04) == doctest::Approx(0.8).epsilon(1e-14));
  CHECK(tri().capacity() == doctest::Approx(20.0 * 5 * 0.2 / 25).epsilon(1e-14));
  CHECK(phi(tri(), 0.0) == 0.0);
  CHECK(phi(tri(), 0.2) == 0.0);
  CHECK(phi(green(), 0.2) == 0.0);
  CHECK_THROWS_AS(phi(tri(), 0.21), DomainError);
  CHECK_THROWS_AS(phi(tri(), -0.01), DomainError);
}

TEST_CASE("theta examples and identity") {
  CHECK(theta(tri(), 5.0) == 0.0);
  CHECK(theta(green(), 10.0) == doctest::Approx(10.0).epsilon(1e-15));
  CHECK_THROWS_AS(theta(tri(), 4.9), DomainError);
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> S(5.0, 500.0);
  for (const Fd& fd : {tri(), green(), sampled_greenshields(50)}) {
    for (int i = 0; i < 1000; ++i) {
      const double s = S(rng);
      const double lhs = theta(fd, s), rhs = s * phi(fd, 1.0 / s);
      CHECK(std::abs(lhs - rhs) <= 1e-12 * std::max(1.0, std::abs(rhs)));
    }
  }
}

TEST_CASE("theta nondecreasing, eta nonincreasing, phi concave") {
  for (const Fd& fd : {tri(), green()}) {
    double prev = -1;
    for (int i = 0; i <= 1000; ++i) {
      const double s = 5.0 + 0.5 * i;
      const double v = theta(fd, s);
      CHECK(v >= prev);
      prev = v;
    }
    prev = std::numeric_limits<double>::infinity();
    for (int i = 1; i <= 1000; ++i) {
      const double v = eta(fd, 0.2 * i / 1000.0);
      CHECK(v <= prev);
      prev = v;
    }
    const double h = 0.2 / 1000;
    for (int i = 1; i < 1000; ++i) {
      const double k = i * h;
      CHECK(phi(fd, k + h) - 2 * phi(fd, k) + phi(fd, k - h) <= 1e-12);
    }
  }
}

TEST_CASE("eta and eta_prime") {
  CHECK(eta(tri(), 0.1) == doctest::Approx(5.0).epsilon(1e-14));
  CHECK(eta_prime(green(), 0.05) == doctest::Approx(-100.0).epsilon(1e-14));
  CHECK(eta_prime(green(), 0.17) == doctest::Approx(-100.0).epsilon(1e-14));
  CHECK_THROWS_AS(eta(tri(), 0.0), DomainError);
  CHECK_THROWS_AS(eta_prime(tri(), -1.0), DomainError);
  // phi = k eta
  for (const Fd& fd : {tri(), green()})
    for (int i = 1; i <= 1000; ++i) {
      const double k = 0.2 * i / 1000.0;
      CHECK(std::abs(phi(fd, k) - k * eta(fd, k)) <= 1e-12 * std::max(1e-300, phi(fd, k)) + 1e-300);
    }
}

TEST_CASE("tabulated eta_prime matches the analytic Greenshields slope") {
  const Fd table = sampled_greenshields(2000);
  for (double k : {0.0123, 0.0377, 0.061, 0.0999, 0.1333, 0.171}) {
    const double fd_slope = eta_prime(table, k);
    CHECK(std::abs(fd_slope - (-100.0)) <= 1e-4 * 100.0);
  }
}

TEST_CASE("cfl_max_dt") {
  CHECK(cfl_max_dt(tri(), 1.0) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(cfl_max_dt(tri(), 2.0) == doctest::Approx(2.0).epsilon(1e-15));
  CHECK(cfl_max_dt(green(), 1.0) == doctest::Approx(0.25).epsilon(1e-15));
  CHECK_THROWS_AS(cfl_max_dt(tri(), 0.0), DomainError);
  // Tabulated: the steepest theta' is the jam-side intercept k_j |slope|.
  const Fd t = Fd::tabulated({{0.0, 0.0}, {0.05, 1.0}, {0.2, 0.0}});
  CHECK(cfl_max_dt(t, 1.0) == doctest::Approx(1.0 / (0.2 * 1.0 / 0.15)));
}

TEST_CASE("parameter validation") {
  CHECK_THROWS_AS(Fd::triangular(0, 5, 0.2), ParameterError);
  CHECK_THROWS_AS(Fd::triangular(20, -5, 0.2), ParameterError);
  CHECK_THROWS_AS(Fd::greenshields(20, 0), ParameterError);
  CHECK_THROWS_AS(Fd::tabulated({{0.0, 0.0}, {0.1, 1.0}, {0.05, 0.0}}), ParameterError);
}

TEST_CASE("demand and supply") {
  const Fd fd = tri();
  CHECK(demand(fd, 0.01) == doctest::Approx(0.2));
  CHECK(demand(fd, 0.1) == doctest::Approx(0.8));
  CHECK(supply(fd, 0.01) == doctest::Approx(0.8));
  CHECK(supply(fd, 0.1) == doctest::Approx(0.5));
}
