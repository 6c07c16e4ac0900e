#include <doctest.h>

#include <cmath>
#include <random>

#include "trafficeq/acceleration_law.hpp"
#include "trafficeq/steady_state.hpp"

using namespace trafficeq;
using Fd = FundamentalDiagram<double>;
using Law = AccelerationLaw<double>;

namespace {

const Fd tri = Fd::triangular(20, 5, 0.2);

bool partials_close(const Partials<double>& a, const Partials<double>& b, double rel) {
  auto ok = [&](double x, double y) { return std::abs(x - y) <= rel * std::max(1.0, std::max(std::abs(x), std::abs(y))); };
  return ok(a.v, b.v) && ok(a.s, b.s) && ok(a.dv, b.dv);
}

}  // namespace

TEST_CASE("linear GM") {
  const Law gm = make_linear_gm(2.0);
  CHECK(gm(10, 30, 4) == doctest::Approx(2.0));
  CHECK(gm(3, 7, 0) == 0.0);
  const auto p = partials_at(gm, 10.0, 30.0, 4.0);
  CHECK(p.v == 0.0);
  CHECK(p.s == 0.0);
  CHECK(p.dv == doctest::Approx(0.5));
  CHECK_THROWS_AS(make_linear_gm(0.0), ParameterError);
}

TEST_CASE("nonlinear GM") {
  const Law gm = make_nonlinear_gm(1.0, 0, 1);
  CHECK(gm(10, 20, 2) == doctest::Approx(0.1));
  CHECK(partials_at(make_nonlinear_gm(1.0, 1, 1), 10.0, 20.0, 0.0).v == 0.0);
  const Law lin = make_linear_gm(0.5), deg = make_nonlinear_gm(2.0, 0, 0);
  for (double dv : {-3.0, 0.0, 1.5}) CHECK(deg(7, 11, dv) == doctest::Approx(lin(7, 11, dv)).epsilon(1e-15));
  CHECK_THROWS_AS(make_nonlinear_gm(1.0, 0, 2)(10, 0, 1), EvaluationError);
  CHECK_THROWS_AS(make_nonlinear_gm(-1.0, 0, 0), ParameterError);
}

TEST_CASE("OVM") {
  const Law ovm = make_ovm(1.0, tri);
  CHECK(ovm(5, 10, 3) == doctest::Approx(0.0));
  for (double s : {6.0, 8.0, 25.0, 50.0}) CHECK(ovm(theta(tri, s), s, -2) == 0.0);
  CHECK(partials_at(ovm, 3.0, 7.0, 0.0).v == -1.0);
  const auto p = partials_at(ovm, 5.0, 10.0, 0.0);
  CHECK(p.s == doctest::Approx(1.0 / tri.time_gap()));
  CHECK(p.dv == 0.0);
  CHECK_THROWS_AS(ovm(5, 4.0, 0), EvaluationError);
}

TEST_CASE("GFM") {
  const Law gfm = make_gfm(1.0, 0.5, 2.0, 1.0, 10.0, tri);
  const Law ovm = make_ovm(1.0, tri);
  for (double dv : {0.0, 0.5, 3.0})
    for (double s : {6.0, 12.0, 40.0}) CHECK(gfm(4, s, dv) == ovm(4, s, dv));
  CHECK(std::abs(gfm(4, 2000, -3) - ovm(4, 2000, -3)) < 1e-60);
  CHECK(gfm(4, 12, -3) < ovm(4, 12, -3));
  CHECK_THROWS_AS(make_gfm(1.0, 1.5, 2.0, 1.0, 10.0, tri), ParameterError);
  CHECK_THROWS_AS(make_gfm(1.0, 0.5, 0.0, 1.0, 10.0, tri), ParameterError);
}

TEST_CASE("IDM") {
  const Law idm = make_idm(1.0, 1.5, 4.0, 30.0, 1.0, 2.0);
  CHECK(idm(0, 1e9, 0) == doctest::Approx(1.0));
  CHECK(idm(30, 1e9, 0) == doctest::Approx(0.0));
  // Steady state at v = 15 for a = b = 1: s = 1/k with k from the closed form.
  const IdmParams p{1, 1, 4, 30, 1, 2};
  const double s = 1.0 / idm_closed_form_density(15.0, p);
  CHECK(s == doctest::Approx(17.5575).epsilon(1e-5));
  CHECK(std::abs(make_idm<double>(p)(15.0, s, 0.0)) < 1e-12);
  // The two sign conventions differ only through dv.
  const Law printed = make_idm(1.0, 1.5, 4.0, 30.0, 1.0, 2.0, IdmSign::Printed);
  CHECK(printed(12, 30, 0) == idm(12, 30, 0));
  CHECK(printed(12, 30, -2) > idm(12, 30, -2));  // closing gap brakes harder in the standard form
  CHECK(idm.name() == "idm_standard");
  CHECK(printed.name() == "idm_paper");
  CHECK_THROWS_AS(idm(10, 0, 0), EvaluationError);
  CHECK_THROWS_AS(make_idm(1.0, 1.5, 0.5, 30.0, 1.0, 2.0), ParameterError);
}

TEST_CASE("FVDM") {
  const Law fvdm = make_fvdm(1.0, 0.6, tri), ovm = make_ovm(1.0, tri), f0 = make_fvdm(1.0, 0.0, tri);
  for (double v : {0.0, 5.0, 19.0})
    for (double s : {6.0, 9.0, 30.0})
      for (double dv : {-2.0, 0.0, 1.0}) CHECK(f0(v, s, dv) == ovm(v, s, dv));
  CHECK(fvdm(theta(tri, 9.0), 9.0, 0.0) == 0.0);
  CHECK(partials_at(fvdm, 3.0, 8.0, 0.7).dv == doctest::Approx(0.6));
  CHECK_THROWS_AS(make_fvdm(1.0, -0.1, tri), ParameterError);
}

TEST_CASE("Aw-Rascle family") {
  const Fd green = Fd::greenshields(20, 0.2);
  CHECK(make_arz_cf(green)(3, 10, 1) == doctest::Approx(1.0).epsilon(1e-12));
  const Law jwz = make_jwz_cf(1.0, 5.0, tri);
  CHECK(jwz(5, 10, 0) == doctest::Approx(0.0));
  // JWZ as the general form with p'(1/s)/s^2 = c0/s, i.e. p'(k) = c0/k.
  const Law general = make_aw_rascle_cf<double>([](double) { return 1.0; }, [](double k) { return 5.0 / k; }, tri);
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> V(0, 20), S(5.5, 60), D(-3, 3);
  for (int i = 0; i < 100; ++i) {
    const double v = V(rng), s = S(rng), dv = D(rng);
    CHECK(general(v, s, dv) == doctest::Approx(jwz(v, s, dv)).epsilon(1e-12));
  }
  CHECK(general(theta(tri, 12.0), 12.0, 0.0) == 0.0);
  CHECK_THROWS_AS(general(5, 4.0, 0), EvaluationError);
}

TEST_CASE("analytic partials agree with central differences") {
  const auto catalog = model_catalog(tri);
  CHECK(catalog.size() == 10);
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> V(0.5, 19.5), S(5.5, 80), D(-2, 2);
  for (const auto& entry : catalog) {
    const Law& law = entry.law;
    CHECK_FALSE(entry.continuum_family_note.empty());
    if (!law.has_analytic_partials()) continue;
    int checked = 0;
    while (checked < 100) {
      const double v = V(rng), s = S(rng), dv = D(rng);
      // Stay off the triangular kink and the GFM dv = 0 kink.
      if (std::abs(s - 25.0) < 0.1) continue;  // free-flow spacing S_j + tau v_f
      if (std::abs(dv) < 1e-3) continue;
      CHECK_MESSAGE(partials_close(law.analytic_partials(v, s, dv), numeric_partials(law, v, s, dv), 1e-6),
                    law.name() << " at " << v << "," << s << "," << dv);
      ++checked;
    }
  }
}

TEST_CASE("third-order wrapper") {
  const Law inner = make_ovm(1.0, tri);
  const Law third = make_third_order(inner, 0.5);
  CHECK(third.order() == LawOrder::Third);
  CHECK(third.jerk(4, 12, 0, inner(4, 12, 0)) == 0.0);
  CHECK(std::abs(make_third_order(inner, 1e6).jerk(4, 12, 0, 0.0)) < 1e-5);
  CHECK_THROWS_AS(make_third_order(third, 0.5), ParameterError);
  CHECK_THROWS_AS(make_third_order(inner, 0.0), ParameterError);

  // Step response at a fixed state: a(t) = Psi (1 - exp(-t/T')).
  const double v = 4, s = 12, dv = 0, Tp = 0.5, psi = inner(v, s, dv);
  double a = 0, t = 0;
  const double h = 1e-3;
  std::vector<std::pair<double, double>> pts;
  while (t < 5 * Tp - 1e-12) {
    auto f = [&](double x) { return third.jerk(v, s, dv, x); };
    const double k1 = f(a), k2 = f(a + 0.5 * h * k1), k3 = f(a + 0.5 * h * k2), k4 = f(a + h * k3);
    a += h / 6 * (k1 + 2 * k2 + 2 * k3 + k4);
    t += h;
    pts.emplace_back(t, std::log(std::abs(psi - a)));
  }
  double st = 0, sy = 0, stt = 0, sty = 0;
  for (auto [x, y] : pts) st += x, sy += y, stt += x * x, sty += x * y;
  const double n = double(pts.size());
  const double slope = (n * sty - st * sy) / (n * stt - st * st);
  CHECK(std::abs(-1.0 / slope - Tp) <= 0.01 * Tp);
}
