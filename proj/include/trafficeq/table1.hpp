#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "trafficeq/errors.hpp"

namespace trafficeq {

/// A smooth x = X(t, N) with its analytic first derivatives and X_tt.
template <typename Scalar = double>
struct AnalyticSurface {
  std::function<Scalar(Scalar t, Scalar n)> x;
  std::function<Scalar(Scalar t, Scalar n)> x_t;
  std::function<Scalar(Scalar t, Scalar n)> x_n;
  std::function<Scalar(Scalar t, Scalar n)> x_tt;
};

/// X = v0 t - s0 N.
template <typename Scalar>
AnalyticSurface<Scalar> linear_surface(Scalar v0, Scalar s0) {
  return {[=](Scalar t, Scalar n) { return v0 * t - s0 * n; }, [=](Scalar, Scalar) { return v0; },
          [=](Scalar, Scalar) { return -s0; }, [](Scalar, Scalar) { return Scalar(0); }};
}

/// X = v0 t - s0 N + eps sin(alpha N + beta t); requires eps |alpha| < s0.
template <typename Scalar>
AnalyticSurface<Scalar> wave_surface(Scalar v0, Scalar s0, Scalar eps, Scalar alpha, Scalar beta) {
  if (!(std::abs(eps * alpha) < s0)) throw DomainError("wave_surface: vehicles would collide");
  return {[=](Scalar t, Scalar n) { return v0 * t - s0 * n + eps * std::sin(alpha * n + beta * t); },
          [=](Scalar t, Scalar n) { return v0 + eps * beta * std::cos(alpha * n + beta * t); },
          [=](Scalar t, Scalar n) { return -s0 + eps * alpha * std::cos(alpha * n + beta * t); },
          [=](Scalar t, Scalar n) { return -eps * beta * beta * std::sin(alpha * n + beta * t); }};
}

template <typename Scalar>
struct Table1Resolution {
  Scalar dn;  // vehicle-number step
  Scalar dt;
  Scalar dx;
};

template <typename Scalar>
struct Table1Row {
  std::string name;
  Scalar max_residual;
};

template <typename Scalar>
struct Table1Report {
  std::vector<Table1Row<Scalar>> rows;

  Scalar residual(const std::string& name) const {
    for (const auto& r : rows)
      if (r.name == name) return r.max_residual;
    throw DomainError("no variable pair named " + name);
  }
};

/**
Evaluates every Lagrangian/Eulerian variable pair at the sample points (t, N).

Lagrangian side: first-order differences of X with steps (dn, dt): backward in
N (a vehicle looks at its leader), forward in t.

Eulerian side: k, v and a = v_t + v v_x are reconstructed pointwise from the
analytic surface by inverting x = X(t, N); their t and x derivatives use
first-order differences with steps (dt, dx).

Both sides approximate the same exact quantity, so every residual is O(dn + dt + dx).
*/
template <typename Scalar>
Table1Report<Scalar> verify_table1(const AnalyticSurface<Scalar>& surf,
                                   const std::vector<std::pair<Scalar, Scalar>>& samples,
                                   const Table1Resolution<Scalar>& res) {
  const Scalar h = res.dn;
  const Scalar dt = res.dt;
  const Scalar dx = res.dx;
  if (!(h > 0 && dt > 0 && dx > 0)) throw DomainError("verify_table1: steps must be positive");

  // Lagrangian differences.
  auto X = [&](Scalar t, Scalar n) { return surf.x(t, n); };
  auto Xt = [&](Scalar t, Scalar n) { return (X(t + dt, n) - X(t, n)) / dt; };
  auto XN = [&](Scalar t, Scalar n) { return (X(t, n) - X(t, n - h)) / h; };
  auto XtN = [&](Scalar t, Scalar n) { return (Xt(t, n) - Xt(t, n - h)) / h; };
  auto XNN = [&](Scalar t, Scalar n) {
    return (X(t, n) - Scalar(2) * X(t, n - h) + X(t, n - 2 * h)) / (h * h);
  };
  auto XtNN = [&](Scalar t, Scalar n) {
    return (Xt(t, n) - Scalar(2) * Xt(t, n - h) + Xt(t, n - 2 * h)) / (h * h);
  };
  auto Xtt = [&](Scalar t, Scalar n) {
    return (X(t + 2 * dt, n) - Scalar(2) * X(t + dt, n) + X(t, n)) / (dt * dt);
  };
  auto Xttt = [&](Scalar t, Scalar n) {
    return (X(t + 3 * dt, n) - Scalar(3) * X(t + 2 * dt, n) + Scalar(3) * X(t + dt, n) - X(t, n)) /
           (dt * dt * dt);
  };

  // Eulerian point fields through the inverse map N = n(t, x).
  auto label = [&](Scalar t, Scalar x, Scalar guess) {
    Scalar n = guess;
    for (int it = 0; it < 100; ++it) {
      const Scalar step = (surf.x(t, n) - x) / surf.x_n(t, n);
      n -= step;
      if (std::abs(step) <= Scalar(1e-15) * std::max(Scalar(1), std::abs(n))) break;
    }
    return n;
  };
  struct Point {
    Scalar k, v, a;
  };
  auto field = [&](Scalar t, Scalar x, Scalar guess) {
    const Scalar n = label(t, x, guess);
    return Point{-Scalar(1) / surf.x_n(t, n), surf.x_t(t, n), surf.x_tt(t, n)};
  };

  const std::vector<std::string> names = {
      "density",       "speed",          "flow",          "speed_rate",
      "speed_gradient", "speed_curvature", "density_rate",  "density_gradient",
      "acceleration",  "jerk",           "speed_difference", "spacing_difference"};
  std::vector<Scalar> worst(names.size(), Scalar(0));

  for (const auto& [t, n] : samples) {
    const Scalar x = X(t, n);
    const Scalar guess_up = n + dx / std::abs(surf.x_n(t, n));
    const Point p = field(t, x, n);
    const Point p_up = field(t, x - dx, guess_up);
    const Point p_up2 = field(t, x - 2 * dx, n + 2 * dx / std::abs(surf.x_n(t, n)));
    const Point p_next = field(t + dt, x, n);

    const Scalar k = p.k, v = p.v;
    const Scalar v_t = (p_next.v - v) / dt;
    const Scalar v_x = (v - p_up.v) / dx;
    const Scalar v_xx = (v - Scalar(2) * p_up.v + p_up2.v) / (dx * dx);
    const Scalar k_t = (p_next.k - k) / dt;
    const Scalar k_x = (k - p_up.k) / dx;
    const Scalar a_t = (p_next.a - p.a) / dt;
    const Scalar a_x = (p.a - p_up.a) / dx;

    const Scalar xn = XN(t, n), xt = Xt(t, n), xtn = XtN(t, n), xnn = XNN(t, n);
    const Scalar xn3 = xn * xn * xn;

    const Scalar lagr[] = {-Scalar(1) / xn,
                           xt,
                           -xt / xn,
                           Xtt(t, n) - xt / xn * xtn,
                           xtn / xn,
                           (XtNN(t, n) * xn - xtn * xnn) / xn3,
                           (xtn * xn - xt * xnn) / xn3,
                           xnn / xn3,
                           Xtt(t, n),
                           Xttt(t, n),
                           xtn,
                           xnn};
    const Scalar eul[] = {k,   v,   k * v,     v_t,  v_x,        v_xx,
                          k_t, k_x, v_t + v * v_x, a_t + v * a_x, -v_x / k, -k_x / (k * k * k)};
    for (std::size_t r = 0; r < names.size(); ++r)
      worst[r] = std::max(worst[r], std::abs(lagr[r] - eul[r]));
  }

  Table1Report<Scalar> report;
  for (std::size_t r = 0; r < names.size(); ++r) report.rows.push_back({names[r], worst[r]});
  return report;
}

}  // namespace trafficeq
