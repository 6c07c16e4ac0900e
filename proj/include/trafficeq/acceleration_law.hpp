#pragma once

#include <cmath>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "trafficeq/errors.hpp"
#include "trafficeq/fundamental_diagram.hpp"

namespace trafficeq {

/// (d Psi/dv, d Psi/ds, d Psi/d dv) at one state.
template <typename Scalar>
struct Partials {
  Scalar v;
  Scalar s;
  Scalar dv;
};

enum class LawOrder { Second, Third };

/**
Acceleration law Psi(v, s, dv) of a second-order car-following model

    X_tt(t, N) = Psi(X_t(t, N), X(t, N-1) - X(t, N), X_t(t, N-1) - X_t(t, N))

and, through the same function, of its continuum counterpart

    v_t + v v_x = Psi(v, 1/k, v_x / k),   k_t + (k v)_x = 0.

The speed difference is always leader minus follower: dv > 0 means the gap
opens. A third-order law wraps an inner second-order law and relaxes the
acceleration towards it with delay T': a_t = (Psi - a) / T'.
*/
template <typename Scalar = double>
class AccelerationLaw {
 public:
  using Eval = std::function<Scalar(Scalar v, Scalar s, Scalar dv)>;
  using PartialsEval = std::function<Partials<Scalar>(Scalar v, Scalar s, Scalar dv)>;

  struct Param {
    std::string name;
    Scalar value;
  };

  /// Optional metadata used by solvers.
  struct Traits {
    Scalar min_spacing = Scalar(0.1);
    /// Free-flow speed if the law has one; brackets equilibrium searches.
    std::optional<Scalar> free_speed;
    /// Shortest relaxation-like time constant; bounds explicit time steps.
    std::optional<Scalar> time_constant;
    /// Continuum (Eulerian) form of the law, for catalog listings.
    std::string continuum_form;
  };

  AccelerationLaw(std::string name, std::vector<Param> params, Eval eval,
                  PartialsEval partials, Traits traits)
      : name_(std::move(name)),
        params_(std::move(params)),
        eval_(std::move(eval)),
        partials_(std::move(partials)),
        traits_(std::move(traits)) {}

  /// Third-order wrapper; see make_third_order.
  AccelerationLaw(const AccelerationLaw& inner, Scalar delay)
      : name_("third_order(" + inner.name() + ")"),
        params_(inner.params()),
        eval_(inner.eval_),
        partials_(inner.partials_),
        traits_(inner.traits_),
        order_(LawOrder::Third),
        delay_(delay),
        inner_(std::make_shared<const AccelerationLaw>(inner)) {
    params_.push_back({"T_delay", delay});
    traits_.time_constant =
        traits_.time_constant ? std::min(*traits_.time_constant, delay) : delay;
    traits_.continuum_form = "a_t + v a_x = (" + inner.traits().continuum_form + " - a) / T'";
  }

  Scalar operator()(Scalar v, Scalar s, Scalar dv) const { return eval_(v, s, dv); }

  /// Jerk of a third-order law given the current acceleration.
  Scalar jerk(Scalar v, Scalar s, Scalar dv, Scalar accel) const {
    return (eval_(v, s, dv) - accel) / delay_;
  }

  const std::string& name() const noexcept { return name_; }
  const std::vector<Param>& params() const noexcept { return params_; }
  const Traits& traits() const noexcept { return traits_; }
  LawOrder order() const noexcept { return order_; }
  Scalar delay() const noexcept { return delay_; }
  const AccelerationLaw* inner() const noexcept { return inner_.get(); }

  std::optional<Scalar> param(const std::string& key) const {
    for (const auto& p : params_)
      if (p.name == key) return p.value;
    return std::nullopt;
  }

  bool has_analytic_partials() const noexcept { return static_cast<bool>(partials_); }

  Partials<Scalar> analytic_partials(Scalar v, Scalar s, Scalar dv) const {
    if (!partials_) throw EvaluationError(name_ + " has no analytic partials");
    return partials_(v, s, dv);
  }

 private:
  std::string name_;
  std::vector<Param> params_;
  Eval eval_;
  PartialsEval partials_;
  Traits traits_;
  LawOrder order_ = LawOrder::Second;
  Scalar delay_ = Scalar(0);
  std::shared_ptr<const AccelerationLaw> inner_;
};

using AccelerationLawd = AccelerationLaw<double>;

template <typename Scalar>
struct ModelCatalogEntry {
  AccelerationLaw<Scalar> law;
  std::string continuum_family_note;
};

namespace detail {

inline void require(bool ok, const std::string& what) {
  if (!ok) throw ParameterError(what);
}

template <typename Scalar>
void require_spacing(Scalar s, Scalar floor, const char* law) {
  if (!(s > floor))
    throw EvaluationError(std::string(law) + ": spacing " + std::to_string(double(s)) +
                          " outside admissible range");
}

/// theta(s) with jam-spacing violations reported as evaluation errors.
template <typename Scalar>
Scalar theta_at(const FundamentalDiagram<Scalar>& fd, Scalar s, const char* law) {
  require_spacing(s, fd.jam_spacing() * (Scalar(1) - Scalar(1e-12)), law);
  return theta(fd, s);
}

template <typename Scalar>
typename AccelerationLaw<Scalar>::Traits fd_traits(const FundamentalDiagram<Scalar>& fd,
                                                   Scalar time_constant, std::string form) {
  typename AccelerationLaw<Scalar>::Traits traits;
  traits.min_spacing = Scalar(1.01) * fd.jam_spacing();
  traits.free_speed = fd.free_flow_speed();
  traits.time_constant = time_constant;
  traits.continuum_form = std::move(form);
  return traits;
}

}  // namespace detail

/// Linear General Motors law: Psi = dv / T.
template <typename Scalar>
AccelerationLaw<Scalar> make_linear_gm(Scalar T) {
  detail::require(T > Scalar(0), "linear_gm: T must be positive");
  typename AccelerationLaw<Scalar>::Traits traits;
  traits.time_constant = T;
  traits.continuum_form = "v_t + (v - 1/(T k)) v_x = 0";
  return AccelerationLaw<Scalar>(
      "linear_gm", {{"T", T}}, [T](Scalar, Scalar, Scalar dv) { return dv / T; },
      [T](Scalar, Scalar, Scalar) { return Partials<Scalar>{0, 0, Scalar(1) / T}; }, traits);
}

/// Nonlinear General Motors law: Psi = a v^m dv / s^l.
template <typename Scalar>
AccelerationLaw<Scalar> make_nonlinear_gm(Scalar a, int m, int l) {
  detail::require(a > Scalar(0), "nonlinear_gm: a must be positive");
  detail::require(m >= 0 && l >= 0, "nonlinear_gm: m and l must be nonnegative integers");
  auto ipow = [](Scalar x, int n) {
    Scalar r = 1;
    for (int i = 0; i < n; ++i) r *= x;
    return r;
  };
  typename AccelerationLaw<Scalar>::Traits traits;
  traits.continuum_form = "v_t + (v - a v^m k^(l-1)) v_x = 0";
  if (m == 0 && l == 0) traits.time_constant = Scalar(1) / a;
  return AccelerationLaw<Scalar>(
      "nonlinear_gm", {{"a", a}, {"m", Scalar(m)}, {"l", Scalar(l)}},
      [=](Scalar v, Scalar s, Scalar dv) {
        detail::require_spacing(s, Scalar(0), "nonlinear_gm");
        return a * ipow(v, m) * dv / ipow(s, l);
      },
      [=](Scalar v, Scalar s, Scalar dv) {
        detail::require_spacing(s, Scalar(0), "nonlinear_gm");
        const Scalar sl = ipow(s, l);
        return Partials<Scalar>{m == 0 ? Scalar(0) : a * m * ipow(v, m - 1) * dv / sl,
                                -Scalar(l) * a * ipow(v, m) * dv / (sl * s), a * ipow(v, m) / sl};
      },
      traits);
}

/// Optimal velocity law: Psi = (theta(s) - v) / T.
template <typename Scalar>
AccelerationLaw<Scalar> make_ovm(Scalar T, const FundamentalDiagram<Scalar>& fd) {
  detail::require(T > Scalar(0), "ovm: T must be positive");
  return AccelerationLaw<Scalar>(
      "ovm", {{"T", T}},
      [T, fd](Scalar v, Scalar s, Scalar) { return (detail::theta_at(fd, s, "ovm") - v) / T; },
      [T, fd](Scalar, Scalar s, Scalar) {
        return Partials<Scalar>{-Scalar(1) / T, theta_prime(fd, s) / T, 0};
      },
      detail::fd_traits(fd, T, "v_t + v v_x = (theta(1/k) - v) / T"));
}

/// Generalized force law: the optimal-velocity term plus an exponential
/// braking interaction active while the gap closes (dv < 0).
template <typename Scalar>
AccelerationLaw<Scalar> make_gfm(Scalar T, Scalar T_brake, Scalar d, Scalar tau, Scalar R,
                                 const FundamentalDiagram<Scalar>& fd) {
  detail::require(T_brake > Scalar(0) && T_brake < T, "gfm: need 0 < T_brake < T");
  detail::require(d > Scalar(0) && tau > Scalar(0) && R > Scalar(0), "gfm: d, tau, R must be positive");
  auto eval = [=](Scalar v, Scalar s, Scalar dv) {
    const Scalar closing = dv < Scalar(0) ? -dv : Scalar(0);
    return (detail::theta_at(fd, s, "gfm") - v) / T - closing / T_brake * std::exp(-(s - (d + tau * v)) / R);
  };
  // At dv = 0 the braking term has a kink; the opening-side (zero) branch is used.
  auto partials = [=](Scalar v, Scalar s, Scalar dv) {
    const Scalar closing = dv < Scalar(0) ? -dv : Scalar(0);
    const Scalar e = std::exp(-(s - (d + tau * v)) / R);
    const Scalar brake = closing / T_brake * e;
    return Partials<Scalar>{-Scalar(1) / T - brake * tau / R, theta_prime(fd, s) / T + brake / R,
                            dv < Scalar(0) ? e / T_brake : Scalar(0)};
  };
  return AccelerationLaw<Scalar>(
      "gfm", {{"T", T}, {"T_brake", T_brake}, {"d", d}, {"tau", tau}, {"R", R}}, eval, partials,
      detail::fd_traits(fd, T_brake,
                        "v_t + (v + Theta(v_x/k) exp(-(1/k-(d+tau v))/R) / (T' k)) v_x = "
                        "(theta(1/k) - v) / T"));
}

struct IdmParams {
  double a;
  double b;
  double delta;
  double v_f;
  double tau;
  double d;
};

enum class IdmSign {
  /// Desired gap d + tau v - v dv / (2 sqrt(ab)): the usual closing-rate term.
  Standard,
  /// Desired gap d + tau v + v dv / (2 sqrt(ab)) with dv = leader - follower, as printed.
  Printed,
};

/// Intelligent driver law
///   Psi = a [1 - (v/v_f)^delta - ((d + tau v +- v dv / (2 sqrt(ab))) / s)^2].
template <typename Scalar>
AccelerationLaw<Scalar> make_idm(Scalar a, Scalar b, Scalar delta, Scalar v_f, Scalar tau, Scalar d,
                                 IdmSign sign = IdmSign::Standard) {
  detail::require(a > 0 && b > 0 && v_f > 0 && tau > 0 && d > 0,
                  "idm: a, b, v_f, tau, d must be positive");
  detail::require(delta >= Scalar(1), "idm: delta must be >= 1");
  const Scalar sigma = sign == IdmSign::Standard ? Scalar(-1) : Scalar(1);
  const Scalar inv_root = Scalar(1) / (Scalar(2) * std::sqrt(a * b));
  auto gap = [=](Scalar v, Scalar dv) { return d + tau * v + sigma * v * dv * inv_root; };
  auto eval = [=](Scalar v, Scalar s, Scalar dv) {
    detail::require_spacing(s, Scalar(0), "idm");
    const Scalar g = gap(v, dv) / s;
    return a * (Scalar(1) - std::pow(v / v_f, delta) - g * g);
  };
  auto partials = [=](Scalar v, Scalar s, Scalar dv) {
    detail::require_spacing(s, Scalar(0), "idm");
    const Scalar g = gap(v, dv);
    const Scalar s2 = s * s;
    const Scalar free_term =
        v == Scalar(0) && delta > Scalar(1) ? Scalar(0) : delta * std::pow(v / v_f, delta - 1) / v_f;
    return Partials<Scalar>{a * (-free_term - Scalar(2) * g / s2 * (tau + sigma * dv * inv_root)),
                            a * Scalar(2) * g * g / (s2 * s),
                            -a * Scalar(2) * g / s2 * sigma * v * inv_root};
  };
  typename AccelerationLaw<Scalar>::Traits traits;
  traits.min_spacing = Scalar(0.1);
  traits.free_speed = v_f;
  traits.time_constant = tau;
  traits.continuum_form = sign == IdmSign::Standard
      ? "v_t + v v_x = a [1 - (v/v_f)^delta - (d k + tau k v - v v_x / (2 sqrt(ab)))^2]"
      : "v_t + v v_x = a [1 - (v/v_f)^delta - (d k + tau k v + v v_x / (2 sqrt(ab)))^2]";
  return AccelerationLaw<Scalar>(
      sign == IdmSign::Standard ? "idm_standard" : "idm_paper",
      {{"a", a}, {"b", b}, {"delta", delta}, {"v_f", v_f}, {"tau", tau}, {"d", d}}, eval, partials,
      traits);
}

template <typename Scalar>
AccelerationLaw<Scalar> make_idm(const IdmParams& p, IdmSign sign = IdmSign::Standard) {
  return make_idm<Scalar>(Scalar(p.a), Scalar(p.b), Scalar(p.delta), Scalar(p.v_f), Scalar(p.tau),
                          Scalar(p.d), sign);
}

/// Full velocity difference law: Psi = (theta(s) - v) / T + lambda dv.
template <typename Scalar>
AccelerationLaw<Scalar> make_fvdm(Scalar T, Scalar lambda, const FundamentalDiagram<Scalar>& fd) {
  detail::require(T > Scalar(0), "fvdm: T must be positive");
  detail::require(lambda >= Scalar(0), "fvdm: lambda must be nonnegative");
  return AccelerationLaw<Scalar>(
      "fvdm", {{"T", T}, {"lambda", lambda}},
      [T, lambda, fd](Scalar v, Scalar s, Scalar dv) { return (detail::theta_at(fd, s, "fvdm") - v) / T + lambda * dv; },
      [T, lambda, fd](Scalar, Scalar s, Scalar) {
        return Partials<Scalar>{-Scalar(1) / T, theta_prime(fd, s) / T, lambda};
      },
      detail::fd_traits(fd, T, "v_t + (v - lambda/k) v_x = (theta(1/k) - v) / T"));
}

/**
Car-following form of the general Aw-Rascle continuum model

    Psi = (theta(s) - v) / T(1/s) + p'(1/s) dv / s^2.

Partials fall back to finite differences.
*/
template <typename Scalar>
AccelerationLaw<Scalar> make_aw_rascle_cf(std::function<Scalar(Scalar)> relaxation_time,
                                          std::function<Scalar(Scalar)> pressure_slope,
                                          const FundamentalDiagram<Scalar>& fd) {
  detail::require(static_cast<bool>(relaxation_time) && static_cast<bool>(pressure_slope),
                  "aw_rascle: T(k) and p'(k) must be provided");
  const Scalar s_j = fd.jam_spacing();
  auto eval = [=](Scalar v, Scalar s, Scalar dv) {
    detail::require_spacing(s, s_j * (Scalar(1) - Scalar(1e-12)), "aw_rascle");
    const Scalar k = std::min(Scalar(1) / s, fd.jam_density());
    const Scalar t = relaxation_time(k);
    if (!(t > Scalar(0))) throw EvaluationError("aw_rascle: T(k) must be positive");
    return (theta(fd, s) - v) / t + pressure_slope(k) * dv / (s * s);
  };
  auto traits = detail::fd_traits(fd, relaxation_time(fd.critical_density()),
                                  "v_t + (v - k p'(k)) v_x = (eta(k) - v) / T(k)");
  traits.time_constant.reset();
  return AccelerationLaw<Scalar>("aw_rascle", {}, eval, {}, traits);
}

/// Aw-Rascle-Zhang car-following form: Psi = -eta'(1/s) dv / s^2 (no relaxation).
template <typename Scalar>
AccelerationLaw<Scalar> make_arz_cf(const FundamentalDiagram<Scalar>& fd) {
  const Scalar s_j = fd.jam_spacing();
  auto eval = [=](Scalar, Scalar s, Scalar dv) {
    detail::require_spacing(s, s_j * (Scalar(1) - Scalar(1e-12)), "arz");
    const Scalar k = std::min(Scalar(1) / s, fd.jam_density());
    return -eta_prime(fd, k) * dv / (s * s);
  };
  auto traits = detail::fd_traits(fd, Scalar(0), "v_t + (v + k eta'(k)) v_x = 0");
  traits.time_constant.reset();
  return AccelerationLaw<Scalar>("arz", {}, eval, {}, traits);
}

/// Car-following form of the JWZ model: Psi = (theta(s) - v) / T + c0 dv / s.
template <typename Scalar>
AccelerationLaw<Scalar> make_jwz_cf(Scalar T, Scalar c0, const FundamentalDiagram<Scalar>& fd) {
  detail::require(T > Scalar(0), "jwz: T must be positive");
  detail::require(c0 >= Scalar(0), "jwz: c0 must be nonnegative");
  return AccelerationLaw<Scalar>(
      "jwz", {{"T", T}, {"c0", c0}},
      [=](Scalar v, Scalar s, Scalar dv) { return (detail::theta_at(fd, s, "jwz") - v) / T + c0 * dv / s; },
      [=](Scalar, Scalar s, Scalar dv) {
        return Partials<Scalar>{-Scalar(1) / T, theta_prime(fd, s) / T - c0 * dv / (s * s), c0 / s};
      },
      detail::fd_traits(fd, T, "v_t + (v - c0) v_x = (eta(k) - v) / T"));
}

/// Taylor-expanded delay: X_ttt = (Psi - X_tt) / T_delay.
template <typename Scalar>
AccelerationLaw<Scalar> make_third_order(const AccelerationLaw<Scalar>& inner, Scalar T_delay) {
  detail::require(T_delay > Scalar(0), "third_order: T_delay must be positive");
  detail::require(inner.order() == LawOrder::Second, "third_order: inner law must be second order");
  return AccelerationLaw<Scalar>(inner, T_delay);
}

/// Step for central differences: relative with an absolute floor.
template <typename Scalar>
Scalar difference_step(Scalar x) {
  return std::max(Scalar(1e-6) * std::abs(x), Scalar(1e-8));
}

/// Partials by central differences regardless of analytic availability.
template <typename Scalar>
Partials<Scalar> numeric_partials(const AccelerationLaw<Scalar>& law, Scalar v, Scalar s, Scalar dv) {
  const Scalar hv = difference_step(v);
  const Scalar hs = difference_step(s);
  const Scalar hd = difference_step(dv);
  return {(law(v + hv, s, dv) - law(v - hv, s, dv)) / (2 * hv),
          (law(v, s + hs, dv) - law(v, s - hs, dv)) / (2 * hs),
          (law(v, s, dv + hd) - law(v, s, dv - hd)) / (2 * hd)};
}

/// Analytic partials when the law provides them, central differences otherwise.
template <typename Scalar>
Partials<Scalar> partials_at(const AccelerationLaw<Scalar>& law, Scalar v, Scalar s, Scalar dv) {
  if (law.has_analytic_partials()) return law.analytic_partials(v, s, dv);
  return numeric_partials(law, v, s, dv);
}

/// The built-in laws over one diagram, each tagged with its continuum form.
template <typename Scalar>
std::vector<ModelCatalogEntry<Scalar>> model_catalog(const FundamentalDiagram<Scalar>& fd) {
  std::vector<ModelCatalogEntry<Scalar>> out;
  auto add = [&out](AccelerationLaw<Scalar> law, std::string family) {
    std::string note = law.traits().continuum_form + " [" + family + "]";
    out.push_back({std::move(law), std::move(note)});
  };
  const Scalar tau = fd.time_gap();
  add(make_linear_gm<Scalar>(Scalar(2)), "Aw-Rascle-Zhang special case");
  add(make_nonlinear_gm<Scalar>(Scalar(1), 0, 1), "new second-order continuum model");
  add(make_ovm<Scalar>(Scalar(0.4) * tau, fd), "Phillips");
  add(make_gfm<Scalar>(Scalar(1), Scalar(0.5), Scalar(2), Scalar(1), Scalar(10), fd),
      "new second-order continuum model");
  add(make_idm<Scalar>(Scalar(1), Scalar(1.5), Scalar(4), fd.free_flow_speed(), Scalar(1), Scalar(2)),
      "new second-order continuum model");
  add(make_idm<Scalar>(Scalar(1), Scalar(1.5), Scalar(4), fd.free_flow_speed(), Scalar(1), Scalar(2),
                       IdmSign::Printed),
      "new second-order continuum model");
  add(make_fvdm<Scalar>(Scalar(1), Scalar(0.6), fd), "Aw-Rascle-Greenberg special case");
  add(make_arz_cf<Scalar>(fd), "Aw-Rascle family");
  add(make_jwz_cf<Scalar>(Scalar(1), Scalar(5), fd), "Aw-Rascle family");
  add(make_third_order<Scalar>(make_ovm<Scalar>(Scalar(0.4) * tau, fd), Scalar(0.2)),
      "third-order continuum model");
  return out;
}

}  // namespace trafficeq
