#include "trafficeq/config.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include "trafficeq/errors.hpp"
#include "trafficeq/steady_state.hpp"

namespace trafficeq::cli {

namespace {

std::string join(const std::string& path, const std::string& key) { return path.empty() ? key : path + "." + key; }

std::string type_name(const Json& j) { return j.type_name(); }

}  // namespace

Section::Section(const Json& j, std::string path, std::initializer_list<const char*> allowed)
    : j_(&j), path_(std::move(path)) {
  if (!j.is_object()) throw ConfigError("expected an object, got " + type_name(j), path_);
  for (const auto& item : j.items()) {
    const bool known = std::any_of(allowed.begin(), allowed.end(), [&](const char* a) { return item.key() == a; });
    if (!known) throw ConfigError("unknown key", join(path_, item.key()));
  }
}

bool Section::has(const char* key) const { return j_->contains(key); }

std::string Section::path(const char* key) const { return join(path_, key); }

const Json& Section::raw(const char* key) const {
  if (!has(key)) throw ConfigError("missing required key", path(key));
  return j_->at(key);
}

double Section::real(const char* key, std::optional<double> fallback) const {
  if (!has(key)) {
    if (fallback) return *fallback;
    throw ConfigError("missing required key", path(key));
  }
  const Json& v = j_->at(key);
  if (!v.is_number()) throw ConfigError("expected a number, got " + type_name(v), path(key));
  const double x = v.get<double>();
  if (!std::isfinite(x)) throw ConfigError("must be finite", path(key));
  return x;
}

double Section::positive(const char* key, std::optional<double> fallback) const {
  const double x = real(key, fallback);
  if (!(x > 0)) throw ConfigError("must be positive", path(key));
  return x;
}

double Section::nonnegative(const char* key, std::optional<double> fallback) const {
  const double x = real(key, fallback);
  if (!(x >= 0)) throw ConfigError("must be nonnegative", path(key));
  return x;
}

long Section::integer(const char* key, std::optional<long> fallback, long min) const {
  if (!has(key)) {
    if (fallback) return *fallback;
    throw ConfigError("missing required key", path(key));
  }
  const Json& v = j_->at(key);
  if (!v.is_number_integer()) throw ConfigError("expected an integer, got " + type_name(v), path(key));
  const long x = v.get<long>();
  if (x < min) throw ConfigError("must be at least " + std::to_string(min), path(key));
  return x;
}

std::string Section::choice(const char* key, std::initializer_list<const char*> options,
                            std::optional<std::string> fallback) const {
  if (!has(key)) {
    if (fallback) return *fallback;
    throw ConfigError("missing required key", path(key));
  }
  const Json& v = j_->at(key);
  if (!v.is_string()) throw ConfigError("expected a string, got " + type_name(v), path(key));
  const auto s = v.get<std::string>();
  std::string all;
  for (const char* o : options) {
    if (s == o) return s;
    all += (all.empty() ? "" : ", ") + std::string(o);
  }
  throw ConfigError("unknown value \"" + s + "\" (expected one of: " + all + ")", path(key));
}

std::vector<double> Section::reals(const char* key, std::optional<std::vector<double>> fallback) const {
  if (!has(key)) {
    if (fallback) return *fallback;
    throw ConfigError("missing required key", path(key));
  }
  const Json& v = j_->at(key);
  if (!v.is_array()) throw ConfigError("expected an array, got " + type_name(v), path(key));
  std::vector<double> out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (!v[i].is_number() || !std::isfinite(v[i].get<double>()))
      throw ConfigError("expected a finite number", path(key) + "[" + std::to_string(i) + "]");
    out.push_back(v[i].get<double>());
  }
  return out;
}

FundamentalDiagram<double> parse_fd(const Json& j, const std::string& path) {
  if (!j.is_object()) throw ConfigError("expected an object", path);
  const Section probe(j, path, {"kind", "v_f", "w", "k_j", "table"});
  const auto kind = probe.choice("kind", {"triangular", "greenshields", "tabulated"});
  try {
    if (kind == "triangular") {
      const Section s(j, path, {"kind", "v_f", "w", "k_j"});
      return FundamentalDiagram<double>::triangular(s.positive("v_f"), s.positive("w"), s.positive("k_j"));
    }
    if (kind == "greenshields") {
      const Section s(j, path, {"kind", "v_f", "k_j"});
      return FundamentalDiagram<double>::greenshields(s.positive("v_f"), s.positive("k_j"));
    }
    const Section s(j, path, {"kind", "table"});
    const Json& t = s.raw("table");
    if (!t.is_array()) throw ConfigError("expected an array of [k, q] pairs", s.path("table"));
    std::vector<std::pair<double, double>> table;
    for (std::size_t i = 0; i < t.size(); ++i) {
      const auto p = s.path("table") + "[" + std::to_string(i) + "]";
      if (!t[i].is_array() || t[i].size() != 2 || !t[i][0].is_number() || !t[i][1].is_number())
        throw ConfigError("expected a [k, q] pair of numbers", p);
      table.emplace_back(t[i][0].get<double>(), t[i][1].get<double>());
    }
    return FundamentalDiagram<double>::tabulated(std::move(table));
  } catch (const ParameterError& e) {
    throw ConfigError(e.what(), path);
  } catch (const DomainError& e) {
    throw ConfigError(e.what(), path);
  }
}

AccelerationLaw<double> build_law(const Json& model, const std::string& path,
                                  const std::optional<FundamentalDiagram<double>>& fd,
                                  const std::map<std::string, double>& overrides) {
  if (!model.is_object()) throw ConfigError("expected an object", path);
  Json m = model;
  for (const auto& [k, v] : overrides) {
    if (!m.contains(k)) throw ConfigError("sweep parameter is not set on the model", join(path, k));
    m[k] = v;
  }
  const Section probe(m, path,
                      {"name", "T", "a", "m", "l", "T_brake", "d", "tau", "R", "b", "delta", "v_f", "lambda",
                       "c0", "gamma", "T_delay"});
  const auto name = probe.choice("name", {"linear_gm", "nonlinear_gm", "ovm", "gfm", "idm", "idm_standard", "idm_paper", "fvdm",
                                          "arz", "jwz", "aw_rascle"});
  auto need_fd = [&]() -> const FundamentalDiagram<double>& {
    if (!fd) throw ConfigError("model " + name + " needs an fd section", "fd");
    return *fd;
  };
  try {
    AccelerationLaw<double> law = [&]() -> AccelerationLaw<double> {
      if (name == "linear_gm") {
        const Section s(m, path, {"name", "T", "T_delay"});
        return make_linear_gm(s.positive("T"));
      }
      if (name == "nonlinear_gm") {
        const Section s(m, path, {"name", "a", "m", "l", "T_delay"});
        return make_nonlinear_gm(s.positive("a"), int(s.integer("m")), int(s.integer("l")));
      }
      if (name == "ovm") {
        const Section s(m, path, {"name", "T", "T_delay"});
        return make_ovm(s.positive("T"), need_fd());
      }
      if (name == "gfm") {
        const Section s(m, path, {"name", "T", "T_brake", "d", "tau", "R", "T_delay"});
        return make_gfm(s.positive("T"), s.positive("T_brake"), s.positive("d"), s.positive("tau"),
                        s.positive("R"), need_fd());
      }
      if (name == "idm" || name == "idm_standard" || name == "idm_paper") {
        const Section s(m, path, {"name", "a", "b", "delta", "v_f", "tau", "d", "T_delay"});
        const double v_f = s.has("v_f") ? s.positive("v_f") : need_fd().free_flow_speed();
        return make_idm(s.positive("a"), s.positive("b"), s.positive("delta"), v_f, s.positive("tau"),
                        s.positive("d"), name == "idm_paper" ? IdmSign::Printed : IdmSign::Standard);
      }
      if (name == "fvdm") {
        const Section s(m, path, {"name", "T", "lambda", "T_delay"});
        return make_fvdm(s.positive("T"), s.nonnegative("lambda"), need_fd());
      }
      if (name == "arz") {
        const Section s(m, path, {"name", "T_delay"});
        return make_arz_cf(need_fd());
      }
      if (name == "jwz") {
        const Section s(m, path, {"name", "T", "c0", "T_delay"});
        return make_jwz_cf(s.positive("T"), s.nonnegative("c0"), need_fd());
      }
      // aw_rascle: constant relaxation time, pressure p(k) = c0 k^gamma.
      const Section s(m, path, {"name", "T", "c0", "gamma", "T_delay"});
      const double T = s.positive("T"), c0 = s.nonnegative("c0"), gamma = s.positive("gamma");
      return make_aw_rascle_cf<double>([T](double) { return T; },
                                       [c0, gamma](double k) { return c0 * gamma * std::pow(k, gamma - 1); },
                                       need_fd());
    }();
    const Section s(m, path,
                    {"name", "T", "a", "m", "l", "T_brake", "d", "tau", "R", "b", "delta", "v_f", "lambda", "c0",
                     "gamma", "T_delay"});
    if (s.has("T_delay")) law = make_third_order(law, s.positive("T_delay"));
    return law;
  } catch (const ParameterError& e) {
    throw ConfigError(e.what(), path);
  }
}

namespace {

AnalysisConfig parse_analysis(const Json& j, const std::optional<FundamentalDiagram<double>>& fd) {
  const Section s(j, "analysis", {"k_min", "k_max", "points", "sweep"});
  AnalysisConfig a;
  const std::optional<double> k_j = fd ? std::optional<double>(fd->jam_density()) : std::nullopt;
  const long points = s.integer("points", 200, 2);
  const double k_max = s.positive("k_max", k_j);
  const double k_min = s.positive("k_min", k_j ? std::optional<double>(*k_j / double(points)) : std::nullopt);
  if (!(k_min < k_max)) throw ConfigError("must be below k_max", s.path("k_min"));
  for (long i = 0; i < points; ++i) a.k_grid.push_back(k_min + (k_max - k_min) * double(i) / double(points - 1));
  if (s.has("sweep")) {
    const Section w(s.raw("sweep"), s.path("sweep"), {"param", "values"});
    const Json& p = w.raw("param");
    if (!p.is_string()) throw ConfigError("expected a string", w.path("param"));
    a.sweep_param = p.get<std::string>();
    a.sweep_values = w.reals("values");
    if (a.sweep_values.empty()) throw ConfigError("needs at least one value", w.path("values"));
  }
  return a;
}

SimConfig parse_sim(const Json& j) {
  const Section s(j, "sim",
                  {"scheme", "dt", "steps", "record_every", "vehicles", "spacing", "perturbation", "mode", "speed",
                   "boundary"});
  SimConfig c;
  const auto scheme = s.choice("scheme", {"rk4", "pipes", "newell"}, std::string("rk4"));
  c.scheme = scheme == "rk4" ? CfScheme::Rk4 : scheme == "pipes" ? CfScheme::Pipes : CfScheme::Newell;
  if (c.scheme == CfScheme::Newell) {
    if (s.has("dt")) throw ConfigError("not used by the newell scheme (its step is tau)", s.path("dt"));
  } else {
    c.dt = s.positive("dt");
  }
  c.steps = s.integer("steps");
  c.record_every = s.integer("record_every", 1, 1);
  if (c.scheme != CfScheme::Rk4 && c.record_every != 1)
    throw ConfigError("only the rk4 scheme supports a record stride", s.path("record_every"));
  c.vehicles = s.integer("vehicles", {}, 2);
  c.spacing = s.positive("spacing");
  c.perturbation = s.nonnegative("perturbation", 0.0);
  if (!(c.perturbation < 0.5)) throw ConfigError("must be below 0.5", s.path("perturbation"));
  c.mode = int(s.integer("mode", 1, 0));
  if (s.has("speed")) c.speed = s.nonnegative("speed");
  const Json boundary = s.has("boundary") ? s.raw("boundary") : Json{{"kind", "leader"}};
  const Section b(boundary, s.path("boundary"), {"kind", "profile", "v0", "amplitude", "omega", "breakpoints"});
  const auto kind = b.choice("kind", {"ring", "leader"});
  if (kind == "ring") {
    const Section r(boundary, s.path("boundary"), {"kind"});
    if (c.scheme != CfScheme::Rk4) throw ConfigError("ring roads need the rk4 scheme", r.path("kind"));
    c.ring = true;
  } else {
    c.leader_json = boundary;
    (void)parse_leader(boundary, s.path("boundary"), 1e300);  // validate now; v0 is filled per run
  }
  return c;
}

PdeConfig parse_pde(const Json& j) {
  const Section s(j, "pde",
                  {"solver", "x0", "dx", "cells", "dt", "steps", "record_every", "boundary", "flux", "initial", "speed"});
  PdeConfig c;
  c.solver = s.choice("solver", {"lwr", "second_order"}, std::string("lwr")) == "lwr" ? PdeSolver::Lwr
                                                                                      : PdeSolver::SecondOrder;
  auto& sc = c.scenario;
  sc.grid = {s.real("x0", 0.0), s.positive("dx"), s.integer("cells", {}, 2)};
  sc.dt = s.positive("dt");
  sc.steps = s.integer("steps", 1000);
  sc.record_every = s.integer("record_every", 10, 1);
  sc.flux = s.choice("flux", {"upwind", "leader"}, std::string("upwind")) == "upwind" ? SpeedFlux::Upwind
                                                                                     : SpeedFlux::LeaderSpeed;
  if (s.has("speed")) c.speed = s.nonnegative("speed");
  const Json& bj = s.has("boundary") ? s.raw("boundary") : Json("periodic");
  if (bj.is_string()) {
    if (bj.get<std::string>() != "periodic")
      throw ConfigError("expected \"periodic\" or an inflow_outflow object", s.path("boundary"));
    sc.boundary = FieldBoundary::Periodic;
  } else {
    const Section b(bj, s.path("boundary"), {"kind", "k_in", "v_in"});
    b.choice("kind", {"inflow_outflow"});
    sc.boundary = FieldBoundary::InflowOutflow;
    sc.k_in = b.nonnegative("k_in");
    sc.v_in = b.has("v_in") ? b.nonnegative("v_in") : std::numeric_limits<double>::quiet_NaN();  // filled by the command
  }
  if (s.has("initial")) {
    const Json& ij = s.raw("initial");
    const Section probe(ij, s.path("initial"), {"kind", "k", "k_left", "k_right", "x_split", "amplitude", "mode"});
    c.initial_kind = probe.choice("kind", {"uniform", "riemann", "sine"});
    if (c.initial_kind == "uniform") {
      const Section i(ij, s.path("initial"), {"kind", "k"});
      c.k = i.nonnegative("k");
    } else if (c.initial_kind == "riemann") {
      const Section i(ij, s.path("initial"), {"kind", "k_left", "k_right", "x_split"});
      c.k_left = i.nonnegative("k_left");
      c.k_right = i.nonnegative("k_right");
      c.x_split = i.real("x_split");
    } else {
      const Section i(ij, s.path("initial"), {"kind", "k", "amplitude", "mode"});
      c.k = i.positive("k");
      c.amplitude = i.nonnegative("amplitude");
      if (!(c.amplitude < 1)) throw ConfigError("must be below 1", i.path("amplitude"));
      c.mode = int(i.integer("mode", 1, 1));
    }
  } else {
    c.initial_kind = "default";
  }
  return c;
}

TransformConfig parse_transform(const Json& j) {
  const Section s(j, "transform", {"direction", "x0", "dx", "cells", "speed_rule", "vehicles", "seed"});
  TransformConfig t;
  t.to_eulerian = s.choice("direction", {"to_eulerian", "to_trajectories"}) == "to_eulerian";
  if (t.to_eulerian) {
    const Section e(j, "transform", {"direction", "x0", "dx", "cells", "speed_rule"});
    t.grid = {e.real("x0", 0.0), e.positive("dx"), e.integer("cells", {}, 1)};
    const auto rule = e.choice("speed_rule", {"trailing", "leading", "average"}, std::string("trailing"));
    t.rule = rule == "trailing" ? SegmentSpeed::Trailing
             : rule == "leading" ? SegmentSpeed::Leading
                                 : SegmentSpeed::Average;
  } else {
    const Section e(j, "transform", {"direction", "vehicles", "seed"});
    t.vehicles = e.integer("vehicles", {}, 1);
    if (e.has("seed")) t.seed = e.real("seed");
  }
  return t;
}

}  // namespace

LeaderProfile<double> parse_leader(const Json& j, const std::string& path, double default_speed) {
  const Section b(j, path, {"kind", "profile", "v0", "amplitude", "omega", "breakpoints"});
  const auto profile = b.choice("profile", {"constant", "sinusoid", "piecewise"}, std::string("constant"));
  try {
    const double v0 = b.nonnegative("v0", default_speed);
    if (profile == "constant") return LeaderProfile<double>::constant(v0);
    if (profile == "sinusoid")
      return LeaderProfile<double>::sinusoid(v0, b.nonnegative("amplitude"), b.positive("omega"));
    const Json& bp = b.raw("breakpoints");
    if (!bp.is_array()) throw ConfigError("expected an array of [t, v] pairs", b.path("breakpoints"));
    std::vector<std::pair<double, double>> pts;
    for (std::size_t i = 0; i < bp.size(); ++i) {
      if (!bp[i].is_array() || bp[i].size() != 2 || !bp[i][0].is_number() || !bp[i][1].is_number())
        throw ConfigError("expected a [t, v] pair", b.path("breakpoints") + "[" + std::to_string(i) + "]");
      pts.emplace_back(bp[i][0].get<double>(), bp[i][1].get<double>());
    }
    return LeaderProfile<double>::piecewise(v0, std::move(pts));
  } catch (const ParameterError& e) {
    throw ConfigError(e.what(), b.path("profile"));
  }
}

ScenarioConfig parse_config(const std::string& text) {
  ScenarioConfig cfg;
  try {
    cfg.document = Json::parse(text);
  } catch (const Json::parse_error& e) {
    throw ConfigError(std::string("invalid JSON: ") + e.what(), "");
  }
  const Section top(cfg.document, "", {"fd", "model", "analysis", "sim", "pde", "transform", "suite", "output"});
  if (top.has("fd")) cfg.fd = parse_fd(top.raw("fd"), "fd");
  if (top.has("model")) {
    cfg.model = top.raw("model");
    (void)build_law(*cfg.model, "model", cfg.fd);  // validate eagerly
  }
  if (top.has("analysis")) cfg.analysis = parse_analysis(top.raw("analysis"), cfg.fd);
  if (top.has("sim")) cfg.sim = parse_sim(top.raw("sim"));
  if (top.has("pde")) cfg.pde = parse_pde(top.raw("pde"));
  if (top.has("transform")) cfg.transform = parse_transform(top.raw("transform"));
  if (top.has("suite")) {
    cfg.suite = top.raw("suite");
    (void)parse_suite(cfg);
  }
  if (top.has("output")) {
    const Section o(top.raw("output"), "output", {"dir", "stride"});
    if (o.has("dir")) {
      if (!o.raw("dir").is_string()) throw ConfigError("expected a string", o.path("dir"));
      cfg.output.dir = o.raw("dir").get<std::string>();
    }
    cfg.output.stride = o.integer("stride", 1, 1);
  }
  return cfg;
}

ScenarioConfig load_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read config file " + path, "--config");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

const AccelerationLaw<double>& require_law(const ScenarioConfig& cfg, std::optional<AccelerationLaw<double>>& slot) {
  if (!cfg.model) throw ConfigError("missing required section", "model");
  if (!slot) slot = build_law(*cfg.model, "model", cfg.fd);
  return *slot;
}

namespace {

struct Preset {
  const char* model;
  const char* scenario;
  Regime regime;
  double k0;
  Json params;
};

/// Default suite matrix: one string-stable and one string-unstable state per model.
std::vector<Preset> presets() {
  return {
      {"ovm", "stable", Regime::Stable, 0.1, {{"name", "ovm"}, {"T", 0.4}}},
      {"ovm", "unstable", Regime::Unstable, 0.1, {{"name", "ovm"}, {"T", 0.6}}},
      {"fvdm", "stable", Regime::Stable, 0.1, {{"name", "fvdm"}, {"T", 0.6}, {"lambda", 0.5}}},
      {"fvdm", "unstable", Regime::Unstable, 0.1, {{"name", "fvdm"}, {"T", 1.0}, {"lambda", 0.2}}},
      {"idm", "stable", Regime::Stable, 0.05,
       {{"name", "idm"}, {"a", 1.0}, {"b", 1.5}, {"delta", 4.0}, {"tau", 1.0}, {"d", 2.0}}},
      {"idm", "unstable", Regime::Unstable, 0.1,
       {{"name", "idm"}, {"a", 1.0}, {"b", 1.5}, {"delta", 4.0}, {"tau", 1.0}, {"d", 2.0}}},
  };
}

}  // namespace

SuiteSpec parse_suite(const ScenarioConfig& cfg) {
  const Json empty = Json::object();
  const Json& j = cfg.suite ? *cfg.suite : empty;
  const Section s(j, "suite",
                  {"models", "scenarios", "cases", "resolutions", "base_vehicles", "cells_per_vehicle", "horizon", "dt",
                   "record_dt", "amplitude", "threshold", "flux", "lwr"});
  SuiteSpec spec;
  const auto fd = cfg.fd ? *cfg.fd : FundamentalDiagram<double>::triangular(20, 5, 0.2);

  RingCase<double> base;
  base.base_vehicles = s.integer("base_vehicles", 20, 2);
  base.cells_per_vehicle = s.positive("cells_per_vehicle", 1.0);
  base.horizon = s.positive("horizon", 200.0);
  base.dt_cf = s.positive("dt", 0.05);
  base.record_dt = s.positive("record_dt", 1.0);
  base.amplitude = s.nonnegative("amplitude", 0.01);
  if (!(base.amplitude < 0.5)) throw ConfigError("must be below 0.5", s.path("amplitude"));
  base.threshold = s.positive("threshold", 0.05);
  base.flux = s.choice("flux", {"upwind", "leader"}, std::string("leader")) == "upwind" ? SpeedFlux::Upwind
                                                                                      : SpeedFlux::LeaderSpeed;
  for (double r : s.reals("resolutions", std::vector<double>{1, 2, 4})) {
    if (r < 1 || r != std::floor(r)) throw ConfigError("refinement factors must be positive integers", s.path("resolutions"));
    spec.resolutions.push_back(int(r));
  }

  auto string_list = [&](const char* key, std::vector<std::string> fallback) {
    if (!s.has(key)) return fallback;
    const Json& a = s.raw(key);
    if (!a.is_array()) throw ConfigError("expected an array of strings", s.path(key));
    std::vector<std::string> out;
    for (std::size_t i = 0; i < a.size(); ++i) {
      if (!a[i].is_string()) throw ConfigError("expected a string", s.path(key) + "[" + std::to_string(i) + "]");
      out.push_back(a[i].get<std::string>());
    }
    return out;
  };

  if (s.has("cases")) {
    if (s.has("models") || s.has("scenarios"))
      throw ConfigError("explicit cases replace the models x scenarios matrix", s.path("cases"));
    const Json& cases = s.raw("cases");
    if (!cases.is_array()) throw ConfigError("expected an array", s.path("cases"));
    for (std::size_t i = 0; i < cases.size(); ++i) {
      const std::string p = s.path("cases") + "[" + std::to_string(i) + "]";
      const Section c(cases[i], p, {"scenario", "regime", "k0", "model"});
      const Json& name = c.raw("scenario");
      if (!name.is_string()) throw ConfigError("expected a string", c.path("scenario"));
      RingCase<double> rc = base;
      rc.regime = c.choice("regime", {"stable", "unstable"}) == "stable" ? Regime::Stable : Regime::Unstable;
      rc.k0 = c.positive("k0");
      if (!(rc.k0 < fd.jam_density())) throw ConfigError("must be below k_j", c.path("k0"));
      rc.id = name.get<std::string>();
      auto law = build_law(c.raw("model"), c.path("model"), fd);
      spec.cases.push_back({rc.id, law.name(), std::move(law), rc});
    }
  } else {
    const auto models = string_list("models", {"ovm", "fvdm", "idm"});
    const auto scenarios = string_list("scenarios", {"stable", "unstable"});
    const auto table = presets();
    for (std::size_t mi = 0; mi < models.size(); ++mi) {
      for (std::size_t si = 0; si < scenarios.size(); ++si) {
        const auto it = std::find_if(table.begin(), table.end(), [&](const Preset& p) {
          return models[mi] == p.model && scenarios[si] == p.scenario;
        });
        if (it == table.end()) {
          const bool model_known = std::any_of(table.begin(), table.end(), [&](const Preset& p) { return models[mi] == p.model; });
          if (!model_known)
            throw ConfigError("no preset for model \"" + models[mi] + "\" (use suite.cases)",
                              s.path("models") + "[" + std::to_string(mi) + "]");
          throw ConfigError("unknown scenario \"" + scenarios[si] + "\" (expected stable or unstable)",
                            s.path("scenarios") + "[" + std::to_string(si) + "]");
        }
        RingCase<double> rc = base;
        rc.id = it->scenario;
        rc.regime = it->regime;
        rc.k0 = it->k0;
        spec.cases.push_back({it->scenario, it->model, build_law(it->params, "suite.preset", fd), rc});
      }
    }
  }

  if (s.has("lwr")) {
    const Json& cases = s.raw("lwr");
    if (!cases.is_array()) throw ConfigError("expected an array", s.path("lwr"));
    for (std::size_t i = 0; i < cases.size(); ++i) {
      const std::string p = s.path("lwr") + "[" + std::to_string(i) + "]";
      const Section c(cases[i], p, {"id", "kind", "k_left", "k_right", "length", "split", "horizon", "dx"});
      LwrCase<double> lc;
      const Json& id = c.raw("id");
      if (!id.is_string()) throw ConfigError("expected a string", c.path("id"));
      lc.id = id.get<std::string>();
      lc.kind = c.choice("kind", {"uniform", "riemann"}) == "uniform" ? LwrCase<double>::Kind::Uniform
                                                                     : LwrCase<double>::Kind::Riemann;
      lc.k_left = c.positive("k_left");
      lc.k_right = lc.kind == LwrCase<double>::Kind::Riemann ? c.positive("k_right") : lc.k_left;
      lc.length = c.positive("length");
      lc.split = c.positive("split", 0.75);
      lc.horizon = c.positive("horizon");
      lc.dx = c.positive("dx");
      spec.lwr.push_back(lc);
    }
  }
  return spec;
}

std::string demo_scenario() {
  const Json demo = {
      {"fd", {{"kind", "triangular"}, {"v_f", 20.0}, {"w", 5.0}, {"k_j", 0.2}}},
      {"model", {{"name", "ovm"}, {"T", 0.4}}},
      {"analysis", {{"points", 200}, {"sweep", {{"param", "T"}, {"values", {0.4, 0.45, 0.5, 0.55, 0.6}}}}}},
      {"sim",
       {{"scheme", "rk4"},
        {"dt", 0.04},
        {"steps", 5000},
        {"record_every", 25},
        {"vehicles", 20},
        {"spacing", 10.0},
        {"perturbation", 0.01},
        {"boundary", {{"kind", "ring"}}}}},
      {"pde",
       {{"solver", "lwr"},
        {"dx", 5.0},
        {"cells", 400},
        {"dt", 0.05},
        {"steps", 2000},
        {"record_every", 20},
        {"boundary", {{"kind", "inflow_outflow"}, {"k_in", 0.02}}},
        {"initial", {{"kind", "riemann"}, {"k_left", 0.02}, {"k_right", 0.2}, {"x_split", 1500.0}}}}},
      {"transform", {{"direction", "to_eulerian"}, {"dx", 10.0}, {"cells", 20}}},
      {"suite",
       {{"models", {"ovm", "fvdm", "idm"}},
        {"scenarios", {"stable", "unstable"}},
        {"resolutions", {1, 2, 4}},
        {"horizon", 200.0},
        {"lwr",
         {{{"id", "shock"},
           {"kind", "riemann"},
           {"k_left", 0.02},
           {"k_right", 0.2},
           {"length", 2000.0},
           {"split", 0.75},
           {"horizon", 45.0},
           {"dx", 10.0}}}}}},
      {"output", {{"dir", "out"}, {"stride", 1}}},
  };
  return demo.dump(2) + "\n";
}

}  // namespace trafficeq::cli
