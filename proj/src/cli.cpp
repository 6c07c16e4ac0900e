#include "trafficeq/cli.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <numbers>
#include <sstream>

#include <CLI11.hpp>

#include "trafficeq/csv.hpp"
#include "trafficeq/stability.hpp"
#include "trafficeq/steady_state.hpp"

namespace trafficeq::cli {

namespace {

constexpr double nan = std::numeric_limits<double>::quiet_NaN();

/// Compact number for summary lines.
std::string num(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", x);
  return buf;
}

std::string output_path(const RunOptions& opts, const std::string& name) {
  return (std::filesystem::path(opts.out_dir) / name).string();
}

class OutputFile {
 public:
  OutputFile(const RunOptions& opts, const std::string& name) : path_(output_path(opts, name)) {
    std::filesystem::create_directories(opts.out_dir.empty() ? "." : opts.out_dir);
    out_.open(path_, std::ios::binary | std::ios::trunc);
    if (!out_) throw std::runtime_error("cannot write " + path_);
  }
  ~OutputFile() = default;

  std::ostream& stream() { return out_; }
  const std::string& path() const { return path_; }
  void close() {
    out_.close();
    if (!out_) throw std::runtime_error("failed writing " + path_);
  }

 private:
  std::string path_;
  std::ofstream out_;
};

std::string file_safe(const std::string& s) {
  std::string out = s;
  for (char& c : out)
    if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_')) c = '_';
  return out;
}

const FundamentalDiagram<double>& require_fd(const ScenarioConfig& cfg) {
  if (!cfg.fd) throw ConfigError("missing required section", "fd");
  return *cfg.fd;
}

template <typename T>
const T& require_section(const std::optional<T>& s, const char* name) {
  if (!s) throw ConfigError("missing required section", name);
  return *s;
}

std::vector<double> density_grid(const ScenarioConfig& cfg) {
  if (cfg.analysis) return cfg.analysis->k_grid;
  if (!cfg.fd) throw ConfigError("missing required section (or an fd section to default the density grid)", "analysis");
  std::vector<double> grid;
  for (int i = 1; i <= 200; ++i) grid.push_back(cfg.fd->jam_density() * double(i) / 200.0);
  return grid;
}

void write_trajectories(std::ostream& os, const TrajectorySurface<double>& s, long stride) {
  const bool accel = s.has_accels();
  CsvWriter w = accel ? CsvWriter(os, {"t", "vehicle", "x", "v", "a"}) : CsvWriter(os, {"t", "vehicle", "x", "v"});
  for (Eigen::Index i = 0; i < s.steps(); i += stride) {
    for (Eigen::Index n = 0; n < s.vehicles(); ++n) {
      w << s.time(i) << long(n) << s.positions(i, n) << (s.has_speeds() ? s.speeds(i, n) : nan);
      if (accel) w << s.accels(i, n);
      w.end_row();
    }
  }
}

void write_field(std::ostream& os, const EulerianField<double>& f, long stride, bool coverage) {
  CsvWriter w = coverage ? CsvWriter(os, {"t", "x", "k", "v", "q", "coverage"}) : CsvWriter(os, {"t", "x", "k", "v", "q"});
  for (Eigen::Index i = 0; i < f.steps(); i += stride) {
    for (Eigen::Index c = 0; c < f.cells(); ++c) {
      const double k = f.density(i, c), v = f.speed(i, c);
      w << f.time(i) << f.cell_center(c) << k << v << (k == 0.0 ? 0.0 : k * v);
      if (coverage) w << f.coverage(i, c);
      w.end_row();
    }
  }
}

struct PlatoonResult {
  TrajectorySurface<double> surface;
  long clamp_events = 0;
  std::string scheme;
};

PlatoonResult run_platoon(const ScenarioConfig& cfg) {
  const SimConfig& sim = require_section(cfg.sim, "sim");
  const long N = sim.vehicles;
  std::vector<double> spacing(N);
  for (long n = 0; n < N; ++n)
    spacing[n] = sim.spacing * (1.0 + sim.perturbation * std::sin(2.0 * std::numbers::pi * sim.mode * double(n) / double(N)));

  std::optional<AccelerationLaw<double>> slot;
  const AccelerationLaw<double>* law = nullptr;
  if (sim.scheme == CfScheme::Rk4) law = &require_law(cfg, slot);
  const FundamentalDiagram<double>* fd = sim.scheme == CfScheme::Rk4 ? nullptr : &require_fd(cfg);

  auto steady_speed = [&](double s) {
    if (fd) return theta(*fd, s);
    const auto eq = solve_equilibrium_speed(*law, 1.0 / s);
    if (!eq.ok()) throw ConfigError("no steady speed at spacing " + num(s) + "; set sim.speed", "sim.spacing");
    return eq.speed;
  };
  const double base_speed = sim.speed ? *sim.speed : steady_speed(sim.spacing);

  double L = 0;
  for (double s : spacing) L += s;
  Vector<double> x(N), v(N);
  double pos = sim.ring ? L - 0.5 * spacing[0] : 0.0;
  for (long n = 0; n < N; ++n) {
    if (n > 0) pos -= spacing[n];
    x(n) = pos;
    v(n) = sim.speed ? *sim.speed : (n == 0 && !sim.ring ? base_speed : steady_speed(spacing[n]));
  }

  PlatoonResult out;
  if (sim.ring) {
    PlatoonState<double> st{0.0, x, v, {}};
    if (law->order() == LawOrder::Third) st.a = Vector<double>::Zero(N);
    auto run = simulate_continuous(*law, st, Boundary<double>{RingRoad<double>{L}}, sim.dt, sim.steps, sim.record_every);
    out.surface = std::move(run.surface);
    out.clamp_events = run.clamp_events;
    out.scheme = "rk4 ring";
    return out;
  }

  // Leader profile; v0 defaults to the platoon's initial speed.
  const auto leader = parse_leader(sim.leader_json, "sim.boundary", base_speed);
  v(0) = leader.speed(0.0);

  switch (sim.scheme) {
    case CfScheme::Rk4: {
      PlatoonState<double> st{0.0, x, v, {}};
      if (law->order() == LawOrder::Third) st.a = Vector<double>::Zero(N);
      auto run = simulate_continuous(*law, st, Boundary<double>{leader}, sim.dt, sim.steps, sim.record_every);
      out.surface = std::move(run.surface);
      out.clamp_events = run.clamp_events;
      out.scheme = "rk4";
      break;
    }
    case CfScheme::Pipes:
      out.surface = simulate_pipes_discrete(*fd, x, leader, sim.dt, sim.steps);
      out.scheme = "pipes";
      break;
    case CfScheme::Newell:
      out.surface = simulate_newell(*fd, x, leader, sim.steps);
      out.scheme = "newell";
      break;
  }
  return out;
}

struct PdeResult {
  EulerianField<double> field;
  std::string solver;
};

PdeResult run_pde(const ScenarioConfig& cfg) {
  const PdeConfig& pde = require_section(cfg.pde, "pde");
  EulerianScenario<double> sc = pde.scenario;
  const long M = sc.grid.cells;
  const double length = sc.grid.dx * double(M);
  sc.density.resize(M);
  for (long c = 0; c < M; ++c) {
    const double xc = sc.grid.x0 + (double(c) + 0.5) * sc.grid.dx;
    if (pde.initial_kind == "uniform") {
      sc.density(c) = pde.k;
    } else if (pde.initial_kind == "riemann") {
      sc.density(c) = xc < pde.x_split ? pde.k_left : pde.k_right;
    } else if (pde.initial_kind == "sine") {
      sc.density(c) = pde.k * (1.0 + pde.amplitude * std::sin(2.0 * std::numbers::pi * pde.mode * (xc - sc.grid.x0) / length));
    } else {
      if (!cfg.fd) throw ConfigError("no initial state given and no fd section to default it", "pde.initial");
      sc.density(c) = 0.5 * cfg.fd->critical_density();
    }
  }

  PdeResult out;
  if (pde.solver == PdeSolver::Lwr) {
    const auto& fd = require_fd(cfg);
    if (std::isnan(sc.v_in)) sc.v_in = sc.k_in > 0 && sc.k_in <= fd.jam_density() ? eta(fd, sc.k_in) : 0.0;
    out.field = solve_lwr_godunov(fd, sc);
    out.solver = "lwr";
    return out;
  }

  std::optional<AccelerationLaw<double>> slot;
  const auto& law = require_law(cfg, slot);
  auto steady = [&](double k, const std::string& path) {
    if (k <= 0) return law.traits().free_speed.value_or(0.0);
    const auto eq = solve_equilibrium_speed(law, k);
    if (!eq.ok()) throw ConfigError("no steady speed at density " + num(k) + "; set it explicitly", path);
    return eq.speed;
  };
  sc.speed.resize(M);
  for (long c = 0; c < M; ++c) sc.speed(c) = pde.speed ? *pde.speed : steady(sc.density(c), "pde.speed");
  if (sc.boundary == FieldBoundary::InflowOutflow && std::isnan(sc.v_in))
    sc.v_in = steady(sc.k_in, "pde.boundary.v_in");
  out.field = solve_second_order(law, sc);
  out.solver = "second_order";
  return out;
}

}  // namespace

std::string cmd_fd(const ScenarioConfig& cfg, const RunOptions& opts) {
  const auto& fd = require_fd(cfg);
  OutputFile f(opts, "fd.csv");
  CsvWriter w(f.stream(), {"k", "q", "v"});
  const double k_j = fd.jam_density();
  for (int i = 0; i <= 1000; ++i) {
    const double k = i == 1000 ? k_j : k_j * double(i) / 1000.0;
    w << k << phi(fd, k) << (k > 0 ? eta(fd, k) : fd.free_flow_speed());
    w.end_row();
  }
  f.close();
  return "fd: " + std::to_string(w.rows()) + " samples, capacity " + num(fd.capacity()) + " at k_c " +
         num(fd.critical_density()) + " -> " + f.path();
}

std::string cmd_steady(const ScenarioConfig& cfg, const RunOptions& opts) {
  std::optional<AccelerationLaw<double>> slot;
  const auto& law = require_law(cfg, slot);
  const auto grid = density_grid(cfg);
  const auto curve = fundamental_diagram_of(law, std::span<const double>(grid));
  OutputFile f(opts, "steady.csv");
  CsvWriter w(f.stream(), {"k", "v", "q", "status", "multiplicity"});
  long roots = 0;
  for (const auto& s : curve.samples) {
    const char* status = s.status == EquilibriumStatus::Root         ? "root"
                         : s.status == EquilibriumStatus::Degenerate ? "degenerate"
                                                                     : "no_root";
    roots += s.status == EquilibriumStatus::Root;
    w << s.k << s.v << s.q << status << long(s.multiplicity);
    w.end_row();
  }
  f.close();
  return "steady: " + law.name() + ", " + std::to_string(grid.size()) + " densities, " + std::to_string(roots) +
         " steady states" + (curve.degenerate ? ", degenerate" : "") + ", monotonicity violations " +
         std::to_string(curve.monotonicity_violations) + " -> " + f.path();
}

std::string cmd_stability(const ScenarioConfig& cfg, const RunOptions& opts) {
  if (!cfg.model) throw ConfigError("missing required section", "model");
  const auto grid = density_grid(cfg);
  std::optional<std::string> param;
  std::vector<double> values{nan};
  if (cfg.analysis && cfg.analysis->sweep_param) {
    param = cfg.analysis->sweep_param;
    values = cfg.analysis->sweep_values;
  }
  std::vector<std::string> cols;
  if (param) cols.push_back(*param);
  for (const char* c : {"k", "v0", "s0", "psi_v", "psi_s", "psi_dv", "status", "printed_stable", "exact_stable",
                        "exact_criterion", "worst_omega", "worst_ratio", "continuum_stable", "continuum_root_stable",
                        "notes"})
    cols.emplace_back(c);

  OutputFile f(opts, "stability.csv");
  CsvWriter w(f.stream(), cols);
  long states = 0, printed = 0, exact = 0, disagree = 0;
  std::string name;
  for (const double value : values) {
    std::map<std::string, double> overrides;
    if (param) overrides[*param] = value;
    const auto law = build_law(*cfg.model, "model", cfg.fd, overrides);
    name = law.name();
    for (const auto& r : stability_map(law, std::span<const double>(grid))) {
      if (param) w << value;
      w << r.k0 << r.v0 << r.s0;
      if (r.degenerate) {
        w << nan << nan << nan << (r.notes == "degenerate steady state" ? "degenerate" : "no_root") << "" << ""
          << nan << nan << nan << "" << "" << r.notes;
      } else {
        ++states;
        printed += r.paper_string_stable;
        exact += r.exact_string_stable;
        disagree += r.paper_string_stable != r.exact_string_stable;
        w << r.partials.v << r.partials.s << r.partials.dv << "ok" << r.paper_string_stable << r.exact_string_stable
          << r.exact_criterion << r.worst_omega << r.worst_ratio << r.continuum_linear_stable
          << r.continuum_root_stable << r.notes;
      }
      w.end_row();
    }
  }
  f.close();
  return "stability: " + name + ", " + std::to_string(values.size()) + " x " + std::to_string(grid.size()) +
         " states, string-stable " + std::to_string(printed) + "/" + std::to_string(states) + " printed, " +
         std::to_string(exact) + "/" + std::to_string(states) + " exact, " + std::to_string(disagree) +
         " disagreements -> " + f.path();
}

std::string cmd_simulate_cf(const ScenarioConfig& cfg, const RunOptions& opts) {
  const auto run = run_platoon(cfg);
  OutputFile f(opts, "trajectories.csv");
  write_trajectories(f.stream(), run.surface, cfg.output.stride);
  f.close();
  const auto& s = run.surface;
  double min_gap = std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i < s.steps(); ++i)
    for (Eigen::Index n = s.ring_length ? 0 : 1; n < s.vehicles(); ++n) min_gap = std::min(min_gap, s.spacing(i, n));
  return "simulate-cf: " + run.scheme + ", " + std::to_string(s.vehicles()) + " vehicles, " +
         std::to_string(s.steps()) + " records to t=" + num(s.time(s.steps() - 1)) + ", min spacing " +
         num(min_gap) + ", speed clamps " + std::to_string(run.clamp_events) + " -> " + f.path();
}

std::string cmd_simulate_pde(const ScenarioConfig& cfg, const RunOptions& opts) {
  const auto run = run_pde(cfg);
  OutputFile f(opts, "field.csv");
  write_field(f.stream(), run.field, cfg.output.stride, false);
  f.close();
  const auto& fl = run.field;
  const Eigen::Index last = fl.steps() - 1;
  return "simulate-pde: " + run.solver + ", " + std::to_string(fl.cells()) + " cells, " +
         std::to_string(fl.steps()) + " records to t=" + num(fl.time(last)) + ", vehicles " +
         num(total_vehicles(fl, 0)) + " -> " + num(total_vehicles(fl, last)) + " (in " + num(fl.inflow(last)) +
         ", out " + num(fl.outflow(last)) + ") -> " + f.path();
}

std::string cmd_transform(const ScenarioConfig& cfg, const RunOptions& opts) {
  const TransformConfig& t = require_section(cfg.transform, "transform");
  if (t.to_eulerian) {
    const auto run = run_platoon(cfg);
    const auto field = to_eulerian(run.surface, t.grid, t.rule);
    OutputFile f(opts, "eulerian.csv");
    write_field(f.stream(), field, cfg.output.stride, true);
    f.close();
    return "transform: to_eulerian, " + std::to_string(run.surface.vehicles()) + " vehicles onto " +
           std::to_string(field.cells()) + " cells, " + std::to_string(field.steps()) + " records, vehicles " +
           num(total_vehicles(field, 0)) + " on grid -> " + f.path();
  }
  const auto run = run_pde(cfg);
  const double seed = t.seed ? *t.seed : run.field.x0 + run.field.length();
  const std::vector<double> seeds{seed};
  const auto surface = to_trajectories(run.field, t.vehicles, std::span<const double>(seeds));
  OutputFile f(opts, "lagrangian.csv");
  write_trajectories(f.stream(), surface, cfg.output.stride);
  f.close();
  return "transform: to_trajectories, " + std::to_string(surface.vehicles()) + " vehicles over " +
         std::to_string(surface.steps()) + " records from " + run.solver + " field -> " + f.path();
}

std::string cmd_compare(const ScenarioConfig& cfg, const RunOptions& opts) {
  const SuiteSpec spec = parse_suite(cfg);
  const auto reports = run_suite(spec.cases, std::span<const int>(spec.resolutions), opts.jobs);

  OutputFile sf(opts, "summary.csv");
  CsvWriter sw(sf.stream(), {"scenario", "model", "resolution", "l1_k", "linf_k", "l1_v", "linf_v", "growth_cf",
                             "growth_pde", "verdict"});
  std::map<std::string, long> tally;
  for (const auto& rep : reports) {
    const auto& row = rep.table.front();
    sw << rep.scenario << rep.model << long(row.scale) << row.l1_k << row.linf_k << row.l1_v << row.linf_v
       << row.growth_cf << row.growth_pde << rep.verdict;
    sw.end_row();
    ++tally[rep.verdict];

    OutputFile rf(opts, "report_" + file_safe(rep.model) + "_" + file_safe(rep.scenario) + "_x" +
                            std::to_string(long(row.scale)) + ".csv");
    CsvWriter rw(rf.stream(), {"scenario", "model", "label", "resolution", "dx", "vehicles", "cells", "compared",
                               "l1_k", "linf_k", "l1_v", "linf_v", "count_gap", "growth_cf", "growth_pde",
                               "threshold", "verdict", "fault"});
    for (const auto& r : rep.table) {
      rw << rep.scenario << rep.model << r.label << long(r.scale) << r.dx << r.vehicles << r.cells << r.compared
         << r.l1_k << r.linf_k << r.l1_v << r.linf_v << r.count_gap << r.growth_cf << r.growth_pde << rep.threshold
         << rep.verdict << r.fault;
      rw.end_row();
    }
    rf.close();
  }
  sf.close();

  // Convergence table per case across the configured resolutions.
  OutputFile cf(opts, "convergence.csv");
  CsvWriter cw(cf.stream(), {"scenario", "model", "resolution", "dx", "vehicles", "l1_k", "l1_rate", "violation"});
  long violations = 0;
  const std::size_t R = spec.resolutions.size();
  for (std::size_t c = 0; c < spec.cases.size(); ++c) {
    for (std::size_t i = 0; i < R; ++i) {
      const auto& rep = reports[c * R + i];
      const auto& row = rep.table.front();
      double rate = nan;
      bool violation = false;
      if (i > 0) {
        const auto& prev = reports[c * R + i - 1].table.front();
        // Ring refinement grows the platoon at fixed spacing, so the scale factor is the resolution.
        if (prev.l1_k > 0 && row.l1_k > 0 && prev.scale != row.scale)
          rate = std::log(prev.l1_k / row.l1_k) / std::log(row.scale / prev.scale);
        violation = row.l1_k > prev.l1_k;
      }
      violations += violation;
      cw << rep.scenario << rep.model << long(row.scale) << row.dx << row.vehicles << row.l1_k << rate << violation;
      cw.end_row();
    }
  }
  cf.close();

  std::string lwr_note;
  if (!spec.lwr.empty()) {
    OutputFile lf(opts, "lwr_summary.csv");
    CsvWriter lw(lf.stream(), {"id", "resolution", "dx", "vehicles", "cells", "l1_k", "linf_k", "count_gap",
                               "front_cf", "front_pde", "front_exact", "speed_cf", "speed_pde", "speed_exact",
                               "l1_rate", "verdict", "fault"});
    long pass = 0;
    for (const auto& lc : spec.lwr) {
      EquivalenceReport<double> rep;
      try {
        rep = compare_lwr(require_fd(cfg), lc, std::span<const int>(spec.resolutions));
      } catch (const ConfigError&) {
        throw;
      } catch (const std::exception& e) {
        rep.verdict = "incomparable";
        ResolutionResult<double> row;
        row.fault = e.what();
        rep.table.push_back(row);
      }
      pass += rep.verdict == "pass";
      for (std::size_t i = 0; i < rep.table.size(); ++i) {
        const auto& r = rep.table[i];
        const double rate = i > 0 && i - 1 < rep.l1_rates.size() ? rep.l1_rates[i - 1] : nan;
        lw << lc.id << long(r.scale) << r.dx << r.vehicles << r.cells << r.l1_k << r.linf_k << r.count_gap
           << r.front_cf << r.front_pde << r.front_exact << r.speed_cf << r.speed_pde << r.speed_exact << rate
           << rep.verdict << r.fault;
        lw.end_row();
      }
    }
    lf.close();
    lwr_note = ", lwr " + std::to_string(pass) + "/" + std::to_string(spec.lwr.size()) + " pass";
  }

  std::string counts;
  for (const auto& [verdict, n] : tally) counts += (counts.empty() ? "" : ", ") + verdict + " " + std::to_string(n);
  return "compare: " + std::to_string(reports.size()) + " reports" + (counts.empty() ? "" : " (" + counts + ")") +
         ", convergence violations " + std::to_string(violations) + lwr_note + " -> " + sf.path();
}

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Car-following / continuum traffic model toolkit", "trafficeq"};
  app.fallthrough();
  app.require_subcommand(0, 1);
  std::string config_path, out_dir;
  unsigned jobs = 1;
  bool seed_demo = false;
  app.add_option("--config", config_path, "scenario JSON file");
  app.add_option("--out", out_dir, "output directory (overrides output.dir)");
  app.add_option("--jobs", jobs, "parallel suite entries")->check(CLI::PositiveNumber);
  app.add_flag("--seed-demo", seed_demo, "write a complete worked scenario (to --out DIR/scenario.json or stdout)");

  using Cmd = std::string (*)(const ScenarioConfig&, const RunOptions&);
  const std::vector<std::tuple<const char*, const char*, const char*, Cmd>> commands{
      {"fd", "sample the fundamental diagram", "fundamental_diagram", cmd_fd},
      {"steady", "steady-state speed-density curve of the model", "steady_state", cmd_steady},
      {"stability", "string and continuum stability map", "stability_analysis", cmd_stability},
      {"simulate-cf", "car-following platoon simulation", "lagrangian_sim", cmd_simulate_cf},
      {"simulate-pde", "continuum simulation", "eulerian_sim", cmd_simulate_pde},
      {"transform", "Lagrangian <-> Eulerian transform", "coordinate_transforms", cmd_transform},
      {"compare", "paired car-following / continuum equivalence suite", "equivalence_harness", cmd_compare},
  };
  for (const auto& [name, help, module, fn] : commands) app.add_subcommand(name, help);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error: usage: " << e.what() << "\n";
    return 2;
  }

  if (seed_demo) {
    const std::string text = demo_scenario();
    if (out_dir.empty()) {
      out << text;
      return 0;
    }
    try {
      RunOptions opts{out_dir, jobs};
      OutputFile f(opts, "scenario.json");
      f.stream() << text;
      f.close();
      out << "seed-demo: wrote " << f.path() << "\n";
    } catch (const std::exception& e) {
      err << "error: io: " << e.what() << "\n";
      return 1;
    }
    return 0;
  }

  const auto subs = app.get_subcommands();
  if (subs.empty()) {
    err << "error: usage: a subcommand is required (or --seed-demo)\n" << app.help();
    return 2;
  }
  const std::string chosen = subs.front()->get_name();
  const auto it = std::find_if(commands.begin(), commands.end(), [&](const auto& c) { return chosen == std::get<0>(c); });
  const char* module = std::get<2>(*it);

  try {
    if (config_path.empty()) throw ConfigError("a scenario file is required", "--config");
    const ScenarioConfig cfg = load_config(config_path);
    RunOptions opts{out_dir.empty() ? cfg.output.dir : out_dir, jobs};
    out << std::get<3>(*it)(cfg, opts) << "\n";
    return 0;
  } catch (const ConfigError& e) {
    err << "error: config: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    err << "error: " << module << ": " << e.what() << "\n";
    return 1;
  }
}

}  // namespace trafficeq::cli
