#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <unistd.h>

#include "trafficeq/cli.hpp"

namespace fs = std::filesystem;
using trafficeq::cli::Json;

namespace {

struct Result {
  int code;
  std::string out, err;
};

Result run(std::vector<std::string> args) {
  args.insert(args.begin(), "trafficeq");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = trafficeq::cli::run_cli(int(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

fs::path scratch(const std::string& name) {
  static int counter = 0;
  auto p = fs::temp_directory_path() /
           ("trafficeq_cli_" + std::to_string(::getpid()) + "_" + std::to_string(counter++) + "_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

Json demo() { return Json::parse(trafficeq::cli::demo_scenario()); }

std::string write_config(const fs::path& dir, const Json& j) {
  const auto path = dir / "scenario.json";
  std::ofstream(path) << j.dump(2);
  return path.string();
}

std::vector<std::vector<std::string>> read_csv(const fs::path& path) {
  std::ifstream in(path);
  std::vector<std::vector<std::string>> rows;
  for (std::string line; std::getline(in, line);) {
    std::vector<std::string> cells;
    std::stringstream ss(line);
    for (std::string cell; std::getline(ss, cell, ',');) cells.push_back(cell);
    rows.push_back(cells);
  }
  return rows;
}

std::size_t column(const std::vector<std::string>& header, const std::string& name) {
  for (std::size_t i = 0; i < header.size(); ++i)
    if (header[i] == name) return i;
  FAIL("missing column " << name);
  return 0;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

double peak_flow(const fs::path& csv, double* at_k = nullptr) {
  const auto rows = read_csv(csv);
  const auto kc = column(rows[0], "k"), qc = column(rows[0], "q");
  double best = -1;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    const double q = std::stod(rows[i][qc]);
    if (q > best) {
      best = q;
      if (at_k) *at_k = std::stod(rows[i][kc]);
    }
  }
  return best;
}

}  // namespace

TEST_CASE("fd: triangular samples peak at capacity") {
  const auto dir = scratch("fd");
  const auto r = run({"fd", "--config", write_config(dir, demo()), "--out", (dir / "o").string()});
  REQUIRE(r.code == 0);
  CHECK(r.out.find("fd") == 0);
  const auto rows = read_csv(dir / "o" / "fd.csv");
  CHECK(rows.size() == 1002);
  CHECK(peak_flow(dir / "o" / "fd.csv") == doctest::Approx(20.0 * 5 * 0.2 / 25));
}

TEST_CASE("fd: Greenshields vertex at k_j / 2") {
  const auto dir = scratch("gs");
  auto j = demo();
  j["fd"] = {{"kind", "greenshields"}, {"v_f", 20.0}, {"k_j", 0.2}};
  REQUIRE(run({"fd", "--config", write_config(dir, j), "--out", (dir / "o").string()}).code == 0);
  double k_peak = 0;
  CHECK(peak_flow(dir / "o" / "fd.csv", &k_peak) == doctest::Approx(1.0));
  CHECK(k_peak == doctest::Approx(0.1));
}

TEST_CASE("configuration faults exit 2 with the key path") {
  const auto dir = scratch("cfg");
  SUBCASE("missing k_j") {
    auto j = demo();
    j["fd"].erase("k_j");
    const auto r = run({"fd", "--config", write_config(dir, j), "--out", dir.string()});
    CHECK(r.code == 2);
    CHECK(r.err.find("fd.k_j") != std::string::npos);
  }
  SUBCASE("CFL-violating pde step") {
    auto j = demo();
    j["pde"]["dt"] = 0.5;
    const auto r = run({"simulate-pde", "--config", write_config(dir, j), "--out", dir.string()});
    CHECK(r.code == 2);
    CHECK(r.err.find("pde.dt") != std::string::npos);
  }
  SUBCASE("unknown key") {
    auto j = demo();
    j["sim"]["bogus"] = 1;
    const auto r = run({"simulate-cf", "--config", write_config(dir, j), "--out", dir.string()});
    CHECK(r.code == 2);
    CHECK(r.err.find("sim.bogus") != std::string::npos);
  }
  SUBCASE("unreadable file and bad usage") {
    CHECK(run({"fd", "--config", (dir / "nope.json").string()}).code == 2);
    CHECK(run({"frobnicate"}).code == 2);
    CHECK(run({"fd"}).code == 2);
  }
}

TEST_CASE("module faults exit 1 with the module name") {
  const auto dir = scratch("fault");
  auto j = demo();
  j["model"] = {{"name", "linear_gm"}, {"T", 1.0}};
  j["sim"] = {{"scheme", "rk4"}, {"dt", 0.01}, {"steps", 2000}, {"vehicles", 5}, {"spacing", 10.0}, {"speed", 20.0},
              {"boundary", {{"kind", "leader"}, {"profile", "piecewise"}, {"breakpoints", {{1.0, 0.0}}}}}};
  const auto r = run({"simulate-cf", "--config", write_config(dir, j), "--out", dir.string()});
  CHECK(r.code == 1);
  CHECK(r.err.find("lagrangian_sim") != std::string::npos);
}

TEST_CASE("stability sweep flips at T = tau / 2") {
  const auto dir = scratch("stab");
  REQUIRE(run({"stability", "--config", write_config(dir, demo()), "--out", dir.string()}).code == 0);
  const auto rows = read_csv(dir / "stability.csv");
  const auto tc = column(rows[0], "T"), kc = column(rows[0], "k"), pc = column(rows[0], "printed_stable"),
             ec = column(rows[0], "exact_stable");
  int checked = 0;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    const double T = std::stod(rows[i][tc]), k = std::stod(rows[i][kc]);
    if (k < 0.05 || k > 0.19 || T == 0.5) continue;
    const std::string expect = T < 0.5 ? "true" : "false";
    CHECK(rows[i][pc] == expect);
    CHECK(rows[i][ec] == expect);
    ++checked;
  }
  CHECK(checked > 100);
}

TEST_CASE("compare writes 18 summary rows") {
  const auto dir = scratch("cmp");
  const auto r = run({"compare", "--config", write_config(dir, demo()), "--out", dir.string(), "--jobs", "4"});
  REQUIRE(r.code == 0);
  const auto rows = read_csv(dir / "summary.csv");
  REQUIRE(rows.size() == 19);
  CHECK(rows[0] == std::vector<std::string>{"scenario", "model", "resolution", "l1_k", "linf_k", "l1_v", "linf_v",
                                            "growth_cf", "growth_pde", "verdict"});
  CHECK(fs::exists(dir / "lwr_summary.csv"));
  CHECK(fs::exists(dir / "convergence.csv"));
}

TEST_CASE("compare with an empty model list succeeds with no rows") {
  const auto dir = scratch("empty");
  auto j = demo();
  j["suite"]["models"] = Json::array();
  j["suite"].erase("lwr");
  REQUIRE(run({"compare", "--config", write_config(dir, j), "--out", dir.string()}).code == 0);
  CHECK(read_csv(dir / "summary.csv").size() == 1);
}

TEST_CASE("every subcommand runs on the demo scenario") {
  const auto dir = scratch("all");
  const auto cfg = write_config(dir, demo());
  for (const char* cmd : {"fd", "steady", "stability", "simulate-cf", "simulate-pde", "transform"}) {
    const auto r = run({cmd, "--config", cfg, "--out", (dir / cmd).string()});
    CAPTURE(cmd);
    CAPTURE(r.err);
    CHECK(r.code == 0);
    CHECK(std::count(r.out.begin(), r.out.end(), '\n') == 1);
  }
  CHECK(fs::exists(dir / "simulate-cf" / "trajectories.csv"));
  CHECK(fs::exists(dir / "simulate-pde" / "field.csv"));
  CHECK(fs::exists(dir / "transform" / "eulerian.csv"));
  CHECK(fs::exists(dir / "steady" / "steady.csv"));
}

TEST_CASE("seed-demo round-trips through the parser") {
  const auto dir = scratch("seed");
  const auto printed = run({"--seed-demo"});
  REQUIRE(printed.code == 0);
  CHECK(Json::parse(printed.out) == demo());
  REQUIRE(run({"--seed-demo", "--out", dir.string()}).code == 0);
  CHECK(Json::parse(slurp(dir / "scenario.json")) == demo());
  CHECK(run({"fd", "--config", (dir / "scenario.json").string(), "--out", dir.string()}).code == 0);
}

TEST_CASE("repeated runs are byte-identical") {
  const auto dir = scratch("det");
  const auto cfg = write_config(dir, demo());
  for (const char* cmd : {"simulate-cf", "simulate-pde", "stability"}) {
    REQUIRE(run({cmd, "--config", cfg, "--out", (dir / "a").string()}).code == 0);
    REQUIRE(run({cmd, "--config", cfg, "--out", (dir / "b").string()}).code == 0);
  }
  for (const auto& entry : fs::directory_iterator(dir / "a")) {
    CAPTURE(entry.path().filename().string());
    CHECK(slurp(entry.path()) == slurp(dir / "b" / entry.path().filename()));
  }
}
