#pragma once

#include <initializer_list>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "trafficeq/acceleration_law.hpp"
#include "trafficeq/continuum.hpp"
#include "trafficeq/equivalence.hpp"
#include "trafficeq/fundamental_diagram.hpp"
#include "trafficeq/platoon.hpp"

namespace trafficeq::cli {

using Json = nlohmann::json;

/**
Strict view of one JSON object. Construction rejects keys outside `allowed`;
every accessor reports problems as ConfigError with the dotted path of the
offending key.
*/
class Section {
 public:
  Section(const Json& j, std::string path, std::initializer_list<const char*> allowed);

  bool has(const char* key) const;
  std::string path(const char* key) const;
  const Json& raw(const char* key) const;

  double real(const char* key, std::optional<double> fallback = {}) const;
  double positive(const char* key, std::optional<double> fallback = {}) const;
  double nonnegative(const char* key, std::optional<double> fallback = {}) const;
  long integer(const char* key, std::optional<long> fallback = {}, long min = 0) const;
  std::string choice(const char* key, std::initializer_list<const char*> options,
                     std::optional<std::string> fallback = {}) const;
  std::vector<double> reals(const char* key, std::optional<std::vector<double>> fallback = {}) const;

 private:
  const Json* j_;
  std::string path_;
};

struct AnalysisConfig {
  std::vector<double> k_grid;
  std::optional<std::string> sweep_param;
  std::vector<double> sweep_values;
};

enum class CfScheme { Rk4, Pipes, Newell };

struct SimConfig {
  CfScheme scheme = CfScheme::Rk4;
  double dt = 0;
  long steps = 0;
  long record_every = 1;
  long vehicles = 0;
  double spacing = 0;
  double perturbation = 0;
  int mode = 1;
  std::optional<double> speed;
  bool ring = false;
  Json leader_json;  // leader boundary; v0 defaults to the platoon's steady speed
};

enum class PdeSolver { Lwr, SecondOrder };

struct PdeConfig {
  PdeSolver solver = PdeSolver::Lwr;
  EulerianScenario<double> scenario;  // density/speed filled once the model is known
  std::string initial_kind = "uniform";
  double k = 0, k_left = 0, k_right = 0, x_split = 0, amplitude = 0;
  int mode = 1;
  std::optional<double> speed;
};

struct TransformConfig {
  bool to_eulerian = true;
  CellGrid<double> grid{0, 1, 0};
  SegmentSpeed rule = SegmentSpeed::Trailing;
  long vehicles = 0;
  std::optional<double> seed;
};

struct SuiteSpec {
  std::vector<SuiteCase<double>> cases;
  std::vector<int> resolutions;
  std::vector<LwrCase<double>> lwr;
};

struct OutputConfig {
  std::string dir = ".";
  long stride = 1;
};

/// A validated scenario document. Sections are parsed eagerly; the model is
/// kept as JSON so parameter sweeps can rebuild it.
struct ScenarioConfig {
  Json document;
  std::optional<FundamentalDiagram<double>> fd;
  std::optional<Json> model;
  std::optional<AnalysisConfig> analysis;
  std::optional<SimConfig> sim;
  std::optional<PdeConfig> pde;
  std::optional<TransformConfig> transform;
  std::optional<Json> suite;
  OutputConfig output;
};

ScenarioConfig parse_config(const std::string& text);
ScenarioConfig load_config(const std::string& path);

FundamentalDiagram<double> parse_fd(const Json& j, const std::string& path);

/// Builds the law described by a model object; `overrides` replace numeric parameters.
AccelerationLaw<double> build_law(const Json& model, const std::string& path,
                                  const std::optional<FundamentalDiagram<double>>& fd,
                                  const std::map<std::string, double>& overrides = {});

/// Leader profile from a sim.boundary object; `default_speed` fills a missing v0.
LeaderProfile<double> parse_leader(const Json& j, const std::string& path, double default_speed);

const AccelerationLaw<double>& require_law(const ScenarioConfig& cfg, std::optional<AccelerationLaw<double>>& slot);

SuiteSpec parse_suite(const ScenarioConfig& cfg);

/// Complete worked scenario covering every subcommand.
std::string demo_scenario();

}  // namespace trafficeq::cli
