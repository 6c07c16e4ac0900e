#pragma once

#include <ostream>
#include <string>

#include "trafficeq/config.hpp"

namespace trafficeq::cli {

/// Where a command writes and how wide the suite may fan out.
struct RunOptions {
  std::string out_dir;
  unsigned jobs = 1;
};

// Each command writes its CSVs under opts.out_dir and returns the one-line summary.
std::string cmd_fd(const ScenarioConfig& cfg, const RunOptions& opts);
std::string cmd_steady(const ScenarioConfig& cfg, const RunOptions& opts);
std::string cmd_stability(const ScenarioConfig& cfg, const RunOptions& opts);
std::string cmd_simulate_cf(const ScenarioConfig& cfg, const RunOptions& opts);
std::string cmd_simulate_pde(const ScenarioConfig& cfg, const RunOptions& opts);
std::string cmd_transform(const ScenarioConfig& cfg, const RunOptions& opts);
std::string cmd_compare(const ScenarioConfig& cfg, const RunOptions& opts);

/// Exit codes: 0 success, 1 module fault, 2 configuration fault.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace trafficeq::cli
