#pragma once

#include <stdexcept>
#include <string>

namespace trafficeq {

/// Argument outside the mathematical domain of an operation (e.g. density above jam).
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Model constructed with invalid parameters.
class ParameterError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// An acceleration law was evaluated outside its admissible state space.
class EvaluationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Scenario or run configuration that cannot be executed (CFL, missing keys, ...).
/// `path()` names the offending configuration key when one is known.
class ConfigError : public std::invalid_argument {
 public:
  explicit ConfigError(const std::string& message, std::string path = {})
      : std::invalid_argument(path.empty() ? message : path + ": " + message),
        path_(std::move(path)) {}

  const std::string& path() const noexcept { return path_; }

 private:
  std::string path_;
};

/// A simulation aborted mid-run: collision, negative density, NaN.
class SimulationFault : public std::runtime_error {
 public:
  SimulationFault(const std::string& message, double time, long index)
      : std::runtime_error(message + " (t=" + std::to_string(time) +
                           ", index=" + std::to_string(index) + ")"),
        time_(time),
        index_(index) {}

  double time() const noexcept { return time_; }
  long index() const noexcept { return index_; }

 private:
  double time_;
  long index_;
};

}  // namespace trafficeq
