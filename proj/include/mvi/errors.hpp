#pragma once

#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace mvi {

/// Base of every error raised by the library. Carries the name of the module
/// that raised it so the CLI can report provenance.
class Error : public std::runtime_error {
 public:
  Error(std::string module, const std::string& what)
      : std::runtime_error(what), module_(std::move(module)) {}

  const std::string& module() const noexcept { return module_; }

 private:
  std::string module_;
};

class DimensionMismatch : public Error {
 public:
  explicit DimensionMismatch(const std::string& what) : Error("function-classes", what) {}
};

class InvalidModel : public Error {
 public:
  explicit InvalidModel(const std::string& what) : Error("mdp-core", what) {}
};

class SingularSystem : public Error {
 public:
  explicit SingularSystem(const std::string& what) : Error("mdp-core", what) {}
};

/// d^pi puts mass on state-action pairs that mu never samples.
class UnsupportedOccupancy : public Error {
 public:
  UnsupportedOccupancy(const std::string& what, std::vector<std::pair<int, int>> pairs)
      : Error("mdp-core", what), pairs_(std::move(pairs)) {}

  const std::vector<std::pair<int, int>>& pairs() const noexcept { return pairs_; }

 private:
  std::vector<std::pair<int, int>> pairs_;
};

class NonErgodicChain : public Error {
 public:
  explicit NonErgodicChain(const std::string& what) : Error("mdp-core", what) {}
};

class InfeasibleClass : public Error {
 public:
  explicit InfeasibleClass(const std::string& what) : Error("saddle-solver", what) {}
};

class UnboundedObjective : public Error {
 public:
  explicit UnboundedObjective(const std::string& what) : Error("saddle-solver", what) {}
};

class SolverFailure : public Error {
 public:
  SolverFailure(std::string module, const std::string& what) : Error(std::move(module), what) {}
  explicit SolverFailure(const std::string& what) : Error("saddle-solver", what) {}
};

class UnsupportedAction : public Error {
 public:
  explicit UnsupportedAction(const std::string& what) : Error("interval-engine", what) {}
};

class EmptyDataset : public Error {
 public:
  explicit EmptyDataset(const std::string& what) : Error("empirical-layer", what) {}
};

class FormatError : public Error {
 public:
  explicit FormatError(const std::string& what) : Error("io", what) {}
};

/// Experiment configuration rejected before any computation.
class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& what) : Error("cli-harness", what) {}
};

}  // namespace mvi
