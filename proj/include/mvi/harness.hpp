#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "mvi/empirical.hpp"
#include "mvi/function_class.hpp"
#include "mvi/interval.hpp"
#include "mvi/io.hpp"
#include "mvi/mdp.hpp"

namespace mvi::harness {

using Json = io::Json;

inline constexpr const char* kLibraryVersion = "0.1.0";

struct Diagnostic {
  /// JSON-pointer-like location, e.g. "/q_class/half_width".
  std::string path;
  std::string message;
};

/// Schema and cross-field checks; never runs a solver. Empty means valid.
std::vector<Diagnostic> validate(const Json& config);

struct RunOptions {
  /// Directory that relative file paths in the config are resolved against.
  std::filesystem::path base_dir = ".";
  int jobs = 1;
  /// Overrides the config's top-level seed.
  std::optional<std::uint64_t> seed;
  bool emit_certificates = false;
};

struct RunOutput {
  /// Result document: experiment, config hash, tolerances, version, timing
  /// and the experiment-specific payload.
  Json result;
  /// File name to delimited-text contents.
  std::map<std::string, std::string> tables;
};

/// Validates, then runs the experiment. Invalid configs raise ConfigError
/// listing every diagnostic.
RunOutput run(const Json& config, const RunOptions& options = {});

/// Writes result.json and every table into dir.
void write_outputs(const RunOutput& output, const std::filesystem::path& dir);

/// FNV-1a 64 hash of the compact serialization.
std::uint64_t config_hash(const Json& config);

// Experiment kernels, usable without a config document.

struct SweepRow {
  double half_width = 0.0;
  double upper_w = 0.0;
  double lower_w = 0.0;
  double upper_q = 0.0;
  double lower_q = 0.0;
  bool reversed = false;
};

/// Unified interval for Q boxes centered at q_center with each half-width.
std::vector<SweepRow> reversal_sweep(const BiAffineLoss& loss, const Vec& q_center,
                                     const FunctionClass& w_class,
                                     const std::vector<double>& half_widths, int jobs = 1);

std::string sweep_csv(const std::vector<SweepRow>& rows, double truth);

/// Sign changes in a sequence, skipping entries with |x| <= tol.
int count_sign_changes(const std::vector<double>& values, double tol);

struct CoverageTrial {
  double raw_low = 0.0;
  double raw_high = 0.0;
  double boot_low = 0.0;
  double boot_high = 0.0;
  bool raw_covers = false;
  bool boot_covers = false;
};

struct CoverageSummary {
  double truth = 0.0;
  double exact_low = 0.0;
  double exact_high = 0.0;
  double raw_coverage = 0.0;
  double boot_coverage = 0.0;
  double raw_mean_length = 0.0;
  double boot_mean_length = 0.0;
  std::vector<CoverageTrial> trials;
};

/// Repeated-trial coverage of J(pi) by the raw empirical interval and by the
/// bootstrapped interval. Trial t samples with derive_seed(seed, t) and
/// bootstraps with derive_seed(seed, trials + t).
CoverageSummary coverage_study(const TabularMdp& mdp, const Policy& policy, const Vec& mu,
                               const FunctionClass& q_class, const FunctionClass& w_class,
                               int trials, int n, int B, int k, std::uint64_t seed,
                               double noise_half_width = 0.0, int jobs = 1);

std::string coverage_csv(const CoverageSummary& summary);

}  // namespace mvi::harness
