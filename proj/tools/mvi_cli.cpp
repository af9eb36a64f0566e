#include <cstdlib>
#include <iostream>
#include <string>
#include <thread>

#include <CLI11.hpp>

#include "mvi/errors.hpp"
#include "mvi/harness.hpp"
#include "mvi/io.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitInvalid = 2;
constexpr int kExitSolver = 3;

enum class LogLevel { Error = 0, Warn = 1, Info = 2, Debug = 3 };

LogLevel log_level() {
  const char* env = std::getenv("MVI_LOG_LEVEL");
  if (!env) return LogLevel::Warn;
  const std::string v(env);
  if (v == "error") return LogLevel::Error;
  if (v == "info") return LogLevel::Info;
  if (v == "debug") return LogLevel::Debug;
  return LogLevel::Warn;
}

void log(LogLevel level, const std::string& message) {
  static const LogLevel threshold = log_level();
  if (level > threshold) return;
  static const char* names[] = {"error", "warn", "info", "debug"};
  std::cerr << "[" << names[static_cast<int>(level)] << "] " << message << "\n";
}

struct Args {
  std::string config;
  std::string out = "results";
  int jobs = 0;
  std::int64_t seed = -1;
  bool emit_certificates = false;
};

void add_run_flags(CLI::App* cmd, Args& args) {
  cmd->add_option("--config", args.config, "Experiment configuration (JSON)")->required()->check(CLI::ExistingFile);
  cmd->add_option("--out", args.out, "Output directory");
  cmd->add_option("--jobs", args.jobs, "Worker threads (0 = available parallelism)")->check(CLI::NonNegativeNumber);
  cmd->add_option("--seed", args.seed, "Override the configuration seed")->check(CLI::NonNegativeNumber);
  cmd->add_flag("--emit-certificates", args.emit_certificates, "Include saddle-point arguments in the result");
}

int run_experiment(const std::string& experiment, const Args& args) {
  const mvi::io::Json config = mvi::io::read_json(args.config);
  const std::string declared = config.is_object() ? config.value("experiment", std::string{}) : std::string{};
  if (!declared.empty() && declared != experiment) {
    log(LogLevel::Error, "config /experiment is '" + declared + "' but the subcommand is '" + experiment + "'");
    return kExitInvalid;
  }
  mvi::harness::RunOptions options;
  options.base_dir = std::filesystem::path(args.config).parent_path();
  if (options.base_dir.empty()) options.base_dir = ".";
  options.jobs = args.jobs > 0 ? args.jobs : std::max(1u, std::thread::hardware_concurrency());
  if (args.seed >= 0) options.seed = static_cast<std::uint64_t>(args.seed);
  options.emit_certificates = args.emit_certificates;

  log(LogLevel::Info, "running " + experiment + " from " + args.config + " with " +
                          std::to_string(options.jobs) + " job(s)");
  const mvi::harness::RunOutput output = mvi::harness::run(config, options);
  mvi::harness::write_outputs(output, args.out);
  log(LogLevel::Info, "wrote results to " + args.out);
  std::cout << output.result["result"].dump(2) << "\n";
  return kExitOk;
}

int run_validate(const std::string& path) {
  const mvi::io::Json config = mvi::io::read_json(path);
  const auto diagnostics = mvi::harness::validate(config);
  for (const auto& d : diagnostics) std::cout << (d.path.empty() ? "/" : d.path) << ": " << d.message << "\n";
  if (diagnostics.empty()) std::cout << "valid\n";
  return diagnostics.empty() ? kExitOk : kExitInvalid;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Minimax value intervals for tabular off-policy evaluation"};
  app.set_version_flag("--version", mvi::harness::kLibraryVersion);
  app.require_subcommand(1);

  Args args;
  std::string chosen;
  for (const char* name : {"eval", "sweep", "coverage", "policy-opt", "rmax-check", "avg-reward", "behavior-aware"}) {
    CLI::App* cmd = app.add_subcommand(name, std::string("Run the ") + name + " experiment");
    add_run_flags(cmd, args);
    cmd->callback([&chosen, name] { chosen = name; });
  }
  std::string validate_path;
  CLI::App* validate = app.add_subcommand("validate", "Check a configuration without solving");
  validate->add_option("--config", validate_path, "Experiment configuration (JSON)")->required()->check(CLI::ExistingFile);
  validate->callback([&chosen] { chosen = "validate"; });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitInvalid;
  }

  try {
    if (chosen == "validate") return run_validate(validate_path);
    return run_experiment(chosen, args);
  } catch (const mvi::ConfigError& e) {
    log(LogLevel::Error, "[" + e.module() + "] " + e.what());
    return kExitInvalid;
  } catch (const mvi::FormatError& e) {
    log(LogLevel::Error, "[" + e.module() + "] " + e.what());
    return kExitInvalid;
  } catch (const mvi::Error& e) {
    log(LogLevel::Error, "[" + e.module() + "] " + e.what());
    return kExitSolver;
  } catch (const std::filesystem::filesystem_error& e) {
    log(LogLevel::Error, std::string("[io] ") + e.what());
    return kExitInvalid;
  } catch (const std::exception& e) {
    log(LogLevel::Error, std::string("[cli-harness] ") + e.what());
    return kExitSolver;
  }
}
