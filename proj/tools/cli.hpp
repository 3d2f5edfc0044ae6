#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "graspkit/errors.hpp"

namespace graspkit::cli {

struct UsageError : Error {
  using Error::Error;
};

/// Process exit codes.
enum ExitCode : int {
  kOk = 0,
  kFailure = 1,
  kUsage = 2,
  kConfig = 3,
  kIo = 4,
  kParse = 5,  // malformed mesh/annotation, or dataset schema mismatch
  kVerification = 6,
  kSolver = 7,
  kNoPositives = 8,
};

struct Command {
  std::string verb;  // generate, verify, evaluate, export-vis, train-ref, info
  std::filesystem::path config;
  std::vector<std::string> overrides;
  std::optional<std::uint64_t> seed;
  std::optional<int> workers;
  std::filesystem::path out;
  std::filesystem::path dataset;
  std::filesystem::path pred;
  std::filesystem::path gt;
  std::filesystem::path csv;
  std::string instance;
  std::optional<int> steps;
  bool defaults = false;
  std::string help;  // set when --help was requested
};

/// Strict parsing; throws UsageError for unknown verbs or flags.
Command parse_args(const std::vector<std::string>& args);

/// Runs a command. Machine-readable output goes to `out`, diagnostics to `err`.
int execute(const Command& cmd, std::ostream& out, std::ostream& err);

/// parse_args + execute with exit-code mapping for every error type.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace graspkit::cli
