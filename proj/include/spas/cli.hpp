#pragma once

// Batch front end: `spas <verify|construct|gain-search|simulate> --config PATH
// [--out DIR] [--seed U64] [--threads N]`. Reports are JSON, bulk samples
// CSV; see docs/config.md for the configuration format.

#include <cstdint>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "spas/error.hpp"

namespace spas::cli {

enum ExitCode : int {
  kExitPass = 0,
  kExitConditionFailure = 1,
  kExitConfigError = 2,
  kExitRuntimeError = 3,
};

/// Malformed or inconsistent configuration (exit code 2).
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Runs one command line. `args` excludes the program name. Human-readable
/// summaries go to `out`, diagnostics to `err`; logging follows SPAS_LOG.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// 64-bit FNV-1a.
std::uint64_t fnv1a64(std::string_view bytes);

}  // namespace spas::cli
