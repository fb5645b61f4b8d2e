#pragma once
// Reproducible experiment runner.  Experiments are described by JSON
// configuration files (coefficients as expression strings over x1, x2),
// validated exhaustively, and executed into CSV tables plus a manifest that
// embeds the fully resolved configuration and a content hash.

#include <cstdint>
#include <string>
#include <vector>

#include "json.hpp"

namespace dnl {

struct RunOptions {
  std::string out_dir = ".";
  std::uint64_t seed = 0;
  bool sanity_p2 = false;  // allows p = 2 sanity-mode configurations
};

struct ValidationReport {
  std::vector<std::string> errors;  // "<field path>: <message>"
  bool ok() const { return errors.empty(); }
};

/// Schema check without running anything; errors are listed exhaustively.
ValidationReport validate_config(const nlohmann::json& config, bool allow_p2 = false);

struct ExperimentResult {
  int exit_code = 0;  // 0 ok, 2 config error, 1 runtime failure
  std::vector<std::string> files;
  std::string message;
};

ExperimentResult run_experiment(const nlohmann::json& config, const RunOptions& opts);

/// Throws std::runtime_error with a descriptive message on I/O or JSON errors.
nlohmann::json load_config_file(const std::string& path);

extern const char* const kVersion;

}  // namespace dnl
