// Command-line front end. The config is a JSON object:
//
//   {"schema": 1,
//    "physical": {"resistance_ohms": ..., "capacitance_farads": ..., ...}
//      or "normalized": {"alpha": ..., "beta": ...},
//    "initial": {"p": ..., "u": ...} or {"tau0_seconds": ..., "v0_volts": ...},
//    "options": {...command specific...},
//    "format": "json" | "csv" | "table" | "svg"}
//
// Every JSON output repeats the resolved config under "config", and an
// output file is itself accepted as a config.
#pragma once

#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

namespace cppll::cli {

enum ExitCode { kOk = 0, kValidationError = 2, kRuntimeFailure = 3 };

/// Malformed or inconsistent config; maps to exit code 2.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

const std::vector<std::string>& commands();

/// Runs one command. The primary output goes to `out`, diagnostics to `err`.
int run(const std::string& command, const nlohmann::json& config, std::ostream& out, std::ostream& err);

/// Parses argv (subcommand, --config and override flags) and calls run().
int main_entry(int argc, char** argv, std::ostream& out, std::ostream& err);

}  // namespace cppll::cli
