#pragma once

#include <filesystem>
#include <ostream>

#include <json.hpp>

#include "scenario.hpp"

namespace pulsefield::cli {

enum ExitCode : int { kOk = 0, kConfigError = 1, kRunError = 2, kVerificationFailure = 3 };

/// Entry point behind the `pulsefield` executable.
int run_cli(int argc, char** argv, std::ostream& out, std::ostream& err);

/// --out, then $PULSEFIELD_OUT, then ./pulsefield_out.
std::filesystem::path output_root(const std::string& flag);

void run_simulate(const Scenario& sc, const std::filesystem::path& dir, std::ostream& out);
void run_particles(const Scenario& sc, const std::filesystem::path& dir, std::ostream& out);
void run_steady_state(const Scenario& sc, const std::filesystem::path& dir, std::ostream& out);

/// Writes reports.json; returns false if any criterion failed.
bool run_verify(const std::string& suite, const std::filesystem::path& dir, std::ostream& out);

/// Expands the `sweep` block into one document per cell.
std::vector<nlohmann::json> expand_sweep(const nlohmann::json& doc);

}  // namespace pulsefield::cli
