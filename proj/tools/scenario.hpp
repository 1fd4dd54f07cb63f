#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "pulsefield/meanfield.hpp"
#include "pulsefield/particles.hpp"
#include "pulsefield/phase_response.hpp"

namespace pulsefield::cli {

struct ParticleSpec {
  std::size_t count = 1000;
  std::uint64_t seed = 0;
  double t_end = 1.0;
  std::optional<std::size_t> spike_budget;
  Sampling sampling = Sampling::iid;
  double ensemble_every = 0.0;
};

struct Scenario {
  std::string name;
  double phi_f = 1.0;
  PhaseResponse k = PhaseResponse(Affine{0.0, 1.0}, 1.0);
  nlohmann::json initial;
  SolverConfig solver;
  RunMode mode = RunMode::original;
  double tau_end = 1.0;
  std::size_t dump_every = 0;
  std::optional<ParticleSpec> particles;
  std::vector<std::string> reports;
  /// Input with every default filled in; echoed into manifest.json.
  nlohmann::json resolved;
};

/// Validates and resolves a scenario document. Throws ConfigError naming
/// the offending key.
Scenario parse_scenario(const nlohmann::json& doc);

nlohmann::json load_json_file(const std::string& path);

/// Builds the τ = 0 profile from the `initial` block.
QuantileProfile build_initial_profile(const Scenario& sc);

/// Sets a dotted path such as "solver.M" inside a JSON document.
void set_dotted(nlohmann::json& doc, const std::string& path, const nlohmann::json& value);

const std::vector<std::string>& known_reports();

}  // namespace pulsefield::cli
