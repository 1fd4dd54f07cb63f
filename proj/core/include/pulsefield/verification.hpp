#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "pulsefield/diagnostics.hpp"
#include "pulsefield/meanfield.hpp"
#include "pulsefield/phase_response.hpp"

namespace pulsefield {

/// A mean-field run the battery performs.
struct SuiteScenario {
  std::string name;
  PhaseResponse k;
  QuantileProfile initial;
  SolverConfig solver;
  RunMode mode = RunMode::original;
  double tau_end = 1.0;

  TrajectoryRecord execute() const;
};

/// Every mean-field scenario used by the default battery.
std::vector<SuiteScenario> suite_scenarios();
SuiteScenario suite_scenario(const std::string& name);

struct CriterionResult {
  int id = 0;
  std::string title;
  bool passed = false;
  double seconds = 0.0;
  /// Wall-clock budget in seconds; 0 means none.
  double budget_seconds = 0.0;
  std::vector<TheoremReport> reports;
};

CriterionResult run_criterion(int id);

/// "default" runs criteria 1-12; "smoke" is a fast subset.
std::vector<int> suite_criteria(std::string_view suite);
std::vector<CriterionResult> run_suite(std::string_view suite);

}  // namespace pulsefield
