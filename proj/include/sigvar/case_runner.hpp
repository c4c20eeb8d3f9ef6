#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

#include "sigvar/case_studies.hpp"
#include "sigvar/cc_oracle.hpp"
#include "sigvar/continuation.hpp"
#include "sigvar/report.hpp"

namespace sigvar {

/// Exhaustive cross-check on a small scenario set: the continuation and the
/// exact oracle are both run on the same scenarios.
struct OracleCheck {
  std::size_t count = 20;
  std::uint64_t seed = 7;
  double alpha = 0.1;
  OracleOptions oracle;
};

struct CaseConfig {
  std::string problem;  // analytic | farmer | flare
  std::string distribution;
  std::size_t count = 0;
  std::uint64_t seed = 0;
  std::optional<std::filesystem::path> scenarios;     // load instead of generating
  std::optional<std::filesystem::path> coefficients;  // key-value file; defaults otherwise
  ContinuationOptions continuation;
  bool ss_sweep = false;
  std::optional<OracleCheck> oracle_check;

  /// Shipped defaults: the scenario set is the one stored under data/scenarios.
  static CaseConfig defaults(const std::string& problem);
};

/// Builds the named program; `coefficients` overrides the shipped defaults.
StochasticProgram build_program(const std::string& problem, const ScenarioSet& scen,
                                const std::optional<std::filesystem::path>& coefficients = std::nullopt);

/// Loads `cfg.scenarios` or generates (distribution, count, seed).
ScenarioSet case_scenarios(const CaseConfig& cfg);

CaseArtifacts run_case(const CaseConfig& cfg);

}  // namespace sigvar
