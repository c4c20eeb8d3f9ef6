#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

#include "sigvar/nlp_solver.hpp"
#include "sigvar/problem.hpp"

namespace sigvar {

/// C(S, k) exceeds the configured enumeration limit.
class OracleLimitError : public std::invalid_argument {
 public:
  OracleLimitError(double count, double limit);
  double count() const { return count_; }

 private:
  double count_;
};

/// No exempt subset produced an Optimal subproblem.
class OracleInfeasibleError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct OracleOptions {
  double max_subsets = 1e6;
  SolverOptions solver = [] {
    SolverOptions o;
    o.multistart_count = 5;
    return o;
  }();

  void validate() const;
};

struct OracleSubproblem {
  std::vector<std::size_t> exempt;
  SolveStatus status = SolveStatus::NumericalFailure;
  double objective = 0.0;
};

struct OracleResult {
  double objective = 0.0;
  Vec x;
  Mat y;
  std::vector<std::size_t> exempt;  // size floor(alpha S), ascending
  std::size_t subproblems = 0;
  std::vector<OracleSubproblem> log;  // lexicographic subset order
};

/// Number of size-k subsets of S items, as a double (exact below 2^53).
double subset_count(std::size_t S, std::size_t k);

/// Exact SAA chance-constrained optimum by enumerating every exempt set of
/// size floor(alpha S). Exempting fewer scenarios only shrinks the feasible
/// set, so size-k subsets suffice.
OracleResult solve_exact(const StochasticProgram& prog, const ScenarioSet& scen, const RiskLevel& a,
                         const OracleOptions& opts = {});

struct ScenarioFailure {
  std::size_t scenario = 0;
  std::string message;
};

struct CandidateCheck {
  bool feasible = false;
  std::size_t violation_count = 0;
  double empirical_probability = 0.0;  // fraction of scenarios with f <= 0
  std::vector<ScenarioFailure> failures;
};

/// Counts scenarios with f > 0 at x (beyond 1e-6 cc_scale, the solver's
/// feasibility tolerance). With recourse, each scenario's y is
/// chosen to minimize f subject to the recourse constraints; scenarios whose
/// recourse problem fails count as violated and are listed in failures.
CandidateCheck verify_candidate(const StochasticProgram& prog, const ScenarioSet& scen,
                                const RiskLevel& a, const Vec& x,
                                const SolverOptions& solver = {});

}  // namespace sigvar
