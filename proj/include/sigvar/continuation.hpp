#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "sigvar/nlp_solver.hpp"
#include "sigvar/problem.hpp"

namespace sigvar {

/// Raised when the continuation cannot start (CVaR stage fails or yields a
/// nonnegative minimizer) or when a solve fails and stop_on_failure is set.
class ContinuationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct ContinuationOptions {
  double lambda = 2.0;
  double mu_target = 320.0;
  double alpha = 0.05;
  SolverOptions solver;
  bool stop_on_failure = false;

  void validate() const;
};

/// One solve of the sequence; ell = 0 is the CVaR stage (mu, tau absent).
struct ContinuationRecord {
  int ell = 0;
  std::optional<double> mu;
  std::optional<double> tau;
  double objective = 0.0;
  Vec x;
  Mat y;
  double var_of_f = 0.0;               // empirical (1 - alpha)-quantile of f, reported units
  double violation_probability = 0.0;  // empirical P(f > threshold)
  SolveStatus status = SolveStatus::NumericalFailure;
  KktResiduals kkt;
  int outer_iterations = 0;
  int inner_iterations = 0;
  double wall_time = 0.0;
  std::string message;
};

struct ContinuationTrace {
  double alpha = 0.0;
  double gamma = 0.0;
  double lambda = 0.0;
  double mu_target = 0.0;
  double report_offset = 0.0;
  std::vector<ContinuationRecord> records;  // records[0] is the CVaR stage
  // alpha - mean SigVaR kernel at the CVaR point under (mu_1, tau_1).
  double handoff_margin = 0.0;
  bool truncated = false;
  std::vector<std::string> warnings;

  /// The last record whose solve reported Optimal.
  const ContinuationRecord& final_record() const;
};

ContinuationTrace run_continuation(const StochasticProgram& prog, const ScenarioSet& scen,
                                   const ContinuationOptions& opts);

struct SummaryRow {
  int ell = 0;
  std::optional<double> mu;
  std::optional<double> tau;
  double objective = 0.0;
  double var_of_f = 0.0;
  double satisfaction_probability = 0.0;  // empirical P(f <= threshold)
  std::string status;
};

std::vector<SummaryRow> summarize(const ContinuationTrace& trace);

/// Empirical (1 - alpha)-quantile of f and P(f > threshold) at a point.
struct EmpiricalCc {
  double var_of_f = 0.0;
  double violation_probability = 0.0;
};
EmpiricalCc empirical_cc(const StochasticProgram& prog, const ScenarioSet& scen, const Vec& x,
                         const Mat& y, double alpha);

}  // namespace sigvar

namespace sigvar {

/// One cell of a smoothed-sigmoid comparison sweep over rho.
struct SsSweepCell {
  double rho = 0.0;
  double mu = 0.0;   // SigVaR parameters the cell maps to (for reference)
  double tau = 0.0;
  SolveStatus status = SolveStatus::NumericalFailure;
  double objective = 0.0;
  double satisfaction_probability = 0.0;  // empirical P(f <= threshold)
  std::string message;
};

/// Solves the smoothed-sigmoid approximation for each rho, all from the same
/// start; infeasible or failed cells are reported, not thrown.
std::vector<SsSweepCell> run_ss_sweep(const StochasticProgram& prog, const ScenarioSet& scen,
                                      double alpha, const std::vector<double>& rhos, double m1,
                                      double m2, const SolverOptions& solver,
                                      const std::optional<WarmStart>& start = std::nullopt);

/// rho = 100, 50, 25, ..., halving ten times in all (the last values rounded
/// to three significant digits).
std::vector<double> default_ss_grid();

}  // namespace sigvar
