#include "sigvar/continuation.hpp"

#include <cmath>

#include <fmt/format.h>

#include "sigvar/numeric.hpp"
#include "sigvar/risk_measures.hpp"

namespace sigvar {

void ContinuationOptions::validate() const {
  if (!(lambda > 1.0)) throw std::invalid_argument(fmt::format("lambda must exceed 1, got {}", lambda));
  if (!(mu_target >= bar_mu())) {
    throw std::invalid_argument(
        fmt::format("mu_target {} is below the smallest admissible mu {:.6f}", mu_target, bar_mu()));
  }
  RiskLevel{alpha};
  solver.validate();
}

const ContinuationRecord& ContinuationTrace::final_record() const {
  for (auto it = records.rbegin(); it != records.rend(); ++it) {
    if (it->status == SolveStatus::Optimal) return *it;
  }
  throw ContinuationError("continuation trace holds no successful solve");
}

EmpiricalCc empirical_cc(const StochasticProgram& prog, const ScenarioSet& scen, const Vec& x,
                         const Mat& y, double alpha) {
  const Vec f = evaluate_cc(prog, scen, x, y);
  const SampleVector samples(std::vector<double>(f.data(), f.data() + f.size()));
  EmpiricalCc out;
  out.var_of_f = value_at_risk(samples, RiskLevel(alpha)) + prog.cc_report_offset;
  out.violation_probability = violation_probability(samples);
  return out;
}

namespace {

ContinuationRecord record_solve(int ell, const StochasticProgram& prog, const ScenarioSet& scen,
                                const SmoothNLP& nlp, const SolveReport& rep, double alpha) {
  ContinuationRecord rec;
  rec.ell = ell;
  rec.status = rep.status;
  rec.kkt = rep.kkt;
  rec.outer_iterations = rep.outer_iterations;
  rec.inner_iterations = rep.inner_iterations;
  rec.wall_time = rep.wall_time;
  rec.message = rep.message;
  const SaaSolution sol = extract_solution(nlp, rep.x);
  rec.x = sol.x;
  rec.y = sol.y;
  rec.objective = evaluate_objective(prog, scen, sol.x, sol.y);
  const EmpiricalCc cc = empirical_cc(prog, scen, sol.x, sol.y, alpha);
  rec.var_of_f = cc.var_of_f;
  rec.violation_probability = cc.violation_probability;
  return rec;
}

}  // namespace

ContinuationTrace run_continuation(const StochasticProgram& prog, const ScenarioSet& scen,
                                   const ContinuationOptions& opts) {
  opts.validate();
  const RiskLevel level(opts.alpha);
  ContinuationTrace trace;
  trace.alpha = opts.alpha;
  trace.lambda = opts.lambda;
  trace.mu_target = opts.mu_target;
  trace.report_offset = prog.cc_report_offset;

  // Stage 0: CVaR approximation; its minimizer t_c fixes the slope gamma.
  const SmoothNLP cvar = build_cvar_saa(prog, scen, level);
  const SolveReport cvar_rep = solve(cvar, cvar.start, opts.solver);
  if (cvar_rep.status != SolveStatus::Optimal) {
    throw ContinuationError(fmt::format("CVaR stage ended {}: {}", to_string(cvar_rep.status),
                                        cvar_rep.message));
  }
  trace.records.push_back(record_solve(0, prog, scen, cvar, cvar_rep, opts.alpha));
  const double t_c = *extract_solution(cvar, cvar_rep.x).t;
  if (t_c >= -1e-8) {
    throw ContinuationError(fmt::format(
        "CVaR minimizer t_c = {} is not negative; gamma = -1/t_c is undefined", t_c));
  }
  trace.gamma = -1.0 / t_c;

  // The CVaR point must satisfy the first SigVaR constraint.
  {
    const SigVaRParams p1 = map_cvar_to_sigvar(trace.gamma, bar_mu());
    const Vec f = evaluate_cc(prog, scen, trace.records[0].x, trace.records[0].y);
    const auto n = static_cast<std::size_t>(f.size());
    const double mean =
        pairwise_sum(n, [&](std::size_t s) { return sigvar_kernel(f[static_cast<Index>(s)], p1); }) /
        static_cast<double>(n);
    trace.handoff_margin = opts.alpha - mean;
    if (trace.handoff_margin < -1e-6) {
      trace.warnings.push_back(fmt::format(
          "CVaR point violates the first SigVaR constraint by {:.3e}", -trace.handoff_margin));
    }
  }

  WarmStart warm{trace.records[0].x, trace.records[0].y};
  double mu = bar_mu();
  // Multipliers carry over between SigVaR steps (same rows, same layout); the
  // CVaR stage has a different row set, so the first step starts without.
  std::optional<MultiplierGuess> guess;
  for (int ell = 1;; ++ell) {
    const SigVaRParams p = map_cvar_to_sigvar(trace.gamma, mu);
    const SmoothNLP nlp = build_sigvar_saa(prog, scen, p, level, warm);
    const SolveReport rep = solve(nlp, nlp.start, opts.solver, guess);
    ContinuationRecord rec = record_solve(ell, prog, scen, nlp, rep, opts.alpha);
    rec.mu = mu;
    rec.tau = p.tau();
    if (rep.status != SolveStatus::Optimal) {
      if (opts.stop_on_failure) {
        throw ContinuationError(fmt::format("iteration {} (mu = {}) ended {}: {}", ell, mu,
                                            to_string(rep.status), rep.message));
      }
      trace.warnings.push_back(fmt::format("iteration {} (mu = {}) ended {}; keeping iteration {}",
                                           ell, mu, to_string(rep.status),
                                           trace.final_record().ell));
      trace.records.push_back(std::move(rec));
      trace.truncated = true;
      break;
    }
    const ContinuationRecord& prev = trace.final_record();
    if (rec.objective > prev.objective + 1e-6 * (1.0 + std::abs(prev.objective))) {
      trace.warnings.push_back(fmt::format("objective rose from {} to {} at iteration {}",
                                           prev.objective, rec.objective, ell));
    }
    warm = WarmStart{rec.x, rec.y};
    guess = MultiplierGuess{rep.lambda_eq, rep.lambda_in};
    trace.records.push_back(std::move(rec));
    if (mu >= opts.mu_target) break;
    mu *= opts.lambda;
  }
  return trace;
}

std::vector<SummaryRow> summarize(const ContinuationTrace& trace) {
  if (trace.records.empty()) throw std::invalid_argument("cannot summarize an empty trace");
  std::vector<SummaryRow> rows;
  rows.reserve(trace.records.size());
  for (const auto& r : trace.records) {
    SummaryRow row;
    row.ell = r.ell;
    row.mu = r.mu;
    row.tau = r.tau;
    row.objective = r.objective;
    row.var_of_f = r.var_of_f;
    row.satisfaction_probability = 1.0 - r.violation_probability;
    row.status = to_string(r.status);
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace sigvar

namespace sigvar {

std::vector<double> default_ss_grid() {
  return {100.0, 50.0, 25.0, 12.5, 6.25, 3.125, 1.563, 0.781, 0.39, 0.195};
}

std::vector<SsSweepCell> run_ss_sweep(const StochasticProgram& prog, const ScenarioSet& scen,
                                      double alpha, const std::vector<double>& rhos, double m1,
                                      double m2, const SolverOptions& solver,
                                      const std::optional<WarmStart>& start) {
  const RiskLevel level(alpha);
  std::vector<SsSweepCell> cells;
  cells.reserve(rhos.size());
  for (double rho : rhos) {
    const SSParams p(rho, m1, m2);
    const SigVaRParams mapped = map_ss_to_sigvar(p);
    SsSweepCell cell;
    cell.rho = rho;
    cell.mu = mapped.mu();
    cell.tau = mapped.tau();
    const SmoothNLP nlp = build_smooth_sigmoid_saa(prog, scen, p, level, start);
    const SolveReport rep = solve(nlp, nlp.start, solver);
    cell.status = rep.status;
    cell.message = rep.message;
    const SaaSolution sol = extract_solution(nlp, rep.x);
    cell.objective = evaluate_objective(prog, scen, sol.x, sol.y);
    cell.satisfaction_probability =
        1.0 - empirical_cc(prog, scen, sol.x, sol.y, alpha).violation_probability;
    cells.push_back(std::move(cell));
  }
  return cells;
}

}  // namespace sigvar
