#include "sigvar/case_runner.hpp"

#include <fmt/format.h>

namespace sigvar {

CaseConfig CaseConfig::defaults(const std::string& problem) {
  CaseConfig c;
  c.problem = problem;
  if (problem == "analytic") {
    c.distribution = "uniform:0:1";
    c.count = 1000;
    c.seed = 42;
    c.continuation.alpha = 0.5;
  } else if (problem == "farmer") {
    c.distribution = FarmerCoefficients{}.yield_distribution();
    c.count = 1000;
    c.seed = 12;
    c.continuation.alpha = 0.05;
  } else if (problem == "flare") {
    c.distribution = FlareCoefficients{}.flow_distribution();
    c.count = 2000;
    c.seed = 5;
    c.continuation.alpha = 0.05;
  } else {
    throw std::invalid_argument(fmt::format("unknown problem '{}' (analytic, farmer, flare)", problem));
  }
  return c;
}

StochasticProgram build_program(const std::string& problem, const ScenarioSet& scen,
                                const std::optional<std::filesystem::path>& coefficients) {
  if (problem == "analytic") {
    if (coefficients) throw std::invalid_argument("the analytic example takes no coefficient file");
    if (scen.dim() != 1) throw ProblemDimensionError("analytic scenarios must be one-dimensional");
    return analytic_program();
  }
  if (problem == "farmer") {
    return farmer_build(coefficients ? FarmerCoefficients::from_file(*coefficients) : FarmerCoefficients{},
                        scen);
  }
  if (problem == "flare") {
    return flare_build(coefficients ? FlareCoefficients::from_file(*coefficients) : FlareCoefficients{},
                       scen);
  }
  throw std::invalid_argument(fmt::format("unknown problem '{}' (analytic, farmer, flare)", problem));
}

ScenarioSet case_scenarios(const CaseConfig& cfg) {
  if (cfg.scenarios) return load(*cfg.scenarios);
  return generate(DistributionSpec::parse(cfg.distribution), cfg.count, cfg.seed);
}

namespace {

Vec reported_f(const StochasticProgram& prog, const ScenarioSet& scen, const ContinuationRecord& r) {
  return evaluate_cc(prog, scen, r.x, r.y).array() + prog.cc_report_offset;
}

}  // namespace

CaseArtifacts run_case(const CaseConfig& cfg) {
  const ScenarioSet scen = case_scenarios(cfg);
  const StochasticProgram prog = build_program(cfg.problem, scen, cfg.coefficients);

  CaseArtifacts a;
  a.problem = cfg.problem;
  a.scenario_meta = scen.meta();
  a.scenario_count = scen.size();
  a.threshold = prog.cc_report_offset;
  a.cc_quantity = cfg.problem == "analytic" ? "xi - x" : cfg.problem == "farmer" ? "cost" : "radiation";
  a.trace = run_continuation(prog, scen, cfg.continuation);
  a.f_cvar = reported_f(prog, scen, a.trace.records.front());
  a.f_final = reported_f(prog, scen, a.trace.final_record());

  if (cfg.problem == "analytic") {
    const ContinuationRecord& fin = a.trace.final_record();
    const RiskLevel level(cfg.continuation.alpha);
    const AnalyticClosedForms cf =
        analytic_closed_forms(level, SigVaRParams(fin.mu.value_or(bar_mu()), fin.tau.value_or(1.0)));
    a.reference = {{"var", cf.var}, {"cvar", cf.cvar}, {"evar", cf.evar}, {"sigvar_final_params", cf.sigvar}};
  }

  if (cfg.ss_sweep) {
    const ContinuationRecord& c0 = a.trace.records.front();
    a.ss_sweep = run_ss_sweep(prog, scen, cfg.continuation.alpha, default_ss_grid(), 1.0, 0.5,
                              cfg.continuation.solver, WarmStart{c0.x, c0.y});
  }

  if (cfg.oracle_check) {
    const OracleCheck& oc = *cfg.oracle_check;
    const ScenarioSet small = generate(DistributionSpec::parse(cfg.distribution), oc.count, oc.seed);
    const StochasticProgram small_prog = build_program(cfg.problem, small, cfg.coefficients);
    a.oracle = solve_exact(small_prog, small, RiskLevel(oc.alpha), oc.oracle);
    ContinuationOptions co = cfg.continuation;
    co.alpha = oc.alpha;
    const ContinuationTrace small_trace = run_continuation(small_prog, small, co);
    a.reference["oracle_check_alpha"] = oc.alpha;
    a.reference["oracle_check_scenarios"] = static_cast<double>(oc.count);
    a.reference["oracle_check_continuation_final"] = small_trace.final_record().objective;
    a.reference["oracle_check_cvar"] = small_trace.records.front().objective;
  }
  return a;
}

}  // namespace sigvar
