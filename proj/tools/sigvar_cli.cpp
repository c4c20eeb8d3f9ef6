// Command-line front end: kernel tables, risk measures, scenario generation,
// the exact oracle, the continuation algorithm and the case studies.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <fmt/format.h>

#include "CLI11.hpp"
#include "json.hpp"
#include "sigvar/case_runner.hpp"
#include "sigvar/risk_measures.hpp"

using namespace sigvar;
using nlohmann::json;

namespace {

// Exit codes of sigvar-alg and case.
constexpr int kExitComplete = 0;
constexpr int kExitFatal = 1;
constexpr int kExitTruncated = 2;

void emit(const std::string& text, const std::string& out) {
  if (out.empty() || out == "-") {
    std::cout << text;
    return;
  }
  std::ofstream f(out);
  if (!f) throw std::runtime_error("cannot write " + out);
  f << text;
}

KernelSpec kernel_from(const std::string& kind, double mu, double tau, double rho, double m1, double m2,
                       double eps) {
  if (kind == "indicator") return kernel::Indicator{};
  if (kind == "cvar") return kernel::CVaR{};
  if (kind == "bernstein") return kernel::Bernstein{};
  if (kind == "sigmoid") return kernel::Sigmoid{SigVaRParams(mu, tau)};
  if (kind == "sigvar") return kernel::SigVaR{SigVaRParams(mu, tau)};
  if (kind == "ss") return kernel::SmoothSigmoid{SSParams(rho, m1, m2)};
  if (kind == "dc") return kernel::DC{DCParams(eps)};
  throw CLI::ValidationError("--kind", "unknown kernel '" + kind + "'");
}

/// Iteration log sink shared by every solve of a run.
struct IterationLog {
  std::optional<std::ofstream> file;
  void open(const std::string& path) {
    if (path.empty()) return;
    file.emplace(path);
    if (!*file) throw std::runtime_error("cannot write " + path);
    *file << iteration_csv_header() << '\n';
  }
  void attach(SolverOptions& o) {
    if (file) o.on_iteration = [this](const IterationRecord& r) { *file << iteration_csv_line(r) << '\n'; };
  }
};

void print_trace(const ContinuationTrace& trace) {
  fmt::print("{:>4} {:>10} {:>12} {:>16} {:>16} {:>10}  {}\n", "ell", "mu", "tau", "objective", "VaR(f)",
             "P(f<=thr)", "status");
  for (const auto& r : summarize(trace)) {
    fmt::print("{:>4} {:>10} {:>12} {:>16.6f} {:>16.6f} {:>10.4f}  {}\n", r.ell,
               r.mu ? fmt::format("{:.3f}", *r.mu) : "-", r.tau ? fmt::format("{:.5g}", *r.tau) : "-",
               r.objective, r.var_of_f, r.satisfaction_probability, r.status);
  }
  for (const auto& w : trace.warnings) fmt::print(stderr, "warning: {}\n", w);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"SigVaR approximation of chance-constrained programs"};
  app.require_subcommand(1);

  // kernels dump
  auto* kernels = app.add_subcommand("kernels", "Kernel tables");
  kernels->require_subcommand(1);
  auto* dump = kernels->add_subcommand("dump", "Tabulate a kernel on a uniform grid as CSV z,value");
  std::string kind = "sigvar", dump_out;
  double k_mu = 10.0, k_tau = 5.0, k_rho = 1.0, k_m1 = 1.0, k_m2 = 0.5, k_eps = 0.1;
  double z_from = -2.0, z_to = 2.0;
  std::size_t points = 401;
  dump->add_option("--kind", kind, "indicator|cvar|bernstein|sigmoid|sigvar|ss|dc")->capture_default_str();
  dump->add_option("--mu", k_mu)->capture_default_str();
  dump->add_option("--tau", k_tau)->capture_default_str();
  dump->add_option("--rho", k_rho)->capture_default_str();
  dump->add_option("--m1", k_m1)->capture_default_str();
  dump->add_option("--m2", k_m2)->capture_default_str();
  dump->add_option("--eps", k_eps)->capture_default_str();
  dump->add_option("--from", z_from)->capture_default_str();
  dump->add_option("--to", z_to)->capture_default_str();
  dump->add_option("--points", points)->check(CLI::Range(std::size_t{2}, std::size_t{10000000}))->capture_default_str();
  dump->add_option("--out", dump_out, "output file (default stdout)");

  // measures
  auto* measures = app.add_subcommand("measures", "VaR, CVaR, EVaR and SigVaR of a sample");
  std::string m_scen;
  std::size_t m_col = 0;
  double m_alpha = 0.05, m_mu = 10.0, m_tau = 5.0;
  measures->add_option("--scenarios", m_scen, "scenario CSV")->required()->check(CLI::ExistingFile);
  measures->add_option("--column", m_col, "column holding the loss samples")->capture_default_str();
  measures->add_option("--alpha", m_alpha)->capture_default_str();
  measures->add_option("--mu", m_mu)->capture_default_str();
  measures->add_option("--tau", m_tau)->capture_default_str();

  // scenario gen
  auto* scenario = app.add_subcommand("scenario", "Scenario sets");
  scenario->require_subcommand(1);
  auto* gen = scenario->add_subcommand("gen", "Generate a reproducible scenario set (CSV + JSON sidecar)");
  std::string g_dist, g_out;
  std::size_t g_count = 1000;
  std::uint64_t g_seed = 0;
  gen->add_option("--dist", g_dist, "e.g. uniform:0:1, normal:20:5, exponential:21000")->required();
  gen->add_option("--count", g_count)->capture_default_str();
  gen->add_option("--seed", g_seed)->capture_default_str();
  gen->add_option("--out", g_out, "CSV path")->required();

  // shared problem options
  std::string problem, scen_path, coeff_path, out_dir, iter_log;
  double alpha = -1.0;
  auto add_problem = [&](CLI::App* sub) {
    sub->add_option("--problem", problem, "analytic|farmer|flare")->required();
    sub->add_option("--scenarios", scen_path, "scenario CSV")->required()->check(CLI::ExistingFile);
    sub->add_option("--coefficients", coeff_path, "coefficient file")->check(CLI::ExistingFile);
    sub->add_option("--alpha", alpha)->required();
  };

  // oracle
  auto* oracle = app.add_subcommand("oracle", "Exact SAA chance-constrained optimum by subset enumeration");
  add_problem(oracle);
  double max_subsets = 1e6;
  std::string oracle_out, oracle_log;
  oracle->add_option("--max-subsets", max_subsets)->capture_default_str();
  oracle->add_option("--out", oracle_out, "JSON result (default stdout)");
  oracle->add_option("--subset-log", oracle_log, "CSV of every subproblem");

  // sigvar-alg
  auto* alg = app.add_subcommand("sigvar-alg", "CVaR start followed by SigVaR continuation");
  add_problem(alg);
  double lambda = 2.0, mu_target = 320.0;
  bool hard_fail = false;
  alg->add_option("--lambda", lambda)->capture_default_str();
  alg->add_option("--mu-target", mu_target)->capture_default_str();
  alg->add_flag("--stop-on-failure", hard_fail, "treat a failed continuation solve as fatal");
  alg->add_option("--out", out_dir, "directory for trace.csv and summary.json")->required();
  alg->add_option("--iteration-log", iter_log, "solver iteration log CSV");

  // case
  auto* cs = app.add_subcommand("case", "Run a shipped case study end to end");
  std::string case_name;
  std::optional<double> c_alpha, c_mu_target, c_lambda;
  std::optional<std::uint64_t> c_seed;
  std::optional<std::size_t> c_count;
  bool ss_sweep = false, with_oracle = false;
  cs->add_option("name", case_name, "analytic|farmer|flare")->required()->check(CLI::IsMember({"analytic", "farmer", "flare"}));
  cs->add_option("--alpha", c_alpha);
  cs->add_option("--scenarios", scen_path, "scenario CSV (default: regenerate the shipped set)")->check(CLI::ExistingFile);
  cs->add_option("--count", c_count, "scenario count when generating");
  cs->add_option("--seed", c_seed, "seed when generating");
  cs->add_option("--coefficients", coeff_path)->check(CLI::ExistingFile);
  cs->add_option("--mu-target", c_mu_target);
  cs->add_option("--lambda", c_lambda);
  cs->add_flag("--ss-sweep", ss_sweep, "also solve the smoothed-sigmoid approximation over the rho grid");
  cs->add_flag("--oracle", with_oracle, "also cross-check against the exact oracle on a small set");
  cs->add_option("--out", out_dir, "report directory")->required();
  cs->add_option("--iteration-log", iter_log, "solver iteration log CSV");

  CLI11_PARSE(app, argc, argv);

  try {
    if (dump->parsed()) {
      const KernelSpec k = kernel_from(kind, k_mu, k_tau, k_rho, k_m1, k_m2, k_eps);
      std::string text = "z,value\n";
      for (std::size_t i = 0; i < points; ++i) {
        const double z = z_from + (z_to - z_from) * static_cast<double>(i) / static_cast<double>(points - 1);
        text += fmt::format("{:.17g},{:.17g}\n", z, eval_kernel(k, z));
      }
      emit(text, dump_out);
      return 0;
    }

    if (measures->parsed()) {
      const ScenarioSet set = load(m_scen);
      if (m_col >= set.dim()) throw std::invalid_argument("--column beyond the scenario dimension");
      std::vector<double> v(set.size());
      for (std::size_t i = 0; i < set.size(); ++i) v[i] = set.row(i)[m_col];
      const SampleVector s(std::move(v));
      const RiskLevel a(m_alpha);
      const auto cv = conditional_value_at_risk(s, a);
      const auto sv = sigmoidal_value_at_risk(s, a, SigVaRParams(m_mu, m_tau));
      json out = {{"alpha", m_alpha},       {"var", value_at_risk(s, a)},
                  {"cvar", cv.value},       {"cvar_t", cv.t_star},
                  {"evar", entropic_value_at_risk(s, a)},
                  {"sigvar", sv.value},     {"sigvar_vacuous", sv.vacuous},
                  {"mu", m_mu},             {"tau", m_tau}};
      std::cout << out.dump(2) << '\n';
      return 0;
    }

    if (gen->parsed()) {
      save(generate(DistributionSpec::parse(g_dist), g_count, g_seed), g_out);
      return 0;
    }

    const std::optional<std::filesystem::path> coeffs =
        coeff_path.empty() ? std::nullopt : std::optional<std::filesystem::path>(coeff_path);
    IterationLog log;
    log.open(iter_log);

    if (oracle->parsed()) {
      const ScenarioSet set = load(scen_path);
      const StochasticProgram prog = build_program(problem, set, coeffs);
      OracleOptions opts;
      opts.max_subsets = max_subsets;
      const OracleResult r = solve_exact(prog, set, RiskLevel(alpha), opts);
      json out = {{"problem", problem},
                  {"alpha", alpha},
                  {"objective", r.objective},
                  {"x", std::vector<double>(r.x.data(), r.x.data() + r.x.size())},
                  {"exempt", r.exempt},
                  {"subproblems", r.subproblems}};
      emit(out.dump(2) + "\n", oracle_out);
      if (!oracle_log.empty()) {
        std::ofstream f(oracle_log);
        f << "subset,status,objective\n";
        for (const auto& e : r.log) {
          f << fmt::format("{},{},{:.17g}\n", fmt::join(e.exempt, " "), to_string(e.status), e.objective);
        }
      }
      return 0;
    }

    if (alg->parsed()) {
      const ScenarioSet set = load(scen_path);
      const StochasticProgram prog = build_program(problem, set, coeffs);
      ContinuationOptions opts;
      opts.alpha = alpha;
      opts.lambda = lambda;
      opts.mu_target = mu_target;
      opts.stop_on_failure = hard_fail;
      log.attach(opts.solver);
      const ContinuationTrace trace = run_continuation(prog, set, opts);
      std::filesystem::create_directories(out_dir);
      write_trace_csv(trace, std::filesystem::path(out_dir) / "trace.csv");
      const auto& fin = trace.final_record();
      json summary = {{"problem", problem},
                      {"alpha", alpha},
                      {"gamma", trace.gamma},
                      {"truncated", trace.truncated},
                      {"final_ell", fin.ell},
                      {"final_objective", fin.objective},
                      {"final_prob_satisfied", 1.0 - fin.violation_probability},
                      {"warnings", trace.warnings}};
      write_json(summary, std::filesystem::path(out_dir) / "summary.json");
      print_trace(trace);
      return trace.truncated ? kExitTruncated : kExitComplete;
    }

    if (cs->parsed()) {
      CaseConfig cfg = CaseConfig::defaults(case_name);
      if (c_alpha) cfg.continuation.alpha = *c_alpha;
      if (c_mu_target) cfg.continuation.mu_target = *c_mu_target;
      if (c_lambda) cfg.continuation.lambda = *c_lambda;
      if (c_seed) cfg.seed = *c_seed;
      if (c_count) cfg.count = *c_count;
      if (!scen_path.empty()) cfg.scenarios = scen_path;
      cfg.coefficients = coeffs;
      cfg.ss_sweep = ss_sweep;
      if (with_oracle) cfg.oracle_check = OracleCheck{};
      log.attach(cfg.continuation.solver);
      const CaseArtifacts art = run_case(cfg);
      write_report(art, out_dir);
      print_trace(art.trace);
      if (art.ss_sweep) {
        fmt::print("\n{:>8} {:>10} {:>16}  {}\n", "rho", "P(f<=thr)", "objective", "status");
        for (const auto& c : *art.ss_sweep) {
          fmt::print("{:>8} {:>10.4f} {:>16.6f}  {}\n", c.rho, c.satisfaction_probability, c.objective,
                     to_string(c.status));
        }
      }
      return art.trace.truncated ? kExitTruncated : kExitComplete;
    }
  } catch (const std::exception& e) {
    fmt::print(stderr, "error: {}\n", e.what());
    return kExitFatal;
  }
  return 0;
}
