#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <optional>
#include <string>

#include "sigvar/case_runner.hpp"
#include "sigvar/case_studies.hpp"
#include "sigvar/kernels.hpp"
#include "sigvar/risk_measures.hpp"
#include "sigvar/scenario.hpp"

namespace py = pybind11;
using namespace sigvar;

namespace {

SampleVector to_samples(const Eigen::VectorXd& v) { return SampleVector(std::vector<double>(v.begin(), v.end())); }

Eigen::VectorXd map_kernel(const Eigen::VectorXd& z, const std::function<double(double)>& f) {
  Eigen::VectorXd out(z.size());
  for (Eigen::Index i = 0; i < z.size(); ++i) out[i] = f(z[i]);
  return out;
}

py::dict meta_dict(const ScenarioMeta& m) {
  py::dict d;
  d["seed"] = m.seed ? py::cast(*m.seed) : py::none();
  d["distribution"] = m.distribution;
  d["created"] = m.created;
  return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Sigmoidal value-at-risk approximation of chance-constrained programs";

  // Kernels and parameter maps.
  m.def("bar_mu", &bar_mu, "Smallest admissible mu of the SigVaR kernel.");
  m.def(
      "sigvar_kernel",
      [](const Eigen::VectorXd& z, double mu, double tau) {
        const SigVaRParams p(mu, tau);
        return map_kernel(z, [&](double v) { return sigvar_kernel(v, p); });
      },
      py::arg("z"), py::arg("mu"), py::arg("tau"));
  m.def(
      "ss_kernel",
      [](const Eigen::VectorXd& z, double rho, double m1, double m2) {
        const SSParams p(rho, m1, m2);
        return map_kernel(z, [&](double v) { return ss_kernel(v, p); });
      },
      py::arg("z"), py::arg("rho"), py::arg("m1"), py::arg("m2"));
  m.def(
      "map_cvar_to_sigvar",
      [](double gamma, double mu) {
        const SigVaRParams p = map_cvar_to_sigvar(gamma, mu);
        return py::make_tuple(p.mu(), p.tau());
      },
      py::arg("gamma"), py::arg("mu"), "Returns (mu, tau).");
  m.def(
      "error_bound", [](double mu, double tau, double lipschitz) { return error_bound(SigVaRParams(mu, tau), lipschitz); },
      py::arg("mu"), py::arg("tau"), py::arg("lipschitz"));

  // Risk measures of a sample.
  m.def(
      "value_at_risk", [](const Eigen::VectorXd& z, double alpha) { return value_at_risk(to_samples(z), RiskLevel(alpha)); },
      py::arg("samples"), py::arg("alpha"));
  m.def(
      "conditional_value_at_risk",
      [](const Eigen::VectorXd& z, double alpha) {
        const CVaRResult r = conditional_value_at_risk(to_samples(z), RiskLevel(alpha));
        return py::make_tuple(r.value, r.t_star);
      },
      py::arg("samples"), py::arg("alpha"), "Returns (value, minimizing t).");
  m.def(
      "entropic_value_at_risk",
      [](const Eigen::VectorXd& z, double alpha) { return entropic_value_at_risk(to_samples(z), RiskLevel(alpha)); },
      py::arg("samples"), py::arg("alpha"));
  m.def(
      "sigmoidal_value_at_risk",
      [](const Eigen::VectorXd& z, double alpha, double mu, double tau) {
        const SigVaREstimate e = sigmoidal_value_at_risk(to_samples(z), RiskLevel(alpha), SigVaRParams(mu, tau));
        return py::make_tuple(e.value, e.vacuous);
      },
      py::arg("samples"), py::arg("alpha"), py::arg("mu"), py::arg("tau"), "Returns (value, vacuous).");
  m.def(
      "analytic_closed_forms",
      [](double alpha, double mu, double tau) {
        const AnalyticClosedForms cf = analytic_closed_forms(RiskLevel(alpha), SigVaRParams(mu, tau));
        py::dict d;
        d["var"] = cf.var;
        d["cvar"] = cf.cvar;
        d["evar"] = cf.evar;
        d["sigvar"] = cf.sigvar;
        return d;
      },
      py::arg("alpha"), py::arg("mu"), py::arg("tau"));

  // Scenarios.
  m.def(
      "generate_scenarios",
      [](const std::string& dist, std::size_t count, std::uint64_t seed) {
        return Eigen::MatrixXd(generate(DistributionSpec::parse(dist), count, seed).samples());
      },
      py::arg("distribution"), py::arg("count"), py::arg("seed"));
  m.def(
      "load_scenarios",
      [](const std::filesystem::path& path) {
        const ScenarioSet s = load(path);
        return py::make_tuple(Eigen::MatrixXd(s.samples()), meta_dict(s.meta()));
      },
      py::arg("path"), "Returns (samples, metadata).");

  // Case studies; the report is returned as its JSON text.
  m.def(
      "run_case_json",
      [](const std::string& problem, std::optional<std::filesystem::path> scenarios, std::optional<std::size_t> count,
         std::optional<std::uint64_t> seed, std::optional<double> alpha, std::optional<double> mu_target,
         bool ss_sweep) {
        CaseConfig cfg = CaseConfig::defaults(problem);
        cfg.scenarios = std::move(scenarios);
        if (count) cfg.count = *count;
        if (seed) cfg.seed = *seed;
        if (alpha) cfg.continuation.alpha = *alpha;
        if (mu_target) cfg.continuation.mu_target = *mu_target;
        cfg.ss_sweep = ss_sweep;
        CaseArtifacts a;
        {
          py::gil_scoped_release release;
          a = run_case(cfg);
        }
        return report_json(a).dump();
      },
      py::arg("problem"), py::arg("scenarios") = py::none(), py::arg("count") = py::none(),
      py::arg("seed") = py::none(), py::arg("alpha") = py::none(), py::arg("mu_target") = py::none(),
      py::arg("ss_sweep") = false);

  py::register_exception<ContinuationError>(m, "ContinuationError", PyExc_RuntimeError);
  py::register_exception<ScenarioIoError>(m, "ScenarioIoError", PyExc_OSError);
}
