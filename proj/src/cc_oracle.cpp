#include "sigvar/cc_oracle.hpp"

#include <cmath>
#include <limits>
#include <memory>
#include <tuple>

#include <fmt/format.h>

namespace sigvar {

OracleLimitError::OracleLimitError(double count, double limit)
    : std::invalid_argument(fmt::format(
          "exhaustive oracle needs {:.6g} subproblems, above the limit of {:.6g}", count, limit)),
      count_(count) {}

void OracleOptions::validate() const {
  if (!(max_subsets >= 1.0)) throw std::invalid_argument("OracleOptions: max_subsets must be >= 1");
  solver.validate();
}

double subset_count(std::size_t S, std::size_t k) {
  if (k > S) return 0.0;
  k = std::min(k, S - k);
  double c = 1.0;
  for (std::size_t i = 1; i <= k; ++i) c = c * static_cast<double>(S - k + i) / static_cast<double>(i);
  return std::round(c);
}

namespace {

/// Advances a strictly increasing index combination in lexicographic order.
bool next_combination(std::vector<std::size_t>& c, std::size_t S) {
  const std::size_t k = c.size();
  for (std::size_t i = k; i-- > 0;) {
    if (c[i] < S - k + i) {
      ++c[i];
      for (std::size_t j = i + 1; j < k; ++j) c[j] = c[j - 1] + 1;
      return true;
    }
  }
  return false;
}

}  // namespace

OracleResult solve_exact(const StochasticProgram& prog, const ScenarioSet& scen, const RiskLevel& a,
                         const OracleOptions& opts) {
  opts.validate();
  const std::size_t S = scen.size();
  const auto k = static_cast<std::size_t>(std::floor(a.alpha() * static_cast<double>(S) + 1e-9));
  const double count = subset_count(S, k);
  if (count > opts.max_subsets) throw OracleLimitError(count, opts.max_subsets);

  OracleResult out;
  out.objective = std::numeric_limits<double>::infinity();
  std::vector<std::size_t> subset(k);
  for (std::size_t i = 0; i < k; ++i) subset[i] = i;
  do {
    const SmoothNLP nlp = build_restricted(prog, scen, subset);
    const SolveReport rep = solve(nlp, nlp.start, opts.solver);
    ++out.subproblems;
    OracleSubproblem entry{subset, rep.status, rep.objective};
    // Strict improvement keeps the lexicographically first subset on ties.
    if (rep.status == SolveStatus::Optimal && rep.objective < out.objective) {
      const SaaSolution sol = extract_solution(nlp, rep.x);
      out.objective = rep.objective;
      out.x = sol.x;
      out.y = sol.y;
      out.exempt = subset;
    }
    out.log.push_back(std::move(entry));
  } while (next_combination(subset, S));

  if (!std::isfinite(out.objective)) {
    throw OracleInfeasibleError(
        fmt::format("none of the {} exempt subsets of size {} gave an optimal subproblem",
                    out.subproblems, k));
  }
  return out;
}

namespace {

/// min_y f(x, y, xi) s.t. h(x, y, xi) >= 0, y in bounds, for fixed x.
SmoothNLP recourse_problem(const StochasticProgram& prog, const Vec& x, Xi xi) {
  const Index n2 = prog.n2;
  const Index m = prog.m_rec;
  SmoothNLP nlp;
  nlp.name = prog.name + "-recourse";
  nlp.layout.add("y", n2);
  nlp.lower = prog.y_lower;
  nlp.upper = prog.y_upper;
  nlp.scale = prog.y_scale;
  nlp.start = prog.y_start.cwiseMax(prog.y_lower).cwiseMin(prog.y_upper);
  nlp.m_eq = 0;
  nlp.m_in = m;
  nlp.jac_eq_pattern = SparseRM(0, n2);
  SparseRM pattern(m, n2);
  pattern.reserve(m * n2);
  for (Index r = 0; r < m; ++r) {
    pattern.startVec(r);
    for (Index c = 0; c < n2; ++c) pattern.insertBack(r, c) = 0.0;
  }
  pattern.finalize();
  nlp.jac_in_pattern = pattern;
  auto data = std::make_shared<const std::tuple<StochasticProgram, Vec, std::vector<double>>>(
      prog, x, std::vector<double>(xi.begin(), xi.end()));
  nlp.objective = [data](VecCRef y, Vec* grad) {
    const auto& [p, xf, xv] = *data;
    Vec gx(p.n1), gy(p.n2);
    const double v = p.cc_function(xf, y, Xi(xv), gx, gy);
    if (grad) *grad = gy;
    return v;
  };
  nlp.constraints = [data](VecCRef y, VecRef, VecRef c_in, SparseRM*, SparseRM* jin) {
    const auto& [p, xf, xv] = *data;
    Mat jx(p.m_rec, p.n1), jy(p.m_rec, p.n2);
    p.recourse_constraints(xf, y, Xi(xv), c_in, jx, jy);
    if (jin) {
      for (Index r = 0; r < p.m_rec; ++r) {
        for (SparseRM::InnerIterator it(*jin, r); it; ++it) it.valueRef() = jy(r, it.col());
      }
    }
  };
  return nlp;
}

}  // namespace

CandidateCheck verify_candidate(const StochasticProgram& prog, const ScenarioSet& scen,
                                const RiskLevel& a, const Vec& x, const SolverOptions& solver) {
  prog.validate();
  if (x.size() != prog.n1) {
    throw ProblemDimensionError(fmt::format("candidate has size {}, program has n1 = {}", x.size(), prog.n1));
  }
  if ((x.array() < prog.x_lower.array()).any() || (x.array() > prog.x_upper.array()).any()) {
    throw std::invalid_argument("candidate lies outside the first-stage bounds");
  }
  const std::size_t S = scen.size();
  CandidateCheck out;
  Vec gx(prog.n1), gy(prog.n2);
  for (std::size_t s = 0; s < S; ++s) {
    double f = 0.0;
    if (prog.n2 == 0) {
      try {
        f = prog.cc_function(x, Vec(0), scen.row(s), gx, gy);
      } catch (const EvaluationError& err) {
        out.failures.push_back({s, err.what()});
        ++out.violation_count;
        continue;
      }
    } else {
      const SmoothNLP nlp = recourse_problem(prog, x, scen.row(s));
      const SolveReport rep = solve(nlp, nlp.start, solver);
      if (rep.status != SolveStatus::Optimal) {
        out.failures.push_back({s, fmt::format("recourse {}: {}", to_string(rep.status), rep.message)});
        ++out.violation_count;
        continue;
      }
      f = rep.objective;
    }
    // Points returned by the solver sit on f = 0 up to its feasibility tolerance.
    if (f > 1e-6 * prog.cc_scale) ++out.violation_count;
  }
  out.empirical_probability = 1.0 - static_cast<double>(out.violation_count) / static_cast<double>(S);
  const auto k = static_cast<std::size_t>(std::floor(a.alpha() * static_cast<double>(S) + 1e-9));
  out.feasible = out.violation_count <= k;
  return out;
}

}  // namespace sigvar
