#include <gtest/gtest.h>

#include <cmath>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "sigvar/case_studies.hpp"
#include "sigvar/nlp_solver.hpp"
#include "sigvar/risk_measures.hpp"
#include "test_support.hpp"

namespace sigvar {
namespace {

using ObjectiveFn = std::function<double(const Vec& x, Vec& grad)>;
using ConstraintFn = std::function<void(const Vec& x, Vec& c, Mat& jac)>;

SparseRM dense_pattern(Index rows, Index cols) {
  SparseRM J(rows, cols);
  J.reserve(rows * cols);
  for (Index i = 0; i < rows; ++i) {
    J.startVec(i);
    for (Index j = 0; j < cols; ++j) J.insertBack(i, j);
  }
  J.finalize();
  return J;
}

void fill_dense(SparseRM* J, const Mat& jac) {
  if (!J) return;
  double* val = J->valuePtr();
  for (Index i = 0; i < jac.rows(); ++i) {
    for (Index j = 0; j < jac.cols(); ++j) *val++ = jac(i, j);
  }
}

/// A small NLP with dense Jacobians; every column is its own Hessian group
/// unless `curvature` is false.
SmoothNLP dense_nlp(Index n, Index m_eq, Index m_in, ObjectiveFn f, ConstraintFn ceq, ConstraintFn cin,
                    double box = 1e3, bool curvature = true) {
  SmoothNLP nlp;
  nlp.name = "hand";
  nlp.layout.add("x", n);
  nlp.lower = Vec::Constant(n, -box);
  nlp.upper = Vec::Constant(n, box);
  nlp.scale = Vec::Ones(n);
  nlp.start = Vec::Zero(n);
  nlp.m_eq = m_eq;
  nlp.m_in = m_in;
  nlp.jac_eq_pattern = dense_pattern(m_eq, n);
  nlp.jac_in_pattern = dense_pattern(m_in, n);
  nlp.objective = [f, n](VecCRef x, Vec* grad) {
    Vec g(n);
    const double v = f(Vec(x), g);
    if (grad) *grad = g;
    return v;
  };
  nlp.constraints = [=](VecCRef x, VecRef c_eq, VecRef c_in, SparseRM* J_eq, SparseRM* J_in) {
    Vec c;
    Mat jac;
    if (m_eq > 0) {
      c.resize(m_eq);
      jac.resize(m_eq, n);
      ceq(Vec(x), c, jac);
      c_eq = c;
      fill_dense(J_eq, jac);
    }
    if (m_in > 0) {
      c.resize(m_in);
      jac.resize(m_in, n);
      cin(Vec(x), c, jac);
      c_in = c;
      fill_dense(J_in, jac);
    }
  };
  if (curvature) {
    for (Index j = 0; j < n; ++j) {
      HessianGroup g;
      g.columns = {j};
      for (Index i = j; i < n; ++i) g.entries.emplace_back(i, j);
      nlp.hessian_groups.push_back(std::move(g));
    }
  }
  return nlp;
}

const ConstraintFn kNone = [](const Vec&, Vec&, Mat&) {};

/// min (x - 1)^2 s.t. x - 2 >= 0.
SmoothNLP shifted_square(bool curvature = true) {
  return dense_nlp(
      1, 0, 1,
      [](const Vec& x, Vec& g) {
        g[0] = 2.0 * (x[0] - 1.0);
        return (x[0] - 1.0) * (x[0] - 1.0);
      },
      kNone,
      [](const Vec& x, Vec& c, Mat& J) {
        c[0] = x[0] - 2.0;
        J(0, 0) = 1.0;
      },
      1e3, curvature);
}

/// Rosenbrock inside the unit disc.
SmoothNLP rosenbrock_disc() {
  return dense_nlp(
      2, 0, 1,
      [](const Vec& x, Vec& g) {
        const double a = 1.0 - x[0];
        const double b = x[1] - x[0] * x[0];
        g[0] = -2.0 * a - 400.0 * x[0] * b;
        g[1] = 200.0 * b;
        return a * a + 100.0 * b * b;
      },
      kNone,
      [](const Vec& x, Vec& c, Mat& J) {
        c[0] = 1.0 - x.squaredNorm();
        J(0, 0) = -2.0 * x[0];
        J(0, 1) = -2.0 * x[1];
      },
      2.0);
}

struct EqualityQp {
  Mat Q;
  Vec c;
  Mat A;
  Vec b;
};

EqualityQp qp_data() {
  EqualityQp d;
  d.Q.resize(3, 3);
  d.Q << 4.0, 1.0, 0.0, 1.0, 3.0, -1.0, 0.0, -1.0, 2.0;
  d.c.resize(3);
  d.c << -1.0, 2.0, 0.5;
  d.A.resize(2, 3);
  d.A << 1.0, 1.0, 1.0, 1.0, -2.0, 0.5;
  d.b.resize(2);
  d.b << 1.0, -0.5;
  return d;
}

SmoothNLP equality_qp(const EqualityQp& d) {
  return dense_nlp(
      3, 2, 0,
      [d](const Vec& x, Vec& g) {
        g = d.Q * x + d.c;
        return 0.5 * x.dot(d.Q * x) + d.c.dot(x);
      },
      [d](const Vec& x, Vec& c, Mat& J) {
        c = d.A * x - d.b;
        J = d.A;
      },
      kNone);
}

TEST(SolverOptions, Validation) {
  SolverOptions o;
  EXPECT_NO_THROW(o.validate());
  o.kkt_tol = 0.0;
  EXPECT_THROW(o.validate(), std::invalid_argument);
  o = {};
  o.penalty_growth = 1.0;
  EXPECT_THROW(o.validate(), std::invalid_argument);
  o = {};
  o.multistart_count = 0;
  EXPECT_THROW(o.validate(), std::invalid_argument);
  o = {};
  o.max_inner = 0;
  EXPECT_THROW(solve(shifted_square(), Vec::Zero(1), o), std::invalid_argument);
  EXPECT_THROW(solve(shifted_square(), Vec::Zero(2)), ProblemDimensionError);
}

TEST(Solve, ShiftedSquareWithBothInnerMethods) {
  for (InnerMethod m : {InnerMethod::Newton, InnerMethod::QuasiNewton}) {
    SolverOptions o;
    o.inner_method = m;
    const SolveReport r = solve(shifted_square(), Vec::Zero(1), o);
    ASSERT_EQ(r.status, SolveStatus::Optimal) << r.message;
    // Feasibility is only enforced to kkt_tol, so x may sit 1e-6 below 2.
    EXPECT_NEAR(r.x[0], 2.0, 1e-6);
    EXPECT_NEAR(r.objective, 1.0, 2e-6 + 1e-12);
    // 2 (x - 1) - lambda = 0 at x = 2.
    EXPECT_NEAR(r.lambda_in[0], 2.0, 1e-5);
    EXPECT_LE(r.kkt.max(), 1e-6);
    EXPECT_EQ(r.merit_increases, 0);
  }
}

TEST(Solve, EqualityQpMatchesKktSystem) {
  const EqualityQp d = qp_data();
  // [Q A'; A 0] [x; lambda] = [-c; b]
  Mat K = Mat::Zero(5, 5);
  K.topLeftCorner(3, 3) = d.Q;
  K.topRightCorner(3, 2) = d.A.transpose();
  K.bottomLeftCorner(2, 3) = d.A;
  Vec rhs(5);
  rhs << -d.c, d.b;
  const Vec sol = K.fullPivLu().solve(rhs);

  SolverOptions o;
  o.kkt_tol = 1e-10;
  const SolveReport r = solve(equality_qp(d), Vec::Zero(3), o);
  ASSERT_EQ(r.status, SolveStatus::Optimal) << r.message;
  EXPECT_LE((r.x - sol.head(3)).lpNorm<Eigen::Infinity>(), 1e-8);
  EXPECT_LE((r.lambda_eq - sol.tail(2)).lpNorm<Eigen::Infinity>(), 1e-7);
}

TEST(Solve, RosenbrockInDisc) {
  const SolveReport r = solve(rosenbrock_disc(), Vec::Zero(2));
  ASSERT_EQ(r.status, SolveStatus::Optimal) << r.message;
  EXPECT_NEAR(r.x[0], 0.7864, 1e-3);
  EXPECT_NEAR(r.x[1], 0.6177, 1e-3);
  EXPECT_NEAR(r.objective, 0.0456748, 1e-5);
  EXPECT_NEAR(r.x.squaredNorm(), 1.0, 1e-6);
}

TEST(Solve, ReportsInfeasible) {
  const SmoothNLP nlp = dense_nlp(
      1, 0, 2,
      [](const Vec& x, Vec& g) {
        g[0] = 1.0;
        return x[0];
      },
      kNone,
      [](const Vec& x, Vec& c, Mat& J) {
        c << x[0] - 1.0, -x[0];
        J << 1.0, -1.0;
      });
  EXPECT_EQ(solve(nlp, Vec::Zero(1)).status, SolveStatus::Infeasible);
}

TEST(Solve, AnalyticCVaRMatchesEmpiricalCVaR) {
  // min x s.t. CVaR(xi - x) <= 0 is solved by x = CVaR(xi).
  const ScenarioSet scen = load(testing::scenario_file("analytic_1000.csv"));
  const double alpha = 0.5;
  const SmoothNLP nlp = build_cvar_saa(analytic_program(), scen, RiskLevel(alpha));
  const SolveReport r = solve(nlp, nlp.start);
  ASSERT_EQ(r.status, SolveStatus::Optimal) << r.message;
  const double expected = conditional_value_at_risk(SampleVector(testing::column(scen)), RiskLevel(alpha)).value;
  EXPECT_NEAR(r.x[0], expected, 1e-5);
  EXPECT_NEAR(r.objective, 0.747, 0.02);
  EXPECT_LE(check_kkt(nlp, r.x, r.lambda_eq, r.lambda_in, r.scaling).max(), 1e-6);
}

TEST(Solve, MultistartIsDeterministic) {
  SolverOptions o;
  o.multistart_count = 4;
  o.seed = 3;
  const SolveReport a = solve(rosenbrock_disc(), Vec::Zero(2), o);
  const SolveReport b = solve(rosenbrock_disc(), Vec::Zero(2), o);
  EXPECT_EQ(a.x, b.x);
  EXPECT_EQ(a.start_index, b.start_index);
}

TEST(Solve, MultiplierGuessShapeChecked) {
  const MultiplierGuess g{Vec(0), Vec::Zero(3)};
  EXPECT_THROW(solve(shifted_square(), Vec::Zero(1), {}, g), ProblemDimensionError);
  const MultiplierGuess ok{Vec(0), Vec::Constant(1, 2.0)};
  EXPECT_EQ(solve(shifted_square(), Vec::Zero(1), {}, ok).status, SolveStatus::Optimal);
}

TEST(CheckKkt, DistinguishesOptimalFromWrongMultipliers) {
  const SmoothNLP nlp = shifted_square();
  const Vec x = Vec::Constant(1, 2.0);
  EXPECT_LE(check_kkt(nlp, x, Vec(0), Vec::Constant(1, 2.0)).max(), 1e-12);
  EXPECT_GE(check_kkt(nlp, x, Vec(0), Vec::Constant(1, 0.5)).stationarity, 1.0);
  // Infeasible point: x = 1.5 violates x >= 2 by 0.5.
  EXPECT_NEAR(check_kkt(nlp, Vec::Constant(1, 1.5), Vec(0), Vec::Zero(1)).feasibility, 0.5, 1e-12);
  // Positive multiplier on an inactive row breaks complementarity.
  EXPECT_GT(check_kkt(nlp, Vec::Constant(1, 3.0), Vec(0), Vec::Constant(1, 1.0)).complementarity, 0.5);
  EXPECT_THROW(check_kkt(nlp, x, Vec(0), Vec::Zero(2)), ProblemDimensionError);
}

TEST(FiniteDiffCheck, AcceptsHandGradients) {
  const EqualityQp d = qp_data();
  Vec p2(2);
  p2 << 0.3, -0.4;
  Vec p3(3);
  p3 << 0.2, -1.5, 0.7;
  EXPECT_LE(finite_diff_check(shifted_square(), Vec::Constant(1, 3.7)), 1e-5);
  EXPECT_LE(finite_diff_check(rosenbrock_disc(), p2), 1e-5);
  EXPECT_LE(finite_diff_check(equality_qp(d), p3), 1e-5);
}

TEST(FiniteDiffCheck, DetectsWrongGradient) {
  SmoothNLP nlp = rosenbrock_disc();
  const auto good = nlp.objective;
  nlp.objective = [good](VecCRef x, Vec* g) {
    const double v = good(x, g);
    if (g) (*g)[1] *= 1.01;
    return v;
  };
  Vec p(2);
  p << 0.3, -0.4;
  EXPECT_GT(finite_diff_check(nlp, p), 1e-3);
}

TEST(IterationLog, CallbackAndCsv) {
  std::vector<IterationRecord> log;
  SolverOptions o;
  o.on_iteration = [&](const IterationRecord& r) { log.push_back(r); };
  const SolveReport r = solve(rosenbrock_disc(), Vec::Zero(2), o);
  ASSERT_FALSE(log.empty());
  EXPECT_EQ(static_cast<int>(log.size()), r.outer_iterations);
  int inner = 0;
  for (std::size_t k = 0; k < log.size(); ++k) {
    EXPECT_EQ(log[k].iter, static_cast<int>(k) + 1);
    EXPECT_EQ(log[k].outer, static_cast<int>(k) + 1);
    inner += log[k].inner;
  }
  EXPECT_EQ(inner, r.inner_iterations);

  EXPECT_EQ(iteration_csv_header(), "iter,outer,inner,obj,stat_res,feas_res");
  std::stringstream line(iteration_csv_line(log.back()));
  std::vector<std::string> fields;
  for (std::string f; std::getline(line, f, ',');) fields.push_back(f);
  ASSERT_EQ(fields.size(), 6u);
  EXPECT_EQ(std::stod(fields[3]), log.back().objective);
}

TEST(ProblemScaling, FromPointBoundsGradients) {
  const SmoothNLP nlp = rosenbrock_disc();
  Vec p(2);
  p << 1.5, -1.0;
  const ProblemScaling s = ProblemScaling::from_point(nlp, p);
  EXPECT_LT(s.objective, 1.0);
  EXPECT_GT(s.objective, 0.0);
  const ProblemScaling id = ProblemScaling::identity(nlp);
  EXPECT_EQ(id.objective, 1.0);
  EXPECT_EQ(id.in_rows.size(), 1);
}

}  // namespace
}  // namespace sigvar
