#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

#include "sigvar/case_studies.hpp"
#include "sigvar/continuation.hpp"
#include "sigvar/risk_measures.hpp"
#include "test_support.hpp"

namespace sigvar {
namespace {

/// One continuation run on the 1000-sample analytic fixture, shared by the
/// tests below.
class AnalyticTrace : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    scen_ = new ScenarioSet(load(testing::scenario_file("analytic_1000.csv")));
    ContinuationOptions o;
    o.alpha = 0.5;
    trace_ = new ContinuationTrace(run_continuation(analytic_program(), *scen_, o));
  }
  static void TearDownTestSuite() {
    delete trace_;
    delete scen_;
  }

  /// Exact SAA optimum: the (floor(alpha S) + 1)-th largest sample.
  static double saa_optimum() {
    std::vector<double> xi = testing::column(*scen_);
    std::sort(xi.begin(), xi.end(), std::greater<>());
    return xi[static_cast<std::size_t>(std::floor(0.5 * static_cast<double>(xi.size())))];
  }

  static inline ScenarioSet* scen_ = nullptr;
  static inline ContinuationTrace* trace_ = nullptr;
};

TEST_F(AnalyticTrace, CVaRStageAndSlope) {
  const ContinuationRecord& r0 = trace_->records.front();
  EXPECT_EQ(r0.ell, 0);
  EXPECT_FALSE(r0.mu.has_value());
  EXPECT_EQ(r0.status, SolveStatus::Optimal);
  EXPECT_NEAR(r0.objective, 0.747, 0.02);
  // gamma = -1/t_c with t_c close to -alpha/2.
  EXPECT_NEAR(trace_->gamma, 4.0, 0.5);
  EXPECT_GE(trace_->handoff_margin, -1e-9);
}

TEST_F(AnalyticTrace, ParameterSchedule) {
  ASSERT_GE(trace_->records.size(), 2u);
  const ContinuationRecord& r1 = trace_->records[1];
  ASSERT_TRUE(r1.mu && r1.tau);
  EXPECT_DOUBLE_EQ(*r1.mu, bar_mu());
  EXPECT_NEAR(*r1.tau, trace_->gamma * (bar_mu() + 1.0) / 2.0, 1e-12);
  for (std::size_t k = 2; k < trace_->records.size(); ++k) {
    EXPECT_NEAR(*trace_->records[k].mu, 2.0 * *trace_->records[k - 1].mu, 1e-12);
  }
  EXPECT_GE(*trace_->records.back().mu, 320.0);
  EXPECT_LT(*trace_->records.back().mu, 640.0);
  EXPECT_FALSE(trace_->truncated);
}

TEST_F(AnalyticTrace, FirstStepAndFinalObjective) {
  EXPECT_NEAR(trace_->records[1].objective, 0.719, 0.02);
  const double cvar = trace_->records.front().objective;
  const double final = trace_->final_record().objective;
  const double exact = saa_optimum();
  // The final design closes at least 95% of the CVaR-to-optimum gap ...
  EXPECT_LE((final - exact) / (cvar - exact), 0.05);
  EXPECT_GE(final, exact - 1e-6);
  // ... and agrees with the published 0.515 within two sampling standard
  // deviations of a uniform mean over 1000 draws.
  EXPECT_NEAR(final, 0.515, 2.0 * 0.5 / std::sqrt(1000.0));
}

TEST_F(AnalyticTrace, ObjectiveNonIncreasing) {
  for (std::size_t k = 1; k < trace_->records.size(); ++k) {
    EXPECT_EQ(trace_->records[k].status, SolveStatus::Optimal) << k;
    EXPECT_LE(trace_->records[k].objective, trace_->records[k - 1].objective + 1e-6) << k;
  }
}

TEST_F(AnalyticTrace, EveryIterateSatisfiesTheChanceConstraint) {
  for (const auto& r : trace_->records) {
    EXPECT_LE(r.violation_probability, 0.5 + 1e-12);
    EXPECT_LE(r.kkt.max(), 1e-6);
  }
}

TEST_F(AnalyticTrace, ReportedVaRMatchesEmpiricalQuantile) {
  const StochasticProgram prog = analytic_program();
  for (const auto& r : trace_->records) {
    const Vec f = evaluate_cc(prog, *scen_, r.x, r.y);
    const double var = value_at_risk(SampleVector(std::vector<double>(f.begin(), f.end())), RiskLevel(0.5));
    EXPECT_DOUBLE_EQ(r.var_of_f, var);
    const EmpiricalCc e = empirical_cc(prog, *scen_, r.x, r.y, 0.5);
    EXPECT_DOUBLE_EQ(e.violation_probability, r.violation_probability);
  }
}

TEST_F(AnalyticTrace, SummaryHasOneRowPerRecord) {
  const std::vector<SummaryRow> rows = summarize(*trace_);
  ASSERT_EQ(rows.size(), trace_->records.size());
  EXPECT_EQ(rows.front().status, "Optimal");
  for (std::size_t k = 0; k < rows.size(); ++k) {
    EXPECT_EQ(rows[k].ell, static_cast<int>(k));
    EXPECT_DOUBLE_EQ(rows[k].satisfaction_probability, 1.0 - trace_->records[k].violation_probability);
  }
}

TEST(ContinuationOptions, Validation) {
  ContinuationOptions o;
  EXPECT_NO_THROW(o.validate());
  o.mu_target = bar_mu() - 0.01;
  EXPECT_THROW(o.validate(), std::invalid_argument);
  o = {};
  o.lambda = 1.0;
  EXPECT_THROW(o.validate(), std::invalid_argument);
  o = {};
  o.alpha = 0.0;
  EXPECT_THROW(o.validate(), std::invalid_argument);
}

TEST(Continuation, StopsAtTargetOfBarMu) {
  const ScenarioSet scen = load(testing::scenario_file("analytic_20.csv"));
  ContinuationOptions o;
  o.alpha = 0.2;
  o.mu_target = bar_mu();
  const ContinuationTrace t = run_continuation(analytic_program(), scen, o);
  ASSERT_EQ(t.records.size(), 2u);
  EXPECT_DOUBLE_EQ(*t.records[1].mu, bar_mu());
}

TEST(Continuation, FailsWhenCVaRStageInfeasible) {
  // Every sample exceeds the upper bound of x, so the CVaR stage has no
  // feasible design and the continuation cannot start.
  const auto scen = testing::scenarios_from({1.5, 1.6, 1.7, 1.8});
  ContinuationOptions o;
  o.alpha = 0.25;
  EXPECT_THROW(run_continuation(analytic_program(), scen, o), ContinuationError);
}

TEST(Continuation, EmptyTraceHasNoFinalRecord) {
  const ContinuationTrace t;
  EXPECT_THROW(t.final_record(), ContinuationError);
  EXPECT_THROW(summarize(t), std::invalid_argument);
}

}  // namespace
}  // namespace sigvar
