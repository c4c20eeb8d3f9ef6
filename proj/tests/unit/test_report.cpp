#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "sigvar/case_runner.hpp"
#include "sigvar/report.hpp"
#include "test_support.hpp"

namespace sigvar {
namespace {

namespace fs = std::filesystem;

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<std::string> lines_of(const fs::path& p) {
  std::ifstream in(p);
  std::vector<std::string> out;
  for (std::string l; std::getline(in, l);) out.push_back(l);
  return out;
}

CaseConfig small_case(const std::string& problem, std::size_t count) {
  CaseConfig cfg = CaseConfig::defaults(problem);
  cfg.count = count;
  return cfg;
}

TEST(Histogram, CountsAndEdges) {
  const std::vector<double> v = {0.0, 0.1, 0.25, 0.5, 0.99, 1.0, 2.0, -1.0};
  const Histogram h = histogram(v, 4, 0.0, 1.0);
  ASSERT_EQ(h.edges.size(), 5u);
  EXPECT_EQ(h.edges.front(), 0.0);
  EXPECT_EQ(h.edges.back(), 1.0);
  // Values outside [lo, hi] are dropped; the last bin is closed on the right.
  EXPECT_EQ(h.counts, (std::vector<std::size_t>{2, 1, 1, 2}));
  EXPECT_THROW(histogram(v, 0, 0.0, 1.0), std::invalid_argument);
  const std::vector<double> same = {3.0, 3.0, 3.0};
  const Histogram d = histogram(same, 5, 3.0, 3.0);
  EXPECT_EQ(std::accumulate(d.counts.begin(), d.counts.end(), std::size_t{0}), 3u);
}

class AnalyticReport : public ::testing::Test {
 protected:
  static void SetUpTestSuite() { art_ = new CaseArtifacts(run_case(small_case("analytic", 200))); }
  static void TearDownTestSuite() { delete art_; }
  static inline CaseArtifacts* art_ = nullptr;
};

TEST_F(AnalyticReport, ValidatesAgainstSchema) {
  const nlohmann::json doc = report_json(*art_);
  const testing::SchemaChecker checker(testing::load_schema());
  EXPECT_EQ(checker.check(doc), "");
  EXPECT_EQ(doc["format_version"], kReportFormatVersion);
  EXPECT_EQ(doc["scenarios"]["count"], 200);
  EXPECT_EQ(doc["scenarios"]["seed"], 42);
  EXPECT_TRUE(doc.contains("reference"));
}

TEST_F(AnalyticReport, SchemaRejectsTamperedDocument) {
  const testing::SchemaChecker checker(testing::load_schema());
  nlohmann::json doc = report_json(*art_);
  doc["wall_time"] = 1.0;
  EXPECT_NE(checker.check(doc), "");
  doc = report_json(*art_);
  doc["continuation"]["records"][0]["status"] = "Done";
  EXPECT_NE(checker.check(doc), "");
  doc = report_json(*art_);
  doc.erase("metrics");
  EXPECT_NE(checker.check(doc), "");
}

TEST_F(AnalyticReport, HistogramsCoverEveryScenario) {
  const nlohmann::json doc = report_json(*art_);
  for (const char* key : {"cvar", "final"}) {
    const auto counts = doc["histograms"][key]["counts"].get<std::vector<std::size_t>>();
    EXPECT_EQ(counts.size(), art_->histogram_bins);
    EXPECT_EQ(std::accumulate(counts.begin(), counts.end(), std::size_t{0}), 200u) << key;
  }
  EXPECT_EQ(doc["histograms"]["cvar"]["edges"], doc["histograms"]["final"]["edges"]);
}

TEST_F(AnalyticReport, DeterministicAndFreeOfWallTime) {
  const std::string a = report_json(*art_).dump();
  const std::string b = report_json(run_case(small_case("analytic", 200))).dump();
  EXPECT_EQ(a, b);
  EXPECT_EQ(a.find("wall"), std::string::npos);
}

TEST_F(AnalyticReport, WritesFilesWithFixedHeaders) {
  const fs::path dir = fs::temp_directory_path() / "sigvar_test_report";
  fs::remove_all(dir);
  write_report(*art_, dir);
  for (const char* f : {"report.json", "trace.csv", "hist_cvar.csv", "hist_final.csv"}) {
    EXPECT_TRUE(fs::exists(dir / f)) << f;
  }
  EXPECT_FALSE(fs::exists(dir / "ss_sweep.csv"));
  EXPECT_EQ(nlohmann::json::parse(slurp(dir / "report.json")), report_json(*art_));

  const auto trace = lines_of(dir / "trace.csv");
  ASSERT_EQ(trace.size(), art_->trace.records.size() + 1);
  EXPECT_EQ(trace[0], "ell,mu,tau,objective,var_f,prob_satisfied,status");
  // The CVaR stage has no (mu, tau).
  EXPECT_EQ(trace[1].rfind("0,,,", 0), 0u);
  const auto hist = lines_of(dir / "hist_final.csv");
  EXPECT_EQ(hist[0], "lower,upper,count");
  EXPECT_EQ(hist.size(), art_->histogram_bins + 1);
}

TEST(WriteReport, UnwritableDirectory) {
  EXPECT_THROW(write_json(nlohmann::json::object(), "/proc/sigvar/none.json"), ReportIoError);
}

TEST(WriteSsSweep, Header) {
  const fs::path p = fs::temp_directory_path() / "sigvar_test_ss.csv";
  SsSweepCell c;
  c.rho = 100.0;
  c.status = SolveStatus::Infeasible;
  write_ss_sweep_csv({c}, p);
  const auto l = lines_of(p);
  ASSERT_EQ(l.size(), 2u);
  EXPECT_EQ(l[0], "rho,mu,tau,status,objective,prob_satisfied");
  EXPECT_NE(l[1].find("Infeasible"), std::string::npos);
}

TEST(SsGrid, TenHalvingsFromHundred) {
  const std::vector<double> g = default_ss_grid();
  ASSERT_EQ(g.size(), 10u);
  EXPECT_EQ(g.front(), 100.0);
  EXPECT_NEAR(g.back(), 0.195, 5e-4);
  for (std::size_t k = 1; k < g.size(); ++k) EXPECT_NEAR(g[k] / g[k - 1], 0.5, 0.005);
}

TEST(FarmerReport, FinalCostDistributionShiftsRight) {
  // Relaxing the conservative CVaR design buys expected profit with more
  // scenarios near the cost threshold: the mean cost falls while the cost
  // distribution's right part moves toward the threshold.
  const CaseArtifacts a = run_case(small_case("farmer", 100));
  const nlohmann::json doc = report_json(a);
  const testing::SchemaChecker checker(testing::load_schema());
  EXPECT_EQ(checker.check(doc), "");
  EXPECT_EQ(doc["cc_quantity"], "cost");
  EXPECT_EQ(doc["threshold"], -50000.0);
  EXPECT_LE(a.f_final.mean(), a.f_cvar.mean());
  EXPECT_GE(a.f_final.maxCoeff(), a.f_cvar.maxCoeff() - 1e-6);
  EXPECT_LE(doc["metrics"]["final_prob_satisfied"].get<double>(),
            doc["metrics"]["cvar_prob_satisfied"].get<double>());
}

}  // namespace
}  // namespace sigvar
