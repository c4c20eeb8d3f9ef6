#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "sigvar/cc_oracle.hpp"
#include "sigvar/continuation.hpp"

namespace sigvar {

inline constexpr int kReportFormatVersion = 1;

/// Fixed-width bins; the last bin is closed on the right.
struct Histogram {
  std::vector<double> edges;  // bins + 1 values
  std::vector<std::size_t> counts;
};

Histogram histogram(std::span<const double> values, std::size_t bins, double lo, double hi);

/// Everything a case run produces; the JSON report is a pure function of it.
struct CaseArtifacts {
  std::string problem;
  ScenarioMeta scenario_meta;
  std::size_t scenario_count = 0;
  std::string cc_quantity;  // name of f in reported units, e.g. "cost"
  double threshold = 0.0;   // f <= threshold is the chance constraint, reported units
  ContinuationTrace trace;
  Vec f_cvar;   // per-scenario f at the CVaR point, reported units
  Vec f_final;  // per-scenario f at the final point, reported units
  std::optional<std::vector<SsSweepCell>> ss_sweep;
  std::optional<OracleResult> oracle;
  std::map<std::string, double> reference;  // closed forms or other reference values
  std::size_t histogram_bins = 40;
};

nlohmann::json report_json(const CaseArtifacts& a);

/// "ell,mu,tau,objective,var_f,prob_satisfied,status"
void write_trace_csv(const ContinuationTrace& trace, const std::filesystem::path& path);
void write_histogram_csv(const Histogram& h, const std::filesystem::path& path);
void write_ss_sweep_csv(const std::vector<SsSweepCell>& cells, const std::filesystem::path& path);
void write_json(const nlohmann::json& doc, const std::filesystem::path& path);

/// Writes report.json, trace.csv, hist_cvar.csv, hist_final.csv and, when
/// present, ss_sweep.csv into dir (created if missing).
void write_report(const CaseArtifacts& a, const std::filesystem::path& dir);

class ReportIoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace sigvar
