#include "sigvar/report.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include <fmt/format.h>

namespace sigvar {

using nlohmann::json;

Histogram histogram(std::span<const double> values, std::size_t bins, double lo, double hi) {
  if (bins == 0) throw std::invalid_argument("histogram needs at least one bin");
  if (!(hi > lo)) {
    // Degenerate range: widen symmetrically so every value lands in a bin.
    const double pad = std::max(1.0, std::abs(lo)) * 1e-6;
    lo -= pad;
    hi += pad;
  }
  Histogram h;
  h.edges.resize(bins + 1);
  const double width = (hi - lo) / static_cast<double>(bins);
  for (std::size_t i = 0; i <= bins; ++i) h.edges[i] = lo + width * static_cast<double>(i);
  h.edges.back() = hi;
  h.counts.assign(bins, 0);
  for (double v : values) {
    if (!(v >= lo && v <= hi)) continue;
    auto b = static_cast<std::size_t>((v - lo) / width);
    ++h.counts[std::min(b, bins - 1)];
  }
  return h;
}

namespace {

json optional_number(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

json to_json(const Histogram& h) { return {{"edges", h.edges}, {"counts", h.counts}}; }

json to_json(const KktResiduals& k) {
  return {{"stationarity", k.stationarity},
          {"feasibility", k.feasibility},
          {"complementarity", k.complementarity}};
}

std::vector<double> to_vector(const Vec& v) { return {v.data(), v.data() + v.size()}; }

json to_json(const ContinuationTrace& t) {
  json records = json::array();
  for (const auto& r : t.records) {
    records.push_back({{"ell", r.ell},
                       {"mu", optional_number(r.mu)},
                       {"tau", optional_number(r.tau)},
                       {"objective", r.objective},
                       {"var_f", r.var_of_f},
                       {"prob_satisfied", 1.0 - r.violation_probability},
                       {"status", to_string(r.status)},
                       {"kkt", to_json(r.kkt)},
                       {"outer_iterations", r.outer_iterations},
                       {"inner_iterations", r.inner_iterations},
                       {"x", to_vector(r.x)}});
  }
  return {{"alpha", t.alpha},        {"gamma", t.gamma},
          {"lambda", t.lambda},      {"mu_target", t.mu_target},
          {"handoff_margin", t.handoff_margin},
          {"truncated", t.truncated}, {"warnings", t.warnings},
          {"records", records}};
}

json to_json(const std::vector<SsSweepCell>& cells) {
  json out = json::array();
  for (const auto& c : cells) {
    out.push_back({{"rho", c.rho},
                   {"mu", c.mu},
                   {"tau", c.tau},
                   {"status", to_string(c.status)},
                   {"objective", c.objective},
                   {"prob_satisfied", c.satisfaction_probability}});
  }
  return out;
}

json to_json(const OracleResult& o) {
  return {{"objective", o.objective},
          {"x", to_vector(o.x)},
          {"exempt", o.exempt},
          {"subproblems", o.subproblems}};
}

}  // namespace

json report_json(const CaseArtifacts& a) {
  json doc;
  doc["format_version"] = kReportFormatVersion;
  doc["problem"] = a.problem;
  json scen = {{"count", a.scenario_count}, {"distribution", a.scenario_meta.distribution}};
  scen["seed"] = a.scenario_meta.seed ? json(*a.scenario_meta.seed) : json(nullptr);
  doc["scenarios"] = scen;
  doc["cc_quantity"] = a.cc_quantity;
  doc["threshold"] = a.threshold;
  doc["continuation"] = to_json(a.trace);

  const ContinuationRecord& fin = a.trace.final_record();
  const ContinuationRecord& cvar = a.trace.records.front();
  doc["final"] = {{"ell", fin.ell},
                  {"mu", optional_number(fin.mu)},
                  {"objective", fin.objective},
                  {"var_f", fin.var_of_f},
                  {"prob_satisfied", 1.0 - fin.violation_probability}};

  // Shared edges so the two histograms compare bin by bin.
  const double lo = std::min(a.f_cvar.minCoeff(), a.f_final.minCoeff());
  const double hi = std::max(a.f_cvar.maxCoeff(), a.f_final.maxCoeff());
  const auto hc = histogram({a.f_cvar.data(), static_cast<std::size_t>(a.f_cvar.size())},
                            a.histogram_bins, lo, hi);
  const auto hf = histogram({a.f_final.data(), static_cast<std::size_t>(a.f_final.size())},
                            a.histogram_bins, lo, hi);
  doc["histograms"] = {{"cvar", to_json(hc)}, {"final", to_json(hf)}};

  json metrics = {{"cvar_objective", cvar.objective},
                  {"final_objective", fin.objective},
                  {"cvar_prob_satisfied", 1.0 - cvar.violation_probability},
                  {"final_prob_satisfied", 1.0 - fin.violation_probability},
                  {"mean_f_cvar", a.f_cvar.mean()},
                  {"mean_f_final", a.f_final.mean()},
                  {"iterations", static_cast<int>(a.trace.records.size()) - 1}};
  if (a.ss_sweep) {
    doc["ss_sweep"] = to_json(*a.ss_sweep);
    int infeasible = 0;
    int worse = 0;
    for (const auto& c : *a.ss_sweep) {
      if (c.status == SolveStatus::Infeasible) ++infeasible;
      if (c.status == SolveStatus::Optimal && c.objective > fin.objective) ++worse;
    }
    metrics["ss_infeasible_cells"] = infeasible;
    metrics["ss_cells_worse_than_final"] = worse;
  }
  if (a.oracle) {
    doc["oracle"] = to_json(*a.oracle);
    metrics["oracle_objective"] = a.oracle->objective;
  }
  if (!a.reference.empty()) doc["reference"] = a.reference;
  doc["metrics"] = metrics;
  return doc;
}

namespace {

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw ReportIoError("cannot write " + path.string());
  return out;
}

std::string opt_cell(const std::optional<double>& v) { return v ? fmt::format("{:.17g}", *v) : ""; }

}  // namespace

void write_trace_csv(const ContinuationTrace& trace, const std::filesystem::path& path) {
  auto out = open_out(path);
  out << "ell,mu,tau,objective,var_f,prob_satisfied,status\n";
  for (const auto& row : summarize(trace)) {
    out << fmt::format("{},{},{},{:.17g},{:.17g},{:.17g},{}\n", row.ell, opt_cell(row.mu),
                       opt_cell(row.tau), row.objective, row.var_of_f, row.satisfaction_probability,
                       row.status);
  }
}

void write_histogram_csv(const Histogram& h, const std::filesystem::path& path) {
  auto out = open_out(path);
  out << "lower,upper,count\n";
  for (std::size_t i = 0; i < h.counts.size(); ++i) {
    out << fmt::format("{:.17g},{:.17g},{}\n", h.edges[i], h.edges[i + 1], h.counts[i]);
  }
}

void write_ss_sweep_csv(const std::vector<SsSweepCell>& cells, const std::filesystem::path& path) {
  auto out = open_out(path);
  out << "rho,mu,tau,status,objective,prob_satisfied\n";
  for (const auto& c : cells) {
    out << fmt::format("{:.17g},{:.17g},{:.17g},{},{:.17g},{:.17g}\n", c.rho, c.mu, c.tau,
                       to_string(c.status), c.objective, c.satisfaction_probability);
  }
}

void write_json(const json& doc, const std::filesystem::path& path) {
  auto out = open_out(path);
  out << doc.dump(2) << '\n';
  if (!out) throw ReportIoError("failed writing " + path.string());
}

void write_report(const CaseArtifacts& a, const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw ReportIoError(fmt::format("cannot create {}: {}", dir.string(), ec.message()));
  const json doc = report_json(a);
  write_json(doc, dir / "report.json");
  write_trace_csv(a.trace, dir / "trace.csv");
  auto hist_from = [](const json& j) {
    Histogram h;
    h.edges = j.at("edges").get<std::vector<double>>();
    h.counts = j.at("counts").get<std::vector<std::size_t>>();
    return h;
  };
  write_histogram_csv(hist_from(doc["histograms"]["cvar"]), dir / "hist_cvar.csv");
  write_histogram_csv(hist_from(doc["histograms"]["final"]), dir / "hist_final.csv");
  if (a.ss_sweep) write_ss_sweep_csv(*a.ss_sweep, dir / "ss_sweep.csv");
}

}  // namespace sigvar
