#include "sigvar/scenario.hpp"

#include <charconv>
#include <chrono>
#include <cmath>
#include <fstream>
#include <sstream>

#include <boost/math/distributions/normal.hpp>
#include <fmt/chrono.h>
#include <fmt/format.h>
#include <json.hpp>

namespace sigvar {

namespace {

double parse_double(std::string_view text, const std::string& context) {
  // from_chars rejects a leading '+'
  if (!text.empty() && text.front() == '+') text.remove_prefix(1);
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || ptr != text.data() + text.size()) {
    throw MalformedScenarioFile(context + ": cannot parse number '" + std::string(text) + "'");
  }
  return v;
}

std::vector<std::string_view> split(std::string_view line, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(sep, start);
    out.push_back(line.substr(start, pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

void validate_marginal(const Marginal& m) {
  if (const auto* u = std::get_if<dist::Uniform>(&m)) {
    if (!(u->lo < u->hi)) throw std::invalid_argument("uniform marginal requires lo < hi");
  } else if (const auto* n = std::get_if<dist::Normal>(&m)) {
    if (!(n->sd > 0.0)) throw std::invalid_argument("normal marginal requires sd > 0");
  } else if (const auto* e = std::get_if<dist::Exponential>(&m)) {
    if (!(e->mean > 0.0)) throw std::invalid_argument("exponential marginal requires mean > 0");
  }
}

double inverse_cdf(const Marginal& m, double u) {
  if (const auto* a = std::get_if<dist::Uniform>(&m)) return a->lo + (a->hi - a->lo) * u;
  if (const auto* n = std::get_if<dist::Normal>(&m)) {
    return boost::math::quantile(boost::math::normal_distribution<double>(n->mean, n->sd), u);
  }
  const auto& e = std::get<dist::Exponential>(m);
  return -e.mean * std::log1p(-u);
}

std::string utc_now() {
  const auto now = std::chrono::floor<std::chrono::seconds>(std::chrono::system_clock::now());
  return fmt::format("{:%Y-%m-%dT%H:%M:%SZ}", fmt::gmtime(std::chrono::system_clock::to_time_t(now)));
}

}  // namespace

DistributionSpec::DistributionSpec(std::vector<Marginal> marginals) : marginals_(std::move(marginals)) {
  if (marginals_.empty()) throw std::invalid_argument("DistributionSpec: need at least one coordinate");
  for (const auto& m : marginals_) validate_marginal(m);
}

DistributionSpec DistributionSpec::parse(const std::string& text) {
  std::vector<Marginal> out;
  for (auto item : split(text, ',')) {
    const auto parts = split(trim(item), ':');
    const std::string kind(parts.front());
    auto arg = [&](std::size_t i) {
      return parse_double(parts.at(i), "distribution '" + std::string(item) + "'");
    };
    try {
      if (kind == "uniform" && parts.size() == 3) {
        out.emplace_back(dist::Uniform{arg(1), arg(2)});
      } else if (kind == "normal" && parts.size() == 3) {
        out.emplace_back(dist::Normal{arg(1), arg(2)});
      } else if (kind == "exponential" && parts.size() == 2) {
        out.emplace_back(dist::Exponential{arg(1)});
      } else {
        throw std::invalid_argument("unknown distribution '" + std::string(item) + "'");
      }
    } catch (const MalformedScenarioFile& e) {
      throw std::invalid_argument(e.what());
    }
  }
  return DistributionSpec(std::move(out));
}

std::string DistributionSpec::descriptor() const {
  std::string out;
  for (std::size_t j = 0; j < marginals_.size(); ++j) {
    if (j > 0) out += ",";
    const auto& m = marginals_[j];
    if (const auto* u = std::get_if<dist::Uniform>(&m)) {
      out += fmt::format("uniform:{}:{}", u->lo, u->hi);
    } else if (const auto* n = std::get_if<dist::Normal>(&m)) {
      out += fmt::format("normal:{}:{}", n->mean, n->sd);
    } else {
      out += fmt::format("exponential:{}", std::get<dist::Exponential>(m).mean);
    }
  }
  return out;
}

ScenarioSet::ScenarioSet(SampleMatrix samples, ScenarioMeta meta)
    : samples_(std::move(samples)), meta_(std::move(meta)) {
  if (samples_.rows() < 1 || samples_.cols() < 1) {
    throw std::invalid_argument("ScenarioSet: need at least one scenario of dimension >= 1");
  }
  for (Eigen::Index i = 0; i < samples_.rows(); ++i) {
    for (Eigen::Index j = 0; j < samples_.cols(); ++j) {
      if (!std::isfinite(samples_(i, j))) {
        throw NonFiniteScenarioEntry(static_cast<std::size_t>(i), static_cast<std::size_t>(j));
      }
    }
  }
}

ScenarioSet ScenarioSet::subset(std::span<const std::size_t> rows) const {
  SampleMatrix out(static_cast<Eigen::Index>(rows.size()), samples_.cols());
  for (std::size_t k = 0; k < rows.size(); ++k) {
    if (rows[k] >= size()) throw std::out_of_range("ScenarioSet::subset: row index out of range");
    out.row(static_cast<Eigen::Index>(k)) = samples_.row(static_cast<Eigen::Index>(rows[k]));
  }
  return ScenarioSet(std::move(out), meta_);
}

std::uint64_t SplitMix64Stream::at(std::uint64_t counter) const {
  std::uint64_t z = seed_ + (counter + 1) * 0x9E3779B97F4A7C15ULL;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

double SplitMix64Stream::uniform_at(std::uint64_t counter) const {
  return (static_cast<double>(at(counter) >> 11) + 0.5) * 0x1.0p-53;
}

ScenarioSet generate(const DistributionSpec& spec, std::size_t count, std::uint64_t seed) {
  if (count < 1) throw std::invalid_argument("generate: need at least one scenario");
  const SplitMix64Stream stream(seed);
  const std::size_t d = spec.dim();
  SampleMatrix out(static_cast<Eigen::Index>(count), static_cast<Eigen::Index>(d));
  for (std::size_t i = 0; i < count; ++i) {
    for (std::size_t j = 0; j < d; ++j) {
      const double u = stream.uniform_at(i * d + j);
      out(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = inverse_cdf(spec.marginals()[j], u);
    }
  }
  return ScenarioSet(std::move(out), ScenarioMeta{seed, spec.descriptor(), utc_now()});
}

NonFiniteScenarioEntry::NonFiniteScenarioEntry(std::size_t row, std::size_t col)
    : ScenarioIoError(fmt::format("non-finite scenario entry at row {}, column {}", row, col)),
      row_(row),
      col_(col) {}

std::filesystem::path metadata_path(const std::filesystem::path& csv) {
  auto meta = csv;
  meta.replace_extension(".json");
  return meta;
}

void save(const ScenarioSet& set, const std::filesystem::path& csv) {
  std::ofstream out(csv);
  if (!out) throw ScenarioIoError("cannot open " + csv.string() + " for writing");
  for (std::size_t j = 0; j < set.dim(); ++j) out << (j ? "," : "") << "xi" << j;
  out << "\n";
  for (std::size_t i = 0; i < set.size(); ++i) {
    const auto r = set.row(i);
    for (std::size_t j = 0; j < r.size(); ++j) out << (j ? "," : "") << fmt::format("{:.17g}", r[j]);
    out << "\n";
  }
  if (!out) throw ScenarioIoError("write failed: " + csv.string());

  nlohmann::ordered_json meta;
  meta["format_version"] = kScenarioFormatVersion;
  meta["dim"] = set.dim();
  meta["count"] = set.size();
  meta["seed"] = set.meta().seed ? nlohmann::ordered_json(*set.meta().seed) : nlohmann::ordered_json(nullptr);
  meta["distribution"] = set.meta().distribution;
  meta["created"] = set.meta().created;
  std::ofstream mout(metadata_path(csv));
  if (!mout) throw ScenarioIoError("cannot open " + metadata_path(csv).string() + " for writing");
  mout << meta.dump(2) << "\n";
}

ScenarioSet load(const std::filesystem::path& csv) {
  std::ifstream in(csv);
  if (!in) throw ScenarioIoError("cannot open " + csv.string());

  ScenarioMeta meta;
  std::optional<std::size_t> declared_dim;
  std::optional<std::size_t> declared_count;
  const auto meta_file = metadata_path(csv);
  if (std::filesystem::exists(meta_file)) {
    std::ifstream min(meta_file);
    nlohmann::json j;
    try {
      min >> j;
    } catch (const nlohmann::json::exception& e) {
      throw MalformedScenarioFile(meta_file.string() + ": " + e.what());
    }
    if (j.value("format_version", 0) != kScenarioFormatVersion) {
      throw MalformedScenarioFile(meta_file.string() + ": unsupported format_version");
    }
    if (j.contains("seed") && !j["seed"].is_null()) meta.seed = j["seed"].get<std::uint64_t>();
    meta.distribution = j.value("distribution", "");
    meta.created = j.value("created", "");
    if (j.contains("dim")) declared_dim = j["dim"].get<std::size_t>();
    if (j.contains("count")) declared_count = j["count"].get<std::size_t>();
  }

  std::string line;
  if (!std::getline(in, line)) throw MalformedScenarioFile(csv.string() + ": empty file");
  const auto header = split(trim(line), ',');
  const std::size_t dim = header.size();
  for (std::size_t j = 0; j < dim; ++j) {
    if (trim(header[j]) != "xi" + std::to_string(j)) {
      throw MalformedScenarioFile(csv.string() + ": bad header, expected xi0,xi1,...");
    }
  }
  if (declared_dim && *declared_dim != dim) {
    throw ScenarioDimensionMismatch(fmt::format("{}: header has {} columns, metadata says {}",
                                                csv.string(), dim, *declared_dim));
  }

  std::vector<double> values;
  std::size_t rows = 0;
  while (std::getline(in, line)) {
    const auto body = trim(line);
    if (body.empty()) continue;
    const auto cells = split(body, ',');
    if (cells.size() != dim) {
      throw ScenarioDimensionMismatch(
          fmt::format("{}: row {} has {} columns, expected {}", csv.string(), rows, cells.size(), dim));
    }
    for (std::size_t j = 0; j < dim; ++j) {
      const auto cell = trim(cells[j]);
      const std::string lowered = [&] {
        std::string s(cell);
        for (auto& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
        return s;
      }();
      if (lowered == "nan" || lowered == "inf" || lowered == "-inf" || lowered == "+inf" ||
          lowered == "infinity" || lowered == "-infinity") {
        throw NonFiniteScenarioEntry(rows, j);
      }
      const double v = parse_double(cell, fmt::format("{} row {} column {}", csv.string(), rows, j));
      if (!std::isfinite(v)) throw NonFiniteScenarioEntry(rows, j);
      values.push_back(v);
    }
    ++rows;
  }
  if (rows == 0) throw MalformedScenarioFile(csv.string() + ": no scenario rows");
  if (declared_count && *declared_count != rows) {
    throw MalformedScenarioFile(
        fmt::format("{}: {} rows but metadata declares {}", csv.string(), rows, *declared_count));
  }
  SampleMatrix m = Eigen::Map<SampleMatrix>(values.data(), static_cast<Eigen::Index>(rows),
                                            static_cast<Eigen::Index>(dim));
  return ScenarioSet(std::move(m), std::move(meta));
}

}  // namespace sigvar
