#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include <Eigen/Core>

namespace sigvar {

namespace dist {
struct Uniform {
  double lo;
  double hi;
};
struct Normal {
  double mean;
  double sd;
};
struct Exponential {
  double mean;
};
}  // namespace dist

using Marginal = std::variant<dist::Uniform, dist::Normal, dist::Exponential>;

/// Product distribution: one independent marginal per coordinate of xi.
class DistributionSpec {
 public:
  explicit DistributionSpec(std::vector<Marginal> marginals);

  /// Parses "uniform:0:1", "normal:20:5", "exponential:21000"; coordinates are
  /// separated by commas.
  static DistributionSpec parse(const std::string& text);

  std::size_t dim() const { return marginals_.size(); }
  const std::vector<Marginal>& marginals() const { return marginals_; }
  std::string descriptor() const;

 private:
  std::vector<Marginal> marginals_;
};

struct ScenarioMeta {
  std::optional<std::uint64_t> seed;
  std::string distribution;
  std::string created;  // ISO-8601 UTC
};

using SampleMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Finite sample Omega of realizations xi (one row per scenario).
class ScenarioSet {
 public:
  ScenarioSet(SampleMatrix samples, ScenarioMeta meta);

  std::size_t size() const { return static_cast<std::size_t>(samples_.rows()); }
  std::size_t dim() const { return static_cast<std::size_t>(samples_.cols()); }
  std::span<const double> row(std::size_t i) const {
    return {samples_.data() + i * dim(), dim()};
  }
  const SampleMatrix& samples() const { return samples_; }
  const ScenarioMeta& meta() const { return meta_; }

  /// Scenarios restricted to the given rows, in the given order.
  ScenarioSet subset(std::span<const std::size_t> rows) const;

 private:
  SampleMatrix samples_;
  ScenarioMeta meta_;
};

/// Counter-based stream: output k is the SplitMix64 finalizer applied to
/// seed + (k + 1) * 0x9E3779B97F4A7C15.
class SplitMix64Stream {
 public:
  explicit SplitMix64Stream(std::uint64_t seed) : seed_(seed) {}

  std::uint64_t at(std::uint64_t counter) const;
  /// Uniform on the open interval (0, 1): ((bits >> 11) + 0.5) * 2^-53.
  double uniform_at(std::uint64_t counter) const;

 private:
  std::uint64_t seed_;
};

/// Inverse-CDF sampling; draw (i, j) consumes stream counter i * dim + j.
ScenarioSet generate(const DistributionSpec& spec, std::size_t count, std::uint64_t seed);

class ScenarioIoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};
class MalformedScenarioFile : public ScenarioIoError {
 public:
  using ScenarioIoError::ScenarioIoError;
};
class NonFiniteScenarioEntry : public ScenarioIoError {
 public:
  NonFiniteScenarioEntry(std::size_t row, std::size_t col);
  std::size_t row() const { return row_; }
  std::size_t col() const { return col_; }

 private:
  std::size_t row_;
  std::size_t col_;
};
class ScenarioDimensionMismatch : public ScenarioIoError {
 public:
  using ScenarioIoError::ScenarioIoError;
};

inline constexpr int kScenarioFormatVersion = 1;

/// Sidecar metadata lives next to the CSV with extension ".json".
std::filesystem::path metadata_path(const std::filesystem::path& csv);

void save(const ScenarioSet& set, const std::filesystem::path& csv);
ScenarioSet load(const std::filesystem::path& csv);

}  // namespace sigvar
