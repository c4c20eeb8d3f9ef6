#pragma once

#include <span>
#include <stdexcept>
#include <variant>
#include <vector>

#include "sigvar/kernels.hpp"

namespace sigvar {

/// Equally weighted realizations z_1..z_S of a scalar random variable.
class SampleVector {
 public:
  explicit SampleVector(std::vector<double> values);

  std::span<const double> values() const { return values_; }
  std::size_t size() const { return values_.size(); }

  const std::vector<double>& sorted() const { return sorted_; }

 private:
  std::vector<double> values_;
  std::vector<double> sorted_;
};

/// Allowed violation probability alpha in (0, 1].
class RiskLevel {
 public:
  explicit RiskLevel(double alpha);
  double alpha() const { return alpha_; }

 private:
  double alpha_;
};

struct CVaRResult {
  double value;
  double t_star;  // Rockafellar-Uryasev minimizer
};

struct SigVaREstimate {
  double value;
  // alpha >= 1 + 2/mu: every t satisfies the kernel constraint and value is
  // only the lower end of the search bracket.
  bool vacuous = false;
};

class EVaRBracketError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

double violation_probability(const SampleVector& s);

/// Empirical (1-alpha)-quantile: the smallest sample point t with
/// #{z_i <= t} / S >= 1 - alpha. No interpolation.
double value_at_risk(const SampleVector& s, const RiskLevel& a);

CVaRResult conditional_value_at_risk(const SampleVector& s, const RiskLevel& a);

double entropic_value_at_risk(const SampleVector& s, const RiskLevel& a);

SigVaREstimate sigmoidal_value_at_risk(const SampleVector& s, const RiskLevel& a,
                                       const SigVaRParams& p);

namespace kernel {
struct Indicator {};  // 1_(0,inf)
struct CVaR {};
struct Bernstein {};
struct Sigmoid {
  SigVaRParams params;
};
struct SigVaR {
  SigVaRParams params;
};
struct SmoothSigmoid {
  SSParams params;
};
struct DC {
  DCParams params;
};
}  // namespace kernel

using KernelSpec = std::variant<kernel::Indicator, kernel::CVaR, kernel::Bernstein, kernel::Sigmoid,
                                kernel::SigVaR, kernel::SmoothSigmoid, kernel::DC>;

double eval_kernel(const KernelSpec& k, double z);

/// Sample mean of the kernel, summed pairwise.
double expected_kernel(const SampleVector& s, const KernelSpec& k);

}  // namespace sigvar
