#include "sigvar/risk_measures.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <string>

#include "sigvar/numeric.hpp"

namespace sigvar {

SampleVector::SampleVector(std::vector<double> values) : values_(std::move(values)) {
  if (values_.empty()) throw std::invalid_argument("SampleVector: sample must be non-empty");
  for (std::size_t i = 0; i < values_.size(); ++i) {
    if (!std::isfinite(values_[i])) {
      throw std::invalid_argument("SampleVector: non-finite value at index " + std::to_string(i));
    }
  }
  sorted_ = values_;
  std::sort(sorted_.begin(), sorted_.end());
}

RiskLevel::RiskLevel(double alpha) : alpha_(alpha) {
  if (!(alpha > 0.0 && alpha <= 1.0)) throw std::invalid_argument("RiskLevel: alpha must lie in (0, 1]");
}

double violation_probability(const SampleVector& s) {
  const auto v = s.values();
  const auto count = std::count_if(v.begin(), v.end(), [](double z) { return z > 0.0; });
  return static_cast<double>(count) / static_cast<double>(v.size());
}

namespace {

// 1-based rank k of the empirical (1-alpha)-quantile: smallest k with k/S >= 1-alpha.
std::size_t quantile_rank(std::size_t n, double alpha) {
  const double target = (1.0 - alpha) * static_cast<double>(n);
  auto k = static_cast<long long>(std::ceil(target - 1e-9));
  k = std::clamp<long long>(k, 1, static_cast<long long>(n));
  return static_cast<std::size_t>(k);
}

double log_mean_exp(std::span<const double> z, double t) {
  double peak = -std::numeric_limits<double>::infinity();
  for (double v : z) peak = std::max(peak, t * v);
  const double sum = pairwise_sum(z.size(), [&](std::size_t i) { return std::exp(t * z[i] - peak); });
  return peak + std::log(sum / static_cast<double>(z.size()));
}

}  // namespace

double value_at_risk(const SampleVector& s, const RiskLevel& a) {
  return s.sorted()[quantile_rank(s.size(), a.alpha()) - 1];
}

CVaRResult conditional_value_at_risk(const SampleVector& s, const RiskLevel& a) {
  // t + E[z - t]_+ / alpha is convex piecewise linear with breakpoints at the
  // samples; its slope changes sign at the (1-alpha)-quantile.
  const double t = value_at_risk(s, a);
  const auto v = s.values();
  const double excess = pairwise_sum(v.size(), [&](std::size_t i) { return std::max(v[i] - t, 0.0); });
  return {t + excess / (a.alpha() * static_cast<double>(v.size())), t};
}

double entropic_value_at_risk(const SampleVector& s, const RiskLevel& a) {
  const auto z = s.values();
  if (a.alpha() >= 1.0) {
    // g(t) = log E[e^{tZ}] / t increases from E[Z] as t grows.
    return pairwise_sum(z) / static_cast<double>(z.size());
  }
  const double log_alpha = std::log(a.alpha());
  auto g = [&](double log_t) {
    const double t = std::exp(log_t);
    return (log_mean_exp(z, t) - log_alpha) / t;
  };

  constexpr double kLo = -20.0;
  constexpr double kHi = 20.0;
  constexpr int kGrid = 160;
  constexpr double kStep = (kHi - kLo) / kGrid;
  int best = 0;
  double best_val = g(kLo);
  for (int i = 1; i <= kGrid; ++i) {
    const double val = g(kLo + kStep * i);
    if (val < best_val) {
      best_val = val;
      best = i;
    }
  }
  if (best == 0) {
    throw EVaRBracketError("entropic_value_at_risk: minimum lies below t = exp(-20); rescale the sample");
  }
  if (best == kGrid) {
    // Still decreasing at the right end: the infimum is the t -> inf limit max(z).
    return std::min(best_val, s.sorted().back());
  }

  const double ratio = 0.5 * (std::sqrt(5.0) - 1.0);
  double lo = kLo + kStep * (best - 1);
  double hi = kLo + kStep * (best + 1);
  double x1 = hi - ratio * (hi - lo);
  double x2 = lo + ratio * (hi - lo);
  double f1 = g(x1);
  double f2 = g(x2);
  while (hi - lo > 1e-8 * std::max(1.0, std::abs(lo))) {
    if (f1 <= f2) {
      hi = x2;
      x2 = x1;
      f2 = f1;
      x1 = hi - ratio * (hi - lo);
      f1 = g(x1);
    } else {
      lo = x1;
      x1 = x2;
      f1 = f2;
      x2 = lo + ratio * (hi - lo);
      f2 = g(x2);
    }
  }
  return std::min({f1, f2, best_val});
}

SigVaREstimate sigmoidal_value_at_risk(const SampleVector& s, const RiskLevel& a,
                                       const SigVaRParams& p) {
  const auto z = s.values();
  const double n = static_cast<double>(z.size());
  auto mean_kernel = [&](double t) {
    return pairwise_sum(z.size(), [&](std::size_t i) { return sigvar_kernel(z[i] - t, p); }) / n;
  };
  const double alpha = a.alpha();
  double lo = s.sorted().front() - p.cutoff() - 1.0;
  double hi = s.sorted().back() + 1.0;
  if (alpha >= 1.0 + 2.0 / p.mu()) return {lo, true};

  while (mean_kernel(lo) <= alpha) lo -= (hi - lo);
  while (mean_kernel(hi) > alpha) hi += (hi - lo);
  while (hi - lo > 1e-10 * std::max(1.0, std::abs(hi))) {
    const double mid = 0.5 * (lo + hi);
    (mean_kernel(mid) <= alpha ? hi : lo) = mid;
  }
  return {hi, false};
}

double eval_kernel(const KernelSpec& k, double z) {
  struct Visitor {
    double z;
    double operator()(const kernel::Indicator&) const { return z > 0.0 ? 1.0 : 0.0; }
    double operator()(const kernel::CVaR&) const { return cvar_kernel(z); }
    double operator()(const kernel::Bernstein&) const { return bernstein_kernel(z); }
    double operator()(const kernel::Sigmoid& k) const { return sigmoid_kernel(z, k.params); }
    double operator()(const kernel::SigVaR& k) const { return sigvar_kernel(z, k.params); }
    double operator()(const kernel::SmoothSigmoid& k) const { return ss_kernel(z, k.params); }
    double operator()(const kernel::DC& k) const { return dc_kernel(z, k.params); }
  };
  return std::visit(Visitor{z}, k);
}

double expected_kernel(const SampleVector& s, const KernelSpec& k) {
  const auto z = s.values();
  return pairwise_sum(z.size(), [&](std::size_t i) { return eval_kernel(k, z[i]); }) /
         static_cast<double>(z.size());
}

}  // namespace sigvar
