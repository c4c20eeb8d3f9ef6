#include "sigvar/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace sigvar {

namespace {

void require_finite(double z, const char* where) {
  if (!std::isfinite(z)) {
    throw std::domain_error(std::string(where) + ": argument must be finite");
  }
}

}  // namespace

SigVaRParams::SigVaRParams(double mu, double tau) : mu_(mu), tau_(tau) {
  if (!(mu > 0.0) || !std::isfinite(mu)) throw std::invalid_argument("SigVaRParams: mu must be positive");
  if (!(tau > 0.0) || !std::isfinite(tau)) throw std::invalid_argument("SigVaRParams: tau must be positive");
}

double SigVaRParams::cutoff() const { return std::log(2.0 + mu_) / tau_; }

SSParams::SSParams(double rho, double m1, double m2) : rho_(rho), m1_(m1), m2_(m2) {
  if (!(rho > 0.0)) throw std::invalid_argument("SSParams: rho must be positive");
  if (!(m2 > 0.0) || !(m2 <= m1)) throw std::invalid_argument("SSParams: need 0 < m2 <= m1");
}

DCParams::DCParams(double epsilon) : epsilon_(epsilon) {
  if (!(epsilon > 0.0)) throw std::invalid_argument("DCParams: epsilon must be positive");
}

double cvar_kernel(double z) {
  require_finite(z, "cvar_kernel");
  return std::max(1.0 + z, 0.0);
}

double bernstein_kernel(double z) {
  require_finite(z, "bernstein_kernel");
  if (z > kExpClamp) return std::numeric_limits<double>::max();
  return std::exp(z);
}

double sigmoid_kernel(double z, const SigVaRParams& p) {
  require_finite(z, "sigmoid_kernel");
  const double arg = -p.tau() * z;
  if (arg > kExpClamp) return 0.0;
  if (arg < -kExpClamp) return (1.0 + p.mu()) / p.mu();
  return (1.0 + p.mu()) / (p.mu() + std::exp(arg));
}

double sigvar_smooth_branch(double z, const SigVaRParams& p) {
  require_finite(z, "sigvar_smooth_branch");
  const double arg = -p.tau() * z;
  if (arg > kExpClamp) return -1.0;
  if (arg < -kExpClamp) return 1.0 + 2.0 / p.mu();
  return 2.0 * (1.0 + p.mu()) / (p.mu() + std::exp(arg)) - 1.0;
}

double sigvar_kernel(double z, const SigVaRParams& p) {
  return std::max(sigvar_smooth_branch(z, p), 0.0);
}

double sigvar_smooth_derivative(double z, const SigVaRParams& p) {
  require_finite(z, "sigvar_smooth_derivative");
  const double tz = p.tau() * z;
  if (std::abs(tz) > kExpClamp) return 0.0;
  // 2(1+mu) tau e^{-tz} / (mu + e^{-tz})^2, multiplied through by e^{tz}
  const double mu = p.mu();
  return 2.0 * (1.0 + mu) * p.tau() / (mu * mu * std::exp(tz) + 2.0 * mu + std::exp(-tz));
}

double ss_kernel(double z, const SSParams& p) {
  require_finite(z, "ss_kernel");
  const double top = 1.0 + p.rho() * p.m1();
  const double arg = -z / p.rho();
  if (arg > kExpClamp) return 0.0;
  if (arg < -kExpClamp) return top;
  return top / (1.0 + p.rho() * p.m2() * std::exp(arg));
}

double ss_kernel_derivative(double z, const SSParams& p) {
  require_finite(z, "ss_kernel_derivative");
  // With a = rho m2 e^{-z/rho}: (1 + rho m1) / rho * a / (1 + a)^2 = (1 + rho m1) / rho / (a + 2 + 1/a).
  const double log_a = std::log(p.rho() * p.m2()) - z / p.rho();
  if (std::abs(log_a) > kExpClamp) return 0.0;
  const double a = std::exp(log_a);
  return (1.0 + p.rho() * p.m1()) / p.rho() / (a + 2.0 + 1.0 / a);
}

double dc_kernel(double z, const DCParams& p) {
  require_finite(z, "dc_kernel");
  const double eps = p.epsilon();
  return (std::max(z + eps, 0.0) - std::max(z, 0.0)) / eps;
}

double bar_mu() {
  static const double root = [] {
    auto g = [](double mu) { return mu - std::log(2.0 + mu) - 1.0; };
    double lo = 1.0;
    double hi = 10.0;
    while (hi - lo > 1e-12) {
      const double mid = 0.5 * (lo + hi);
      (g(mid) > 0.0 ? hi : lo) = mid;
    }
    return 0.5 * (lo + hi);
  }();
  return root;
}

SigVaRParams map_cvar_to_sigvar(double gamma, double mu) {
  if (!(gamma > 0.0) || !std::isfinite(gamma)) {
    throw std::invalid_argument("map_cvar_to_sigvar: gamma must be positive");
  }
  if (!(mu >= bar_mu())) {
    throw std::invalid_argument("map_cvar_to_sigvar: mu below bar_mu() voids CVaR dominance");
  }
  return SigVaRParams(mu, 0.5 * gamma * (mu + 1.0));
}

SigVaRParams map_ss_to_sigvar(const SSParams& p) {
  return SigVaRParams((2.0 + p.rho() * p.m1()) / (p.rho() * p.m2()), 1.0 / p.rho());
}

double error_bound(const SigVaRParams& p, double lipschitz) {
  if (!(lipschitz > 0.0)) throw std::invalid_argument("error_bound: L must be positive");
  return std::log(2.0 + p.mu()) * lipschitz / p.tau() + 2.0 / p.mu();
}

}  // namespace sigvar
