#include <algorithm>
#include <cmath>
#include <limits>

#include "sigvar/case_studies.hpp"

namespace sigvar {

StochasticProgram analytic_program() {
  StochasticProgram p;
  p.name = "analytic";
  p.n1 = 1;
  p.n2 = 0;
  p.scenario_dim = 1;
  p.x_lower = Vec::Zero(1);
  p.x_upper = Vec::Ones(1);
  p.x_start = Vec::Ones(1);
  p.x_scale = Vec::Ones(1);
  p.y_lower = p.y_upper = p.y_start = p.y_scale = Vec(0);
  p.first_stage_cost = [](VecCRef x, VecRef g) {
    g[0] = 1.0;
    return x[0];
  };
  p.cc_function = [](VecCRef x, VecCRef, Xi xi, VecRef gx, VecRef) {
    gx[0] = -1.0;
    return xi[0] - x[0];
  };
  return p;
}

namespace {

/// log(1 + e^v) without overflow.
double softplus(double v) { return v > 0.0 ? v + std::log1p(std::exp(-v)) : std::log1p(std::exp(v)); }

/// t log(t (e^{1/t} - 1)) - t log(alpha), the EVaR objective for U(0,1).
double evar_objective(double t, double log_alpha) {
  const double s = 1.0 / t;
  // log(e^s - 1) = s + log(1 - e^{-s})
  const double log_mgf = std::log(t) + (s > 1.0 ? s + std::log1p(-std::exp(-s)) : std::log(std::expm1(s)));
  return t * (log_mgf - log_alpha);
}

double uniform_evar(double alpha) {
  if (alpha >= 1.0) return 0.5;  // t -> inf limit: the mean
  const double log_alpha = std::log(alpha);
  auto g = [&](double log_t) { return evar_objective(std::exp(log_t), log_alpha); };
  double lo = -12.0;
  double hi = 12.0;
  const double ratio = 0.5 * (std::sqrt(5.0) - 1.0);
  double x1 = hi - ratio * (hi - lo);
  double x2 = lo + ratio * (hi - lo);
  double f1 = g(x1);
  double f2 = g(x2);
  while (hi - lo > 1e-12) {
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
  return std::min(f1, f2);
}

}  // namespace

double analytic_mean_kernel(double t, const SigVaRParams& p) {
  const double mu = p.mu();
  const double tau = p.tau();
  const double delta = p.cutoff();
  // Kernel support in xi: xi - t >= -delta, intersected with [0, 1].
  const double b = 1.0 - t;
  const double a = std::max(-t, -delta);
  if (b <= a) return 0.0;
  // Integral of 2(1+mu)/(mu + e^{-tau u}) - 1 over [a, b]; the antiderivative
  // of 1/(mu + e^{-tau u}) is log(mu e^{tau u} + 1) / (mu tau).
  const double lm = std::log(mu);
  const double c = (2.0 + 2.0 * mu) / (mu * tau);
  return c * (softplus(tau * b + lm) - softplus(tau * a + lm)) - (b - a);
}

AnalyticClosedForms analytic_closed_forms(const RiskLevel& level, const SigVaRParams& p) {
  const double alpha = level.alpha();
  const double mu = p.mu();
  const double tau = p.tau();
  AnalyticClosedForms out;
  out.var = 1.0 - alpha;
  out.cvar = 0.5 * (2.0 - alpha);
  out.evar = uniform_evar(alpha);

  // Branch condition alpha >= (2+2mu)/(mu tau) log((2+mu+mu e^tau)/(2+2mu)) - 1,
  // evaluated in log space.
  const double log_ratio = std::log(mu) + tau + std::log1p((2.0 + mu) / mu * std::exp(-tau)) -
                           std::log(2.0 + 2.0 * mu);
  const double threshold = (2.0 + 2.0 * mu) / (mu * tau) * log_ratio - 1.0;
  const double log_beta = (alpha + 1.0) * mu * tau / (2.0 + 2.0 * mu);
  if (alpha >= threshold && log_beta < tau) {
    // tau^{-1} log((mu e^tau - mu beta) / (beta - 1))
    out.sigvar = (std::log(mu) + tau + std::log(-std::expm1(log_beta - tau)) - std::log(std::expm1(log_beta))) / tau;
    out.sigvar_closed_branch = true;
    return out;
  }
  // Alternate expression: the root of the decreasing map t -> E[psi_ss(xi - t)].
  double lo = -p.cutoff() - 1.0;
  double hi = 1.0 + p.cutoff();
  while (hi - lo > 1e-14 * std::max(1.0, std::abs(hi))) {
    const double mid = 0.5 * (lo + hi);
    (analytic_mean_kernel(mid, p) <= alpha ? hi : lo) = mid;
  }
  out.sigvar = hi;
  out.sigvar_closed_branch = false;
  return out;
}

}  // namespace sigvar
