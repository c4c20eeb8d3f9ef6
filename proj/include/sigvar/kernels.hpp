#pragma once

// Scalar approximations of the indicator 1_[0,inf)(z) used to build
// conservative surrogates of a chance constraint, plus the closed-form
// parameter maps between them.

namespace sigvar {

/// Parameters (mu, tau) of the standard sigmoid and of the hinged SigVaR kernel.
class SigVaRParams {
 public:
  SigVaRParams(double mu, double tau);

  double mu() const { return mu_; }
  double tau() const { return tau_; }

  /// delta = log(2 + mu) / tau; the hinged kernel vanishes for z < -delta.
  double cutoff() const;

 private:
  double mu_;
  double tau_;
};

/// Smooth sigmoid of the earlier literature: (1 + rho m1) / (1 + rho m2 exp(-z / rho)).
class SSParams {
 public:
  SSParams(double rho, double m1, double m2);

  double rho() const { return rho_; }
  double m1() const { return m1_; }
  double m2() const { return m2_; }

 private:
  double rho_;
  double m1_;
  double m2_;
};

/// Ramp width of the difference-of-convex kernel.
class DCParams {
 public:
  explicit DCParams(double epsilon);

  double epsilon() const { return epsilon_; }

 private:
  double epsilon_;
};

/// Exponent arguments beyond this magnitude are replaced by the analytic limit.
inline constexpr double kExpClamp = 700.0;

double cvar_kernel(double z);
double bernstein_kernel(double z);
double sigmoid_kernel(double z, const SigVaRParams& p);
double sigvar_kernel(double z, const SigVaRParams& p);

/// The unhinged branch 2(1+mu)/(mu + exp(-tau z)) - 1, in [-1, 1 + 2/mu].
double sigvar_smooth_branch(double z, const SigVaRParams& p);

/// d/dz of sigvar_smooth_branch.
double sigvar_smooth_derivative(double z, const SigVaRParams& p);

double ss_kernel(double z, const SSParams& p);

/// d/dz of ss_kernel.
double ss_kernel_derivative(double z, const SSParams& p);
double dc_kernel(double z, const DCParams& p);

/// Positive root of mu - log(2 + mu) = 1, the smallest mu for which the
/// CVaR-to-SigVaR map keeps SigVaR at least as tight as CVaR.
double bar_mu();

/// tau = gamma (mu + 1) / 2. Throws std::invalid_argument if mu < bar_mu().
SigVaRParams map_cvar_to_sigvar(double gamma, double mu);

/// tau = 1 / rho, mu = (2 + rho m1) / (rho m2). The mapped kernel is pointwise
/// dominated by the smooth sigmoid.
SigVaRParams map_ss_to_sigvar(const SSParams& p);

/// Upper bound log(2+mu) L / tau + 2 / mu on E[psi_ss(Z)] - P(Z > 0), where L
/// bounds P(-v <= Z <= 0) <= L v.
double error_bound(const SigVaRParams& p, double lipschitz);

}  // namespace sigvar
