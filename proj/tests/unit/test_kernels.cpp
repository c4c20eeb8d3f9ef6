#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <random>

#include "sigvar/kernels.hpp"

namespace sigvar {
namespace {

constexpr double kSlack = 1e-12;

TEST(CVaRKernel, HandValues) {
  EXPECT_DOUBLE_EQ(cvar_kernel(0.0), 1.0);
  EXPECT_DOUBLE_EQ(cvar_kernel(-2.0), 0.0);
  EXPECT_DOUBLE_EQ(cvar_kernel(0.5), 1.5);
}

TEST(BernsteinKernel, HandValues) {
  EXPECT_DOUBLE_EQ(bernstein_kernel(0.0), 1.0);
  EXPECT_NEAR(bernstein_kernel(1.0), 2.718281828459045, 1e-15);
  EXPECT_EQ(bernstein_kernel(-1e4), 0.0);
}

TEST(SigmoidKernel, LimitsAndOrigin) {
  for (double mu : {0.5, 2.0, 10.0}) {
    for (double tau : {0.1, 1.0, 100.0}) {
      const SigVaRParams p(mu, tau);
      EXPECT_DOUBLE_EQ(sigmoid_kernel(0.0, p), 1.0);
      EXPECT_EQ(sigmoid_kernel(-1e6, p), 0.0);
      EXPECT_DOUBLE_EQ(sigmoid_kernel(1e6, p), (1.0 + mu) / mu);
    }
  }
}

TEST(SigVaRKernel, HandValues) {
  const SigVaRParams p(10.0, 550.0);
  EXPECT_DOUBLE_EQ(sigvar_kernel(0.0, p), 1.0);
  EXPECT_EQ(sigvar_kernel(-1.01 * p.cutoff(), p), 0.0);
  EXPECT_DOUBLE_EQ(sigvar_kernel(1e6, p), 1.2);
}

TEST(SigVaRKernel, VanishesExactlyBelowCutoff) {
  for (double mu : {2.6, 10.0, 300.0}) {
    for (double tau : {0.01, 1.0, 500.0}) {
      const SigVaRParams p(mu, tau);
      const double d = p.cutoff();
      EXPECT_NEAR(sigvar_smooth_branch(-d, p), 0.0, 1e-12);
      EXPECT_EQ(sigvar_kernel(-d * (1.0 + 1e-9), p), 0.0);
      EXPECT_GT(sigvar_kernel(-d * (1.0 - 1e-6), p), 0.0);
    }
  }
}

TEST(SigVaRKernel, NonFiniteArgumentRejected) {
  const SigVaRParams p(10.0, 1.0);
  EXPECT_THROW(sigvar_kernel(std::numeric_limits<double>::quiet_NaN(), p), std::domain_error);
  EXPECT_THROW(cvar_kernel(std::numeric_limits<double>::infinity()), std::domain_error);
}

TEST(SigVaRParams, RejectsNonPositive) {
  EXPECT_THROW(SigVaRParams(0.0, 1.0), std::invalid_argument);
  EXPECT_THROW(SigVaRParams(1.0, -1.0), std::invalid_argument);
  EXPECT_THROW(SSParams(1.0, 0.5, 1.0), std::invalid_argument);
  EXPECT_THROW(DCParams(0.0), std::invalid_argument);
}

TEST(SigVaRSmoothDerivative, MatchesHandValueAndFiniteDifferences) {
  // 2(1+mu) tau / (mu+1)^2 at z = 0.
  EXPECT_NEAR(sigvar_smooth_derivative(0.0, SigVaRParams(10.0, 1.0)), 22.0 / 121.0, 1e-15);
  EXPECT_NEAR(sigvar_smooth_derivative(0.0, SigVaRParams(10.0, 2.0)),
              2.0 * sigvar_smooth_derivative(0.0, SigVaRParams(10.0, 1.0)), 1e-15);
  EXPECT_EQ(sigvar_smooth_derivative(1e5, SigVaRParams(10.0, 1.0)), 0.0);
  EXPECT_EQ(sigvar_smooth_derivative(-1e5, SigVaRParams(10.0, 1.0)), 0.0);

  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> zd(-3.0, 3.0), md(0.5, 50.0), td(0.1, 5.0);
  for (int k = 0; k < 200; ++k) {
    const SigVaRParams p(md(rng), td(rng));
    const double z = zd(rng);
    const double h = 1e-6;
    const double fd = (sigvar_smooth_branch(z + h, p) - sigvar_smooth_branch(z - h, p)) / (2.0 * h);
    EXPECT_NEAR(sigvar_smooth_derivative(z, p), fd, 1e-6 * std::max(1.0, std::abs(fd)));
  }
}

TEST(SSKernel, HandValues) {
  const SSParams p(2.0, 1.0, 0.5);
  EXPECT_DOUBLE_EQ(ss_kernel(1e6, p), 3.0);
  EXPECT_DOUBLE_EQ(ss_kernel(0.0, p), 3.0 / 2.0);
  EXPECT_DOUBLE_EQ(ss_kernel(0.0, SSParams(1.0, 1.0, 1.0)), 1.0);
}

TEST(SSKernel, DerivativeMatchesFiniteDifferences) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> zd(-5.0, 5.0), rd(0.1, 10.0);
  for (int k = 0; k < 200; ++k) {
    const SSParams p(rd(rng), 1.0, 0.5);
    const double z = zd(rng);
    const double h = 1e-6;
    const double fd = (ss_kernel(z + h, p) - ss_kernel(z - h, p)) / (2.0 * h);
    EXPECT_NEAR(ss_kernel_derivative(z, p), fd, 1e-6 * std::max(1.0, std::abs(fd)));
  }
}

TEST(DCKernel, HandValues) {
  const DCParams p(0.2);
  EXPECT_DOUBLE_EQ(dc_kernel(0.0, p), 1.0);
  EXPECT_DOUBLE_EQ(dc_kernel(-0.1, p), 0.5);
  EXPECT_DOUBLE_EQ(dc_kernel(-0.4, p), 0.0);
  EXPECT_DOUBLE_EQ(dc_kernel(3.0, p), 1.0);
}

TEST(BarMu, SolvesDefiningEquation) {
  const double r = bar_mu();
  EXPECT_NEAR(r - std::log(2.0 + r) - 1.0, 0.0, 1e-10);
  EXPECT_NEAR(r, 2.5, 0.01);  // first continuation parameter, printed as 2.5
  EXPECT_GT(r, 2.0);
}

TEST(MapCVaRToSigVaR, HandValues) {
  const SigVaRParams a = map_cvar_to_sigvar(2.0 / 0.02, 10.0);
  EXPECT_DOUBLE_EQ(a.mu(), 10.0);
  EXPECT_NEAR(a.tau(), 550.0, 1e-12);
  // gamma 0.00018 at mu = 80 gives 0.00729 (the published 0.00725 rounds gamma).
  EXPECT_NEAR(map_cvar_to_sigvar(0.00018, 80.0).tau(), 0.00729, 1e-12);
  EXPECT_DOUBLE_EQ(map_cvar_to_sigvar(1.0, bar_mu()).tau(), 0.5 * (bar_mu() + 1.0));
}

TEST(MapCVaRToSigVaR, RejectsSmallMuAndBadGamma) {
  EXPECT_THROW(map_cvar_to_sigvar(1.0, 2.0), std::invalid_argument);
  EXPECT_THROW(map_cvar_to_sigvar(0.0, 10.0), std::invalid_argument);
  EXPECT_THROW(map_cvar_to_sigvar(-1.0, 10.0), std::invalid_argument);
}

TEST(MapSSToSigVaR, HandValuesAndThetaForm) {
  const SigVaRParams a = map_ss_to_sigvar(SSParams(1.0, 1.0, 1.0));
  EXPECT_DOUBLE_EQ(a.mu(), 3.0);
  EXPECT_DOUBLE_EQ(a.tau(), 1.0);
  const SigVaRParams b = map_ss_to_sigvar(SSParams(2.0, 1.0, 0.5));
  EXPECT_DOUBLE_EQ(b.mu(), 4.0);
  EXPECT_DOUBLE_EQ(b.tau(), 0.5);
  for (double rho : {0.195, 1.0, 12.5, 100.0}) {
    for (double m2 : {0.1, 0.5, 1.0}) {
      const SSParams ss(rho, 1.0, m2);
      const SigVaRParams p = map_ss_to_sigvar(ss);
      const double theta = m2 / (2.0 + rho * 1.0 + rho * m2);
      EXPECT_NEAR(p.tau(), (1.0 + p.mu()) * theta, 1e-12 * p.tau());
    }
  }
}

TEST(ErrorBound, HandValues) {
  // log(12)/550 + 2/10 = 0.20452, published truncated to 0.204.
  EXPECT_NEAR(error_bound(SigVaRParams(10.0, 550.0), 1.0), std::log(12.0) / 550.0 + 0.2, 1e-15);
  EXPECT_GE(error_bound(SigVaRParams(10.0, 550.0), 1.0), 0.204);
  EXPECT_LT(error_bound(SigVaRParams(10.0, 550.0), 1.0), 0.205);
  EXPECT_LT(error_bound(SigVaRParams(1e9, 1e12), 1.0), 1e-8);
  const SigVaRParams p(10.0, 2.0), q(10.0, 4.0);
  const double first_p = error_bound(p, 1.0) - 2.0 / 10.0;
  const double first_q = error_bound(q, 1.0) - 2.0 / 10.0;
  EXPECT_NEAR(first_q, 0.5 * first_p, 1e-15);
  EXPECT_THROW(error_bound(p, 0.0), std::invalid_argument);
}

// ---------------------------------------------------------------------------
// Properties over grids and random parameter draws.

TEST(KernelProperties, SigVaRAndSigmoidDominateIndicator) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> md(bar_mu(), 1e3), td(1e-3, 1e3);
  for (int k = 0; k < 200; ++k) {
    const SigVaRParams p(md(rng), td(rng));
    for (double z = -10.0; z <= 10.0; z += 0.01) {
      const double ind = z >= 0.0 ? 1.0 : 0.0;
      ASSERT_GE(sigvar_kernel(z, p) + kSlack, ind) << "z=" << z;
      ASSERT_GE(sigvar_kernel(z, p), 0.0);
      ASSERT_GE(sigmoid_kernel(z, p) + kSlack, ind) << "z=" << z;
    }
  }
}

TEST(KernelProperties, CVaRDominatesSigVaRUnderParameterMap) {
  std::mt19937_64 rng(12);
  std::uniform_real_distribution<double> gd(1e-4, 1e3), md(bar_mu(), 1e3);
  for (int k = 0; k < 200; ++k) {
    const double gamma = gd(rng);
    const SigVaRParams p = map_cvar_to_sigvar(gamma, md(rng));
    for (double s = -20.0; s <= 20.0; s += 0.01) {
      const double z = s / gamma;  // grid in the natural units of the hinge
      ASSERT_GE(cvar_kernel(gamma * z) + kSlack, sigvar_kernel(z, p)) << "z=" << z;
    }
  }
}

TEST(KernelProperties, MonotoneInMuAlongTauProportionalToOnePlusMu) {
  std::mt19937_64 rng(13);
  std::uniform_real_distribution<double> thd(1e-3, 10.0), md(0.1, 500.0);
  for (int k = 0; k < 200; ++k) {
    const double theta = thd(rng);
    double mu = md(rng), mu_plus = md(rng);
    if (mu > mu_plus) std::swap(mu, mu_plus);
    const SigVaRParams lo(mu, (1.0 + mu) * theta), hi(mu_plus, (1.0 + mu_plus) * theta);
    for (double z = -5.0; z <= 5.0; z += 0.01) {
      ASSERT_LE(sigvar_kernel(z, hi), sigvar_kernel(z, lo) + kSlack) << "z=" << z;
    }
    EXPECT_DOUBLE_EQ(sigvar_kernel(0.0, hi), sigvar_kernel(0.0, lo));
  }
}

TEST(KernelProperties, DCSandwich) {
  std::mt19937_64 rng(14);
  std::uniform_real_distribution<double> ed(1e-3, 1.0), md(bar_mu(), 1e3), u(0.0, 1.0);
  for (int k = 0; k < 100; ++k) {
    const double eps = ed(rng);
    const DCParams dc(eps);
    // Small tau: the SigVaR kernel lies above the ramp.
    const SigVaRParams small(md(rng), u(rng) * 0.5 / eps);
    // Large tau and mu >= bar_mu: the gap is at most 2/mu.
    const double mu = md(rng);
    const SigVaRParams large(mu, (1.0 + 10.0 * u(rng)) * (mu + 1.0) / (2.0 * eps));
    for (double s = -5.0; s <= 5.0; s += 0.005) {
      const double z = s * eps;
      ASSERT_GE(sigvar_kernel(z, small) - dc_kernel(z, dc), -kSlack) << "z=" << z;
      ASSERT_LE(sigvar_kernel(z, large) - dc_kernel(z, dc), 2.0 / mu + kSlack) << "z=" << z;
    }
  }
}

TEST(KernelProperties, SmoothSigmoidDominatesMappedSigVaR) {
  std::mt19937_64 rng(15);
  std::uniform_real_distribution<double> rd(0.05, 100.0), m1d(0.1, 5.0), u(0.01, 1.0);
  for (int k = 0; k < 200; ++k) {
    const double m1 = m1d(rng);
    const SSParams ss(rd(rng), m1, m1 * u(rng));
    const SigVaRParams p = map_ss_to_sigvar(ss);
    for (double s = -20.0; s <= 20.0; s += 0.01) {
      const double z = s * ss.rho();
      ASSERT_GE(ss_kernel(z, ss) + kSlack, sigvar_kernel(z, p)) << "z=" << z;
    }
  }
}

}  // namespace
}  // namespace sigvar
