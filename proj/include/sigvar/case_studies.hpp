#pragma once

#include <filesystem>
#include <string>

#include "sigvar/coefficients.hpp"
#include "sigvar/problem.hpp"

namespace sigvar {

// ---------------------------------------------------------------------------
// Analytic example: min x s.t. P(xi - x <= 0) >= 1 - alpha, x in [0, 1],
// xi ~ U(0, 1).

StochasticProgram analytic_program();

struct AnalyticClosedForms {
  double var = 0.0;
  double cvar = 0.0;
  double evar = 0.0;
  double sigvar = 0.0;
  // True when the closed-form branch applied; otherwise sigvar comes from a
  // one-dimensional solve of the alternate expression.
  bool sigvar_closed_branch = true;
};

AnalyticClosedForms analytic_closed_forms(const RiskLevel& a, const SigVaRParams& p);

/// E[psi_ss(xi - t)] for xi ~ U(0, 1), integrated in closed form.
double analytic_mean_kernel(double t, const SigVaRParams& p);

// ---------------------------------------------------------------------------
// Farmer problem: land x (wheat, corn, beets); per scenario purchases y and
// sales w; random beet yield. f is the total cost (negative = profit).

struct FarmerCoefficients {
  double land_capacity = 500.0;
  double planting_cost[3] = {150.0, 230.0, 260.0};
  double purchase_price[3] = {238.0, 210.0, 0.0};
  double sale_price[3] = {170.0, 150.0, 36.0};
  double demand[3] = {200.0, 240.0, 0.0};
  double purchase_capacity[3] = {1e4, 1e4, 0.0};
  double sale_capacity[3] = {1e4, 1e4, 6000.0};
  double wheat_yield = 2.5;
  double corn_yield = 3.0;
  double beet_yield_mean = 20.0;
  double beet_yield_sd = 5.0;
  double cost_threshold = -50000.0;

  static FarmerCoefficients from_file(const std::filesystem::path& path);
  static FarmerCoefficients from_keys(const KeyValueFile& kv);
  std::string to_text() const;
  void validate() const;
  std::string yield_distribution() const;
};

/// n1 = 3 (land), n2 = 6 (purchases then sales per crop), scenario = beet yield.
StochasticProgram farmer_build(const FarmerCoefficients& c, const ScenarioSet& scen);

// ---------------------------------------------------------------------------
// Flare stack: diameter t and height h; random waste flow Q.

struct FlareCoefficients {
  double heat_of_combustion = 21500.0;  // h_c, BTU/lb
  double a[13] = {};                    // a[1]..a[12]; a[0] unused
  double wind_speed = 30.0;             // w, ft/s
  double reference_distance = 100.0;    // r, ft
  double radiation_limit = 5.0;         // k_bar, kW/m^2
  double mach_limit = 0.5;
  double design_flow = 1e5;             // lb/h at which the Mach limit applies
  double flow_mean = 21000.0;           // lb/h
  double t_lower = 0.5, t_upper = 10.0;
  double h_lower = 10.0, h_upper = 600.0;

  FlareCoefficients();
  static FlareCoefficients from_file(const std::filesystem::path& path);
  static FlareCoefficients from_keys(const KeyValueFile& kv);
  std::string to_text() const;
  void validate() const;
  std::string flow_distribution() const;
};

/// Intermediate quantities of the radiation chain for one flow value.
struct FlareChain {
  double H, L, U, dX, dY, X, Y, D2, K;
};

/// Evaluates the chain; throws EvaluationError on nonpositive H, U, D^2 or w.
FlareChain flare_chain(const FlareCoefficients& c, double t, double h, double Q);

double flare_cost(const FlareCoefficients& c, double t, double h);

/// n1 = 2 (t, h), n2 = 0, scenario = waste flow Q; cc function K - k_bar.
/// The deterministic constraint keeps the Mach number at the design flow
/// below the limit.
StochasticProgram flare_build(const FlareCoefficients& c, const ScenarioSet& scen);

}  // namespace sigvar
