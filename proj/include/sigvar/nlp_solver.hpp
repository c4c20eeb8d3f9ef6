#pragma once

#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <string>

#include "sigvar/problem.hpp"

namespace sigvar {

enum class SolveStatus { Optimal, IterLimit, Infeasible, NumericalFailure };

std::string to_string(SolveStatus s);

struct KktResiduals {
  double stationarity = std::numeric_limits<double>::infinity();
  double feasibility = std::numeric_limits<double>::infinity();
  double complementarity = std::numeric_limits<double>::infinity();

  double max() const;
};

/// One line of the machine-readable iteration log.
struct IterationRecord {
  int iter = 0;    // running line number within the solve
  int outer = 0;   // outer (multiplier) iteration
  int inner = 0;   // quasi-Newton iterations spent in this outer iteration
  double objective = 0.0;
  double stationarity = 0.0;
  double feasibility = 0.0;
};

/// "iter,outer,inner,obj,stat_res,feas_res"
std::string iteration_csv_header();
std::string iteration_csv_line(const IterationRecord& r);

/// Diagonal scaling: variables u = x / variables, objective * objective,
/// constraint rows * eq_rows / in_rows.
struct ProblemScaling {
  double objective = 1.0;
  Vec variables;
  Vec eq_rows;
  Vec in_rows;

  static ProblemScaling identity(const SmoothNLP& nlp);
  /// Variable scales from the problem; objective and rows divided by
  /// max(1, infinity norm of their gradient in scaled variables at x0).
  static ProblemScaling from_point(const SmoothNLP& nlp, const Vec& x0);
};

/// Inner minimization of the augmented Lagrangian over the box.
///  Newton: projected Newton with the Gauss-Newton penalty term plus Lagrangian
///          curvature differenced along the problem's Hessian groups.
///  QuasiNewton: projected L-BFGS.
///  Automatic: Newton when the problem declares Hessian groups.
enum class InnerMethod { Automatic, Newton, QuasiNewton };

struct SolverOptions {
  double kkt_tol = 1e-6;
  int max_outer = 50;
  int max_inner = 500;
  double initial_penalty = 10.0;
  double penalty_growth = 10.0;
  double multiplier_bounds = 1e12;
  int multistart_count = 1;
  std::uint64_t seed = 0;

  InnerMethod inner_method = InnerMethod::Automatic;
  int lbfgs_memory = 10;
  double armijo = 1e-4;
  // Penalty beyond which persistent infeasibility is reported as Infeasible.
  double max_penalty = 1e12;

  std::function<void(const IterationRecord&)> on_iteration;

  void validate() const;
};

struct SolveReport {
  SolveStatus status = SolveStatus::NumericalFailure;
  Vec x;
  double objective = std::numeric_limits<double>::quiet_NaN();
  // Multipliers of the unscaled problem for the Lagrangian
  // f + lambda_eq' c_eq - lambda_in' c_in, lambda_in >= 0.
  Vec lambda_eq;
  Vec lambda_in;
  KktResiduals kkt;
  ProblemScaling scaling;
  int outer_iterations = 0;
  int inner_iterations = 0;
  // Accepted inner steps that raised the merit; the line search forbids them,
  // so anything but zero signals a defect.
  int merit_increases = 0;
  int start_index = 0;
  double wall_time = 0.0;  // seconds; excluded from reproducible outputs
  std::string message;
};

/// Multiplier estimates in the convention of SolveReport (e.g. from a solve
/// of a neighbouring problem with the same constraint rows).
struct MultiplierGuess {
  Vec lambda_eq;
  Vec lambda_in;
};

SolveReport solve(const SmoothNLP& nlp, const Vec& x0, const SolverOptions& opts = {},
                  const std::optional<MultiplierGuess>& guess = std::nullopt);

/// Stationarity of the projected Lagrangian gradient, constraint violation,
/// and complementarity, all measured in the given scaling.
KktResiduals check_kkt(const SmoothNLP& nlp, const Vec& x, const Vec& lambda_eq,
                       const Vec& lambda_in, const ProblemScaling& scaling);
KktResiduals check_kkt(const SmoothNLP& nlp, const Vec& x, const Vec& lambda_eq,
                       const Vec& lambda_in);

/// Worst relative error |fd - analytic| / max(1, |analytic|) over the
/// objective gradient and all Jacobian entries, using central differences
/// with step cbrt(eps) * max(1, |x_i|).
double finite_diff_check(const SmoothNLP& nlp, const Vec& x);

}  // namespace sigvar
