#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>
#include <Eigen/SparseCore>

#include "sigvar/kernels.hpp"
#include "sigvar/risk_measures.hpp"
#include "sigvar/scenario.hpp"

namespace sigvar {

using Index = Eigen::Index;
using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;
using SparseRM = Eigen::SparseMatrix<double, Eigen::RowMajor>;
using VecCRef = Eigen::Ref<const Vec>;
using VecRef = Eigen::Ref<Vec>;
using MatRef = Eigen::Ref<Mat>;
using Xi = std::span<const double>;

/// Thrown by model callbacks when an intermediate quantity leaves its domain.
class EvaluationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ProblemDimensionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// min phi0(x) + E[phi(x, y(xi), xi)]
///  s.t. g(x) >= 0, h(x, y(xi), xi) >= 0, bounds,
///       P(f(x, y(xi), xi) <= 0) >= 1 - alpha.
///
/// Every callback writes its gradient (or Jacobian) into the supplied output.
struct StochasticProgram {
  std::string name;
  Index n1 = 0;
  Index n2 = 0;
  Index scenario_dim = 1;

  Vec x_lower, x_upper, y_lower, y_upper;
  Vec x_start, y_start;
  // Typical magnitudes, used only for solver scaling.
  Vec x_scale, y_scale;
  double cc_scale = 1.0;
  // Added to f when reporting, so tables show the physical quantity
  // (e.g. cost) instead of cost minus threshold.
  double cc_report_offset = 0.0;

  std::function<double(VecCRef x, VecRef grad_x)> first_stage_cost;
  std::function<double(VecCRef x, VecCRef y, Xi xi, VecRef grad_x, VecRef grad_y)> recourse_cost;
  std::function<double(VecCRef x, VecCRef y, Xi xi, VecRef grad_x, VecRef grad_y)> cc_function;

  Index m_det = 0;
  std::function<void(VecCRef x, VecRef g, MatRef jac_x)> det_constraints;
  Index m_rec = 0;
  std::function<void(VecCRef x, VecCRef y, Xi xi, VecRef h, MatRef jac_x, MatRef jac_y)>
      recourse_constraints;

  void validate() const;
};

struct VariableBlock {
  std::string name;
  Index offset = 0;
  Index size = 0;
};

/// Named contiguous blocks that partition the variable vector.
class VariableLayout {
 public:
  Index add(std::string name, Index size);
  const VariableBlock& block(const std::string& name) const;
  bool has(const std::string& name) const;
  const std::vector<VariableBlock>& blocks() const { return blocks_; }
  Index total() const { return total_; }

 private:
  std::vector<VariableBlock> blocks_;
  Index total_ = 0;
};

enum class SaaForm { SigVaR, CVaR, SmoothSigmoid, Restricted };

/// Structural description kept alongside an assembled SAA problem.
struct SaaStructure {
  SaaForm form = SaaForm::Restricted;
  Index n1 = 0;
  Index n2 = 0;
  Index scenarios = 0;
  double alpha = 1.0;
  std::optional<SigVaRParams> sigvar;
  std::optional<SSParams> smooth;
  std::vector<bool> exempt;
};

/// Columns perturbed together when differencing the Lagrangian gradient, and
/// the lower-triangle Hessian entries (row >= col) read off that difference.
/// Groups are chosen so that no listed entry receives contributions from two
/// perturbed columns.
struct HessianGroup {
  std::vector<Index> columns;
  std::vector<std::pair<Index, Index>> entries;
};

/// min f(x) s.t. c_eq(x) = 0, c_in(x) >= 0, lower <= x <= upper.
///
/// Jacobians are row-major sparse matrices with a pattern fixed at assembly;
/// `constraints` fills values in the stored order and never changes the pattern.
struct SmoothNLP {
  std::string name;
  VariableLayout layout;
  Vec lower, upper, scale, start;
  Index m_eq = 0;
  Index m_in = 0;
  SparseRM jac_eq_pattern;
  SparseRM jac_in_pattern;

  std::function<double(VecCRef x, Vec* grad)> objective;
  /// Jacobian outputs may be null; when given they must carry the stored pattern.
  std::function<void(VecCRef x, VecRef c_eq, VecRef c_in, SparseRM* jac_eq, SparseRM* jac_in)>
      constraints;

  /// Optional curvature plan; when empty the solver falls back to a pure
  /// quasi-Newton inner loop.
  std::vector<HessianGroup> hessian_groups;

  std::shared_ptr<const SaaStructure> saa;

  Index num_variables() const { return layout.total(); }
};

struct WarmStart {
  Vec x;
  Mat y;  // scenarios x n2; empty means use the program's y_start
};

struct SaaSolution {
  Vec x;
  Mat y;
  Vec z;
  Vec phi;
  std::optional<double> t;
  double objective = 0.0;
  std::string status;
};

SmoothNLP build_sigvar_saa(const StochasticProgram& prog, const ScenarioSet& scen,
                           const SigVaRParams& p, const RiskLevel& a,
                           const std::optional<WarmStart>& start = std::nullopt);

SmoothNLP build_cvar_saa(const StochasticProgram& prog, const ScenarioSet& scen, const RiskLevel& a,
                         const std::optional<WarmStart>& start = std::nullopt);

/// E[psi_sm(f)] <= alpha with the smooth sigmoid of the earlier literature.
SmoothNLP build_smooth_sigmoid_saa(const StochasticProgram& prog, const ScenarioSet& scen,
                                   const SSParams& p, const RiskLevel& a,
                                   const std::optional<WarmStart>& start = std::nullopt);

/// f <= 0 on every scenario.
SmoothNLP build_scenario_robust(const StochasticProgram& prog, const ScenarioSet& scen,
                                const std::optional<WarmStart>& start = std::nullopt);

/// f <= 0 on every scenario not listed in `exempt`.
SmoothNLP build_restricted(const StochasticProgram& prog, const ScenarioSet& scen,
                           std::span<const std::size_t> exempt,
                           const std::optional<WarmStart>& start = std::nullopt);

/// Splits an NLP point into its blocks. Requires nlp.saa.
SaaSolution extract_solution(const SmoothNLP& nlp, const Vec& point);

/// Lowers every slack phi to its smallest feasible value (the hinged kernel
/// value for SigVaR, [z - t]_+ for CVaR). Leaves other forms unchanged.
void tighten_slacks(const SmoothNLP& nlp, Vec& point);

/// Values f(x, y_xi, xi) for each scenario.
Vec evaluate_cc(const StochasticProgram& prog, const ScenarioSet& scen, const Vec& x, const Mat& y);

/// Value of the SAA objective phi0(x) + mean phi(x, y_xi, xi).
double evaluate_objective(const StochasticProgram& prog, const ScenarioSet& scen, const Vec& x,
                          const Mat& y);

}  // namespace sigvar
