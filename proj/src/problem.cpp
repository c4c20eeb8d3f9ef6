#include "sigvar/problem.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include <fmt/format.h>

#include "sigvar/numeric.hpp"

namespace sigvar {

namespace {

void require_size(const Vec& v, Index n, const char* what) {
  if (v.size() != n) {
    throw ProblemDimensionError(fmt::format("StochasticProgram: {} has size {}, expected {}", what,
                                            v.size(), n));
  }
}

}  // namespace

void StochasticProgram::validate() const {
  if (n1 <= 0) throw ProblemDimensionError("StochasticProgram: n1 must be positive");
  if (n2 < 0 || m_det < 0 || m_rec < 0) {
    throw ProblemDimensionError("StochasticProgram: negative dimension");
  }
  if (scenario_dim <= 0) throw ProblemDimensionError("StochasticProgram: scenario_dim must be positive");
  require_size(x_lower, n1, "x_lower");
  require_size(x_upper, n1, "x_upper");
  require_size(x_start, n1, "x_start");
  require_size(x_scale, n1, "x_scale");
  require_size(y_lower, n2, "y_lower");
  require_size(y_upper, n2, "y_upper");
  require_size(y_start, n2, "y_start");
  require_size(y_scale, n2, "y_scale");
  if ((x_lower.array() > x_upper.array()).any() || (y_lower.array() > y_upper.array()).any()) {
    throw std::invalid_argument("StochasticProgram: lower bound exceeds upper bound");
  }
  if ((x_scale.array() <= 0.0).any() || (y_scale.array() <= 0.0).any() || !(cc_scale > 0.0)) {
    throw std::invalid_argument("StochasticProgram: scales must be positive");
  }
  if (!first_stage_cost || !cc_function) {
    throw std::invalid_argument("StochasticProgram: first_stage_cost and cc_function are required");
  }
  if (m_det > 0 && !det_constraints) {
    throw std::invalid_argument("StochasticProgram: det_constraints missing");
  }
  if (m_rec > 0 && !recourse_constraints) {
    throw std::invalid_argument("StochasticProgram: recourse_constraints missing");
  }
}

Index VariableLayout::add(std::string name, Index size) {
  if (size < 0) throw std::invalid_argument("VariableLayout: negative block size");
  if (has(name)) throw std::invalid_argument("VariableLayout: duplicate block " + name);
  const Index offset = total_;
  blocks_.push_back({std::move(name), offset, size});
  total_ += size;
  return offset;
}

const VariableBlock& VariableLayout::block(const std::string& name) const {
  for (const auto& b : blocks_) {
    if (b.name == name) return b;
  }
  throw std::out_of_range("VariableLayout: no block named " + name);
}

bool VariableLayout::has(const std::string& name) const {
  return std::any_of(blocks_.begin(), blocks_.end(), [&](const auto& b) { return b.name == name; });
}

namespace {

/// Evaluation state shared by the callbacks of one assembled SAA problem.
class SaaAssembly {
 public:
  SaaAssembly(const StochasticProgram& prog, const ScenarioSet& scen, SaaStructure structure)
      : prog_(prog), scen_(scen), st_(std::move(structure)) {
    S_ = st_.scenarios;
    n1_ = prog_.n1;
    n2_ = prog_.n2;
    oy_ = n1_;
    const bool has_slacks = st_.form != SaaForm::Restricted;
    oz_ = oy_ + S_ * n2_;
    ophi_ = oz_ + (has_slacks ? S_ : 0);
    ot_ = ophi_ + (has_slacks ? S_ : 0);
    total_ = ot_ + (st_.form == SaaForm::CVaR ? 1 : 0);
    for (Index s = 0; s < S_; ++s) {
      if (!st_.exempt[static_cast<std::size_t>(s)]) enforced_.push_back(s);
    }
  }

  Index total() const { return total_; }
  bool has_slacks() const { return st_.form != SaaForm::Restricted; }
  Index m_eq() const { return has_slacks() ? S_ : 0; }
  Index m_in() const {
    Index m = prog_.m_det + S_ * prog_.m_rec;
    switch (st_.form) {
      case SaaForm::SigVaR:
      case SaaForm::SmoothSigmoid:
      case SaaForm::CVaR:
        m += S_ + 1;
        break;
      case SaaForm::Restricted:
        m += static_cast<Index>(enforced_.size());
        break;
    }
    return m;
  }

  VariableLayout layout() const {
    VariableLayout l;
    l.add("x", n1_);
    l.add("y", S_ * n2_);
    if (has_slacks()) {
      l.add("z", S_);
      l.add("phi", S_);
    }
    if (st_.form == SaaForm::CVaR) l.add("t", 1);
    return l;
  }

  SparseRM eq_pattern() const {
    SparseRM J(m_eq(), total_);
    J.reserve(m_eq() * (n1_ + n2_ + 1));
    for (Index s = 0; s < m_eq(); ++s) {
      J.startVec(s);
      for (Index j = 0; j < n1_; ++j) J.insertBack(s, j);
      for (Index j = 0; j < n2_; ++j) J.insertBack(s, oy_ + s * n2_ + j);
      J.insertBack(s, oz_ + s);
    }
    J.finalize();
    return J;
  }

  SparseRM in_pattern() const {
    SparseRM J(m_in(), total_);
    Index row = 0;
    auto dense_row = [&](Index s) {
      J.startVec(row);
      for (Index j = 0; j < n1_; ++j) J.insertBack(row, j);
      if (s >= 0) {
        for (Index j = 0; j < n2_; ++j) J.insertBack(row, oy_ + s * n2_ + j);
      }
      ++row;
    };
    for (Index i = 0; i < prog_.m_det; ++i) dense_row(-1);
    for (Index s = 0; s < S_; ++s) {
      for (Index i = 0; i < prog_.m_rec; ++i) dense_row(s);
    }
    if (st_.form == SaaForm::Restricted) {
      for (Index s : enforced_) dense_row(s);
    } else {
      for (Index s = 0; s < S_; ++s) {
        J.startVec(row);
        J.insertBack(row, oz_ + s);
        J.insertBack(row, ophi_ + s);
        if (st_.form == SaaForm::CVaR) J.insertBack(row, ot_);
        ++row;
      }
      J.startVec(row);
      for (Index s = 0; s < S_; ++s) J.insertBack(row, ophi_ + s);
      if (st_.form == SaaForm::CVaR) J.insertBack(row, ot_);
      ++row;
    }
    J.finalize();
    return J;
  }

  double objective(VecCRef v, Vec* grad) const {
    const auto x = v.head(n1_);
    const double invS = 1.0 / static_cast<double>(S_);
    Vec gx0 = Vec::Zero(n1_);
    const double base = prog_.first_stage_cost(x, gx0);
    if (grad) {
      grad->setZero(total_);
      grad->head(n1_) = gx0;
    }
    if (!prog_.recourse_cost) return base;
    std::vector<double> terms(static_cast<std::size_t>(S_));
    Vec gx(n1_), gy(n2_);
    for (Index s = 0; s < S_; ++s) {
      gx.setZero();
      gy.setZero();
      terms[static_cast<std::size_t>(s)] =
          prog_.recourse_cost(x, y_block(v, s), scen_.row(static_cast<std::size_t>(s)), gx, gy);
      if (grad) {
        grad->head(n1_) += invS * gx;
        grad->segment(oy_ + s * n2_, n2_) = invS * gy;
      }
    }
    return base + pairwise_sum(terms) * invS;
  }

  void constraints(VecCRef v, VecRef c_eq, VecRef c_in, SparseRM* J_eq, SparseRM* J_in) const {
    const auto x = v.head(n1_);
    double* eq_val = J_eq ? J_eq->valuePtr() : nullptr;
    double* in_val = J_in ? J_in->valuePtr() : nullptr;
    Vec gx(n1_), gy(n2_);

    // Equalities z_s - f(x, y_s, xi_s) = 0.
    if (has_slacks()) {
      for (Index s = 0; s < S_; ++s) {
        const double f = cc(v, s, gx, gy);
        c_eq[s] = v[oz_ + s] - f;
        if (eq_val) {
          for (Index j = 0; j < n1_; ++j) *eq_val++ = -gx[j];
          for (Index j = 0; j < n2_; ++j) *eq_val++ = -gy[j];
          *eq_val++ = 1.0;
        }
      }
    }

    Index row = 0;
    if (prog_.m_det > 0) {
      Vec g(prog_.m_det);
      Mat jx = Mat::Zero(prog_.m_det, n1_);
      prog_.det_constraints(x, g, jx);
      c_in.segment(row, prog_.m_det) = g;
      if (in_val) {
        for (Index i = 0; i < prog_.m_det; ++i) {
          for (Index j = 0; j < n1_; ++j) *in_val++ = jx(i, j);
        }
      }
      row += prog_.m_det;
    }
    if (prog_.m_rec > 0) {
      Vec h(prog_.m_rec);
      Mat jx(prog_.m_rec, n1_), jy(prog_.m_rec, n2_);
      for (Index s = 0; s < S_; ++s) {
        jx.setZero();
        jy.setZero();
        prog_.recourse_constraints(x, y_block(v, s), scen_.row(static_cast<std::size_t>(s)), h, jx, jy);
        c_in.segment(row, prog_.m_rec) = h;
        if (in_val) {
          for (Index i = 0; i < prog_.m_rec; ++i) {
            for (Index j = 0; j < n1_; ++j) *in_val++ = jx(i, j);
            for (Index j = 0; j < n2_; ++j) *in_val++ = jy(i, j);
          }
        }
        row += prog_.m_rec;
      }
    }

    if (st_.form == SaaForm::Restricted) {
      for (Index s : enforced_) {
        c_in[row++] = -cc(v, s, gx, gy);
        if (in_val) {
          for (Index j = 0; j < n1_; ++j) *in_val++ = -gx[j];
          for (Index j = 0; j < n2_; ++j) *in_val++ = -gy[j];
        }
      }
      return;
    }

    const double invS = 1.0 / static_cast<double>(S_);
    for (Index s = 0; s < S_; ++s) {
      const double z = v[oz_ + s];
      const double phi = v[ophi_ + s];
      double value = 0.0;
      double dz = 0.0;
      switch (st_.form) {
        case SaaForm::SigVaR:
          value = phi - sigvar_smooth_branch(z, *st_.sigvar);
          dz = -sigvar_smooth_derivative(z, *st_.sigvar);
          break;
        case SaaForm::SmoothSigmoid:
          value = phi - ss_kernel(z, *st_.smooth);
          dz = -ss_kernel_derivative(z, *st_.smooth);
          break;
        case SaaForm::CVaR:
          value = phi - z + v[ot_];
          dz = -1.0;
          break;
        case SaaForm::Restricted:
          break;
      }
      c_in[row++] = value;
      if (in_val) {
        *in_val++ = dz;
        *in_val++ = 1.0;
        if (st_.form == SaaForm::CVaR) *in_val++ = 1.0;
      }
    }
    const double mean_phi = pairwise_sum(static_cast<std::size_t>(S_), [&](std::size_t s) {
                              return v[ophi_ + static_cast<Index>(s)];
                            }) *
                            invS;
    if (st_.form == SaaForm::CVaR) {
      c_in[row++] = -st_.alpha * v[ot_] - mean_phi;
    } else {
      c_in[row++] = st_.alpha - mean_phi;
    }
    if (in_val) {
      for (Index s = 0; s < S_; ++s) *in_val++ = -invS;
      if (st_.form == SaaForm::CVaR) *in_val++ = -st_.alpha;
    }
  }

  void bounds(Vec& lo, Vec& hi, Vec& scale) const {
    const double inf = std::numeric_limits<double>::infinity();
    lo.setConstant(total_, -inf);
    hi.setConstant(total_, inf);
    scale.setOnes(total_);
    lo.head(n1_) = prog_.x_lower;
    hi.head(n1_) = prog_.x_upper;
    scale.head(n1_) = prog_.x_scale;
    for (Index s = 0; s < S_; ++s) {
      lo.segment(oy_ + s * n2_, n2_) = prog_.y_lower;
      hi.segment(oy_ + s * n2_, n2_) = prog_.y_upper;
      scale.segment(oy_ + s * n2_, n2_) = prog_.y_scale;
    }
    if (has_slacks()) {
      scale.segment(oz_, S_).setConstant(prog_.cc_scale);
      lo.segment(ophi_, S_).setZero();
      if (st_.form == SaaForm::CVaR) {
        scale.segment(ophi_, S_).setConstant(prog_.cc_scale);
        scale[ot_] = prog_.cc_scale;
      }
    }
  }

  /// x columns one at a time, y column j of every scenario together, and all
  /// z together (the sigmoid rows are separable in z).
  std::vector<HessianGroup> hessian_groups() const {
    std::vector<HessianGroup> groups;
    for (Index i = 0; i < n1_; ++i) {
      HessianGroup g;
      g.columns.push_back(i);
      for (Index k = i; k < n1_; ++k) g.entries.emplace_back(k, i);
      for (Index k = 0; k < S_ * n2_; ++k) g.entries.emplace_back(oy_ + k, i);
      groups.push_back(std::move(g));
    }
    for (Index j = 0; j < n2_; ++j) {
      HessianGroup g;
      for (Index s = 0; s < S_; ++s) {
        const Index col = oy_ + s * n2_ + j;
        g.columns.push_back(col);
        for (Index k = j; k < n2_; ++k) g.entries.emplace_back(oy_ + s * n2_ + k, col);
      }
      groups.push_back(std::move(g));
    }
    if (st_.form == SaaForm::SigVaR || st_.form == SaaForm::SmoothSigmoid) {
      HessianGroup g;
      for (Index s = 0; s < S_; ++s) {
        g.columns.push_back(oz_ + s);
        g.entries.emplace_back(oz_ + s, oz_ + s);
      }
      groups.push_back(std::move(g));
    }
    return groups;
  }

  /// Forward evaluation of z, phi (and t) from x and y.
  Vec initial_point(const std::optional<WarmStart>& start) const {
    Vec v = Vec::Zero(total_);
    Vec x = start && start->x.size() > 0 ? start->x : prog_.x_start;
    if (x.size() != n1_) throw ProblemDimensionError("WarmStart: x has wrong size");
    v.head(n1_) = x.cwiseMax(prog_.x_lower).cwiseMin(prog_.x_upper);
    const bool have_y = start && start->y.size() > 0;
    if (have_y && (start->y.rows() != S_ || start->y.cols() != n2_)) {
      throw ProblemDimensionError("WarmStart: y has wrong shape");
    }
    for (Index s = 0; s < S_; ++s) {
      Vec y = have_y ? Vec(start->y.row(s).transpose()) : prog_.y_start;
      v.segment(oy_ + s * n2_, n2_) = y.cwiseMax(prog_.y_lower).cwiseMin(prog_.y_upper);
    }
    if (!has_slacks()) return v;
    Vec gx(n1_), gy(n2_);
    std::vector<double> z(static_cast<std::size_t>(S_));
    for (Index s = 0; s < S_; ++s) {
      z[static_cast<std::size_t>(s)] = cc(v, s, gx, gy);
      v[oz_ + s] = z[static_cast<std::size_t>(s)];
    }
    if (st_.form == SaaForm::CVaR) {
      v[ot_] = value_at_risk(SampleVector(z), RiskLevel(st_.alpha));
    }
    fill_slacks(v);
    return v;
  }

  void fill_slacks(Vec& v) const {
    for (Index s = 0; s < S_; ++s) {
      const double z = v[oz_ + s];
      double phi = 0.0;
      switch (st_.form) {
        case SaaForm::SigVaR:
          phi = sigvar_kernel(z, *st_.sigvar);
          break;
        case SaaForm::SmoothSigmoid:
          phi = ss_kernel(z, *st_.smooth);
          break;
        case SaaForm::CVaR:
          phi = std::max(z - v[ot_], 0.0);
          break;
        case SaaForm::Restricted:
          return;
      }
      v[ophi_ + s] = phi;
    }
  }

 private:
  VecCRef y_block(VecCRef v, Index s) const {
    return v.segment(oy_ + s * n2_, n2_);
  }

  double cc(VecCRef v, Index s, Vec& gx, Vec& gy) const {
    gx.setZero();
    gy.setZero();
    return prog_.cc_function(v.head(n1_), y_block(v, s), scen_.row(static_cast<std::size_t>(s)), gx, gy);
  }

  StochasticProgram prog_;
  ScenarioSet scen_;
  SaaStructure st_;
  Index S_ = 0, n1_ = 0, n2_ = 0;
  Index oy_ = 0, oz_ = 0, ophi_ = 0, ot_ = 0, total_ = 0;
  std::vector<Index> enforced_;
};

void check_compatible(const StochasticProgram& prog, const ScenarioSet& scen) {
  prog.validate();
  if (static_cast<Index>(scen.dim()) != prog.scenario_dim) {
    throw ProblemDimensionError(fmt::format("{}: scenario dimension {} does not match program ({})",
                                            prog.name, scen.dim(), prog.scenario_dim));
  }
}

SmoothNLP assemble(const StochasticProgram& prog, const ScenarioSet& scen, SaaStructure st,
                   const std::optional<WarmStart>& start, std::string name) {
  check_compatible(prog, scen);
  st.n1 = prog.n1;
  st.n2 = prog.n2;
  st.scenarios = static_cast<Index>(scen.size());
  if (st.exempt.empty()) st.exempt.assign(scen.size(), false);
  auto asm_ = std::make_shared<const SaaAssembly>(prog, scen, st);

  SmoothNLP nlp;
  nlp.name = std::move(name);
  nlp.layout = asm_->layout();
  nlp.m_eq = asm_->m_eq();
  nlp.m_in = asm_->m_in();
  nlp.jac_eq_pattern = asm_->eq_pattern();
  nlp.jac_in_pattern = asm_->in_pattern();
  asm_->bounds(nlp.lower, nlp.upper, nlp.scale);
  nlp.start = asm_->initial_point(start);
  nlp.hessian_groups = asm_->hessian_groups();
  nlp.objective = [asm_](VecCRef v, Vec* grad) { return asm_->objective(v, grad); };
  nlp.constraints = [asm_](VecCRef v, VecRef ce, VecRef ci, SparseRM* je, SparseRM* ji) {
    asm_->constraints(v, ce, ci, je, ji);
  };
  nlp.saa = std::make_shared<const SaaStructure>(std::move(st));
  if (nlp.layout.total() != asm_->total()) throw std::logic_error("layout does not partition variables");
  return nlp;
}

}  // namespace

SmoothNLP build_sigvar_saa(const StochasticProgram& prog, const ScenarioSet& scen,
                           const SigVaRParams& p, const RiskLevel& a,
                           const std::optional<WarmStart>& start) {
  SaaStructure st;
  st.form = SaaForm::SigVaR;
  st.alpha = a.alpha();
  st.sigvar = p;
  return assemble(prog, scen, std::move(st), start,
                  fmt::format("{}-sigvar(mu={:g},tau={:g})", prog.name, p.mu(), p.tau()));
}

SmoothNLP build_cvar_saa(const StochasticProgram& prog, const ScenarioSet& scen, const RiskLevel& a,
                         const std::optional<WarmStart>& start) {
  SaaStructure st;
  st.form = SaaForm::CVaR;
  st.alpha = a.alpha();
  return assemble(prog, scen, std::move(st), start, prog.name + "-cvar");
}

SmoothNLP build_smooth_sigmoid_saa(const StochasticProgram& prog, const ScenarioSet& scen,
                                   const SSParams& p, const RiskLevel& a,
                                   const std::optional<WarmStart>& start) {
  SaaStructure st;
  st.form = SaaForm::SmoothSigmoid;
  st.alpha = a.alpha();
  st.smooth = p;
  return assemble(prog, scen, std::move(st), start,
                  fmt::format("{}-ss(rho={:g})", prog.name, p.rho()));
}

SmoothNLP build_scenario_robust(const StochasticProgram& prog, const ScenarioSet& scen,
                                const std::optional<WarmStart>& start) {
  return build_restricted(prog, scen, {}, start);
}

SmoothNLP build_restricted(const StochasticProgram& prog, const ScenarioSet& scen,
                           std::span<const std::size_t> exempt,
                           const std::optional<WarmStart>& start) {
  SaaStructure st;
  st.form = SaaForm::Restricted;
  st.exempt.assign(scen.size(), false);
  for (std::size_t i : exempt) {
    if (i >= scen.size()) {
      throw std::out_of_range(fmt::format("build_restricted: exempt index {} out of range ({} scenarios)",
                                          i, scen.size()));
    }
    st.exempt[i] = true;
  }
  return assemble(prog, scen, std::move(st), start,
                  exempt.empty() ? prog.name + "-robust" : prog.name + "-restricted");
}

SaaSolution extract_solution(const SmoothNLP& nlp, const Vec& point) {
  if (!nlp.saa) throw std::invalid_argument("extract_solution: problem carries no SAA structure");
  if (point.size() != nlp.num_variables()) {
    throw ProblemDimensionError("extract_solution: point size does not match layout");
  }
  const auto& st = *nlp.saa;
  SaaSolution sol;
  const auto& bx = nlp.layout.block("x");
  sol.x = point.segment(bx.offset, bx.size);
  const auto& by = nlp.layout.block("y");
  sol.y.resize(st.scenarios, st.n2);
  for (Index s = 0; s < st.scenarios; ++s) {
    sol.y.row(s) = point.segment(by.offset + s * st.n2, st.n2).transpose();
  }
  if (nlp.layout.has("z")) {
    const auto& bz = nlp.layout.block("z");
    const auto& bp = nlp.layout.block("phi");
    sol.z = point.segment(bz.offset, bz.size);
    sol.phi = point.segment(bp.offset, bp.size);
  }
  if (nlp.layout.has("t")) sol.t = point[nlp.layout.block("t").offset];
  return sol;
}

void tighten_slacks(const SmoothNLP& nlp, Vec& point) {
  if (!nlp.saa) return;
  const auto& st = *nlp.saa;
  if (st.form != SaaForm::SigVaR && st.form != SaaForm::CVaR) return;
  const auto& bz = nlp.layout.block("z");
  const auto& bp = nlp.layout.block("phi");
  for (Index s = 0; s < st.scenarios; ++s) {
    const double z = point[bz.offset + s];
    point[bp.offset + s] = st.form == SaaForm::SigVaR
                               ? sigvar_kernel(z, *st.sigvar)
                               : std::max(z - point[nlp.layout.block("t").offset], 0.0);
  }
}

Vec evaluate_cc(const StochasticProgram& prog, const ScenarioSet& scen, const Vec& x, const Mat& y) {
  check_compatible(prog, scen);
  const Index S = static_cast<Index>(scen.size());
  if (x.size() != prog.n1) throw ProblemDimensionError("evaluate_cc: x has wrong size");
  const bool have_y = y.size() > 0;
  if (prog.n2 > 0 && have_y && (y.rows() != S || y.cols() != prog.n2)) {
    throw ProblemDimensionError("evaluate_cc: y has wrong shape");
  }
  Vec out(S), gx(prog.n1), gy(prog.n2);
  for (Index s = 0; s < S; ++s) {
    const Vec ys = have_y ? Vec(y.row(s).transpose()) : prog.y_start;
    gx.setZero();
    gy.setZero();
    out[s] = prog.cc_function(x, ys, scen.row(static_cast<std::size_t>(s)), gx, gy);
  }
  return out;
}

double evaluate_objective(const StochasticProgram& prog, const ScenarioSet& scen, const Vec& x,
                          const Mat& y) {
  check_compatible(prog, scen);
  Vec gx(prog.n1), gy(prog.n2);
  gx.setZero();
  const double base = prog.first_stage_cost(x, gx);
  if (!prog.recourse_cost) return base;
  const Index S = static_cast<Index>(scen.size());
  const bool have_y = y.size() > 0;
  std::vector<double> terms(static_cast<std::size_t>(S));
  for (Index s = 0; s < S; ++s) {
    const Vec ys = have_y ? Vec(y.row(s).transpose()) : prog.y_start;
    terms[static_cast<std::size_t>(s)] =
        prog.recourse_cost(x, ys, scen.row(static_cast<std::size_t>(s)), gx, gy);
  }
  return base + pairwise_sum(terms) / static_cast<double>(S);
}

}  // namespace sigvar
