#include "sigvar/nlp_solver.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <deque>
#include <map>
#include <stdexcept>
#include <utility>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <Eigen/SparseCholesky>
#include <fmt/format.h>

namespace sigvar {

std::string to_string(SolveStatus s) {
  switch (s) {
    case SolveStatus::Optimal:
      return "Optimal";
    case SolveStatus::IterLimit:
      return "IterLimit";
    case SolveStatus::Infeasible:
      return "Infeasible";
    case SolveStatus::NumericalFailure:
      return "NumericalFailure";
  }
  return "Unknown";
}

double KktResiduals::max() const { return std::max({stationarity, feasibility, complementarity}); }

std::string iteration_csv_header() { return "iter,outer,inner,obj,stat_res,feas_res"; }

std::string iteration_csv_line(const IterationRecord& r) {
  return fmt::format("{},{},{},{:.17g},{:.6e},{:.6e}", r.iter, r.outer, r.inner, r.objective,
                     r.stationarity, r.feasibility);
}

void SolverOptions::validate() const {
  if (!(kkt_tol > 0.0 && kkt_tol < 1.0)) throw std::invalid_argument("SolverOptions: kkt_tol must lie in (0, 1)");
  if (max_outer <= 0 || max_inner <= 0) throw std::invalid_argument("SolverOptions: iteration limits must be positive");
  if (!(initial_penalty > 0.0)) throw std::invalid_argument("SolverOptions: initial_penalty must be positive");
  if (!(penalty_growth > 1.0)) throw std::invalid_argument("SolverOptions: penalty_growth must exceed 1");
  if (!(multiplier_bounds > 0.0)) throw std::invalid_argument("SolverOptions: multiplier_bounds must be positive");
  if (multistart_count <= 0) throw std::invalid_argument("SolverOptions: multistart_count must be positive");
  if (lbfgs_memory <= 0) throw std::invalid_argument("SolverOptions: lbfgs_memory must be positive");
  if (!(armijo > 0.0 && armijo < 0.5)) throw std::invalid_argument("SolverOptions: armijo must lie in (0, 0.5)");
  if (!(max_penalty > initial_penalty)) throw std::invalid_argument("SolverOptions: max_penalty too small");
}

namespace {

bool all_finite(const Vec& v) { return v.allFinite(); }

/// Point evaluation of the unscaled problem.
struct Evaluation {
  double f = 0.0;
  Vec grad;
  Vec c_eq, c_in;
  SparseRM j_eq, j_in;
};

void evaluate(const SmoothNLP& nlp, const Vec& x, Evaluation& e, bool with_derivatives) {
  e.c_eq.resize(nlp.m_eq);
  e.c_in.resize(nlp.m_in);
  if (with_derivatives) {
    if (e.j_eq.nonZeros() != nlp.jac_eq_pattern.nonZeros() || e.j_eq.rows() != nlp.m_eq) {
      e.j_eq = nlp.jac_eq_pattern;
    }
    if (e.j_in.nonZeros() != nlp.jac_in_pattern.nonZeros() || e.j_in.rows() != nlp.m_in) {
      e.j_in = nlp.jac_in_pattern;
    }
    e.f = nlp.objective(x, &e.grad);
    nlp.constraints(x, e.c_eq, e.c_in, &e.j_eq, &e.j_in);
  } else {
    e.f = nlp.objective(x, nullptr);
    nlp.constraints(x, e.c_eq, e.c_in, nullptr, nullptr);
  }
  if (!std::isfinite(e.f) || !all_finite(e.c_eq) || !all_finite(e.c_in) ||
      (with_derivatives && (!all_finite(e.grad) || !e.j_eq.coeffs().allFinite() ||
                            !e.j_in.coeffs().allFinite()))) {
    throw EvaluationError("non-finite value in objective or constraints");
  }
}

Vec project(const Vec& u, const Vec& lo, const Vec& hi) { return u.cwiseMax(lo).cwiseMin(hi); }

double projected_gradient_norm(const Vec& u, const Vec& g, const Vec& lo, const Vec& hi) {
  if (u.size() == 0) return 0.0;
  return (u - project(u - g, lo, hi)).lpNorm<Eigen::Infinity>();
}

double inf_norm(const Vec& v) { return v.size() == 0 ? 0.0 : v.lpNorm<Eigen::Infinity>(); }

/// Residuals in scaled space given scaled multipliers.
KktResiduals residuals_scaled(const SmoothNLP& nlp, const Evaluation& e, const Vec& u,
                              const ProblemScaling& sc, const Vec& lam_s, const Vec& mu_s) {
  const Vec& d = sc.variables;
  // Row scaling cancels: s_E * lambda_scaled = s_f * lambda.
  Vec gl = sc.objective * e.grad;
  if (nlp.m_eq > 0) gl += e.j_eq.transpose() * sc.eq_rows.cwiseProduct(lam_s);
  if (nlp.m_in > 0) gl -= e.j_in.transpose() * sc.in_rows.cwiseProduct(mu_s);
  gl = gl.cwiseProduct(d);
  const Vec lo = nlp.lower.cwiseQuotient(d);
  const Vec hi = nlp.upper.cwiseQuotient(d);
  KktResiduals r;
  r.stationarity = projected_gradient_norm(u, gl, lo, hi);
  const Vec ce = sc.eq_rows.cwiseProduct(e.c_eq);
  const Vec ci = sc.in_rows.cwiseProduct(e.c_in);
  r.feasibility = std::max(inf_norm(ce), inf_norm((-ci).cwiseMax(0.0)));
  double comp = 0.0;
  for (Index i = 0; i < ci.size(); ++i) {
    const double m = mu_s[i];
    comp = std::max(comp, m < 0.0 ? -m : std::min(m, std::abs(ci[i])));
  }
  r.complementarity = comp;
  return r;
}

/// PHR augmented Lagrangian of the scaled problem in variables u = x / d:
///   F(u) = s_f f + rho/2 (|c_E + lam/rho|^2 + |[mu/rho - c_I]_+|^2).
class AugmentedLagrangian {
 public:
  struct State {
    Vec u;
    double F = 0.0;
    Vec g;  // dF/du
    Evaluation ev;
    Vec w_eq, w_in;  // weights of the Lagrangian gradient in x-space
  };

  AugmentedLagrangian(const SmoothNLP& nlp, const ProblemScaling& sc, double rho)
      : nlp_(nlp), sc_(sc), lam(Vec::Zero(nlp.m_eq)), mu(Vec::Zero(nlp.m_in)), rho(rho) {}

  const SmoothNLP& nlp() const { return nlp_; }
  const ProblemScaling& scaling() const { return sc_; }

  bool eval(const Vec& u, State& st) const {
    try {
      evaluate(nlp_, u.cwiseProduct(sc_.variables), st.ev, true);
    } catch (const EvaluationError&) {
      return false;
    }
    const Vec pe = sc_.eq_rows.cwiseProduct(st.ev.c_eq) + lam / rho;
    const Vec pi = (mu / rho - sc_.in_rows.cwiseProduct(st.ev.c_in)).cwiseMax(0.0);
    st.u = u;
    st.F = sc_.objective * st.ev.f + 0.5 * rho * (pe.squaredNorm() + pi.squaredNorm());
    st.w_eq = rho * sc_.eq_rows.cwiseProduct(pe);
    st.w_in = rho * sc_.in_rows.cwiseProduct(pi);
    st.g = lagrangian_gradient(st.ev, st.w_eq, st.w_in).cwiseProduct(sc_.variables);
    return std::isfinite(st.F) && st.g.allFinite();
  }

  /// s_f grad f + J_E' w_eq - J_I' w_in, in x-space.
  Vec lagrangian_gradient(const Evaluation& ev, const Vec& w_eq, const Vec& w_in) const {
    Vec gx = sc_.objective * ev.grad;
    if (nlp_.m_eq > 0) gx += ev.j_eq.transpose() * w_eq;
    if (nlp_.m_in > 0) gx -= ev.j_in.transpose() * w_in;
    return gx;
  }

 private:
  const SmoothNLP& nlp_;
  const ProblemScaling& sc_;

 public:
  Vec lam;
  Vec mu;
  double rho;
};

using State = AugmentedLagrangian::State;

struct InnerResult {
  int iterations = 0;
  double pg = 0.0;
  int merit_increases = 0;
  bool line_search_failed = false;
};

std::vector<bool> epsilon_active(const State& st, const Vec& lo, const Vec& hi, double pg) {
  const double eps = std::min(pg, 1e-3);
  std::vector<bool> active(static_cast<std::size_t>(st.u.size()), false);
  for (Index i = 0; i < st.u.size(); ++i) {
    active[static_cast<std::size_t>(i)] = (st.u[i] <= lo[i] + eps && st.g[i] > 0.0) ||
                                          (st.u[i] >= hi[i] - eps && st.g[i] < 0.0);
  }
  return active;
}

/// Projected backtracking along d; on success replaces st with the new point.
bool projected_armijo(const AugmentedLagrangian& al, State& st, const Vec& d, double step,
                      const Vec& lo, const Vec& hi, double c1, State& trial, InnerResult& res) {
  for (int k = 0; k < 60; ++k) {
    const Vec u_new = project(st.u + step * d, lo, hi);
    const double pred = st.g.dot(u_new - st.u);
    if (pred < 0.0 && al.eval(u_new, trial) && trial.F <= st.F + c1 * pred) {
      if (trial.F > st.F) ++res.merit_increases;
      std::swap(st, trial);
      return true;
    }
    step *= 0.5;
  }
  return false;
}

/// Projected L-BFGS with an epsilon-active set.
InnerResult quasi_newton(const AugmentedLagrangian& al, State& st, const Vec& lo, const Vec& hi,
                         double tol, int max_iter, const SolverOptions& opts) {
  InnerResult res;
  std::deque<Vec> S, Y;
  std::deque<double> R;
  const Index n = st.u.size();
  State trial;
  Vec d(n), q(n);
  std::vector<double> alpha_hist;
  int stall = 0;
  for (int it = 0; it < max_iter; ++it) {
    res.pg = projected_gradient_norm(st.u, st.g, lo, hi);
    if (res.pg <= tol) return res;
    const auto active = epsilon_active(st, lo, hi, res.pg);

    bool retried = false;
    while (true) {
      q = st.g;
      for (Index i = 0; i < n; ++i) {
        if (active[static_cast<std::size_t>(i)]) q[i] = 0.0;
      }
      const std::size_t m = S.size();
      alpha_hist.assign(m, 0.0);
      for (std::size_t k = m; k-- > 0;) {
        alpha_hist[k] = R[k] * S[k].dot(q);
        q -= alpha_hist[k] * Y[k];
      }
      if (m > 0) q *= S.back().dot(Y.back()) / Y.back().squaredNorm();
      for (std::size_t k = 0; k < m; ++k) {
        const double beta = R[k] * Y[k].dot(q);
        q += (alpha_hist[k] - beta) * S[k];
      }
      for (Index i = 0; i < n; ++i) d[i] = active[static_cast<std::size_t>(i)] ? -st.g[i] : -q[i];
      if (!d.allFinite() || st.g.dot(d) >= 0.0) {
        S.clear();
        Y.clear();
        R.clear();
        d = -st.g;
      }
      const double step = S.empty() ? std::min(1.0, 1.0 / std::max(inf_norm(d), 1e-300)) : 1.0;
      const Vec u_old = st.u;
      const Vec g_old = st.g;
      const double F_old = st.F;
      if (projected_armijo(al, st, d, step, lo, hi, opts.armijo, trial, res)) {
        Vec s = st.u - u_old;
        Vec y = st.g - g_old;
        const double sy = s.dot(y);
        if (sy > 1e-12 * s.norm() * y.norm()) {
          S.push_back(std::move(s));
          Y.push_back(std::move(y));
          R.push_back(1.0 / sy);
          if (static_cast<int>(S.size()) > opts.lbfgs_memory) {
            S.pop_front();
            Y.pop_front();
            R.pop_front();
          }
        }
        stall = F_old - st.F <= 1e-15 * std::max(1.0, std::abs(F_old)) ? stall + 1 : 0;
        break;
      }
      if (S.empty() || retried) {
        res.line_search_failed = true;
        res.iterations = it;
        res.pg = projected_gradient_norm(st.u, st.g, lo, hi);
        return res;
      }
      S.clear();
      Y.clear();
      R.clear();
      retried = true;
    }
    res.iterations = it + 1;
    if (stall >= 5) break;
  }
  res.pg = projected_gradient_norm(st.u, st.g, lo, hi);
  return res;
}

/// Rows with more structural entries than this enter the Newton matrix as
/// low-rank corrections instead of sparse outer products.
constexpr Index kDenseRow = 64;
// Largest coupled curvature group whose negative eigenvalues are reflected.
constexpr Index kReflectGroup = 64;

/// Replaces the lower-triangle curvature triplets of every connected group of
/// at most kReflectGroup variables by the same matrix with each eigenvalue
/// replaced by its absolute value.
void reflect_negative_curvature(std::vector<Eigen::Triplet<double>>& trips, Index n) {
  using Triplet = Eigen::Triplet<double>;
  std::vector<Index> parent(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i) parent[static_cast<std::size_t>(i)] = i;
  auto find = [&](Index i) {
    while (parent[static_cast<std::size_t>(i)] != i) {
      auto& p = parent[static_cast<std::size_t>(i)];
      p = parent[static_cast<std::size_t>(p)];
      i = p;
    }
    return i;
  };
  for (const auto& t : trips) {
    const Index a = find(t.row());
    const Index b = find(t.col());
    if (a != b) parent[static_cast<std::size_t>(std::max(a, b))] = std::min(a, b);
  }
  std::map<Index, std::vector<std::size_t>> groups;  // root -> triplet positions
  for (std::size_t k = 0; k < trips.size(); ++k) groups[find(trips[k].row())].push_back(k);

  std::vector<Triplet> out;
  out.reserve(trips.size());
  std::vector<Index> members;
  for (const auto& [root, pos] : groups) {
    members.clear();
    for (std::size_t k : pos) {
      members.push_back(trips[k].row());
      members.push_back(trips[k].col());
    }
    std::sort(members.begin(), members.end());
    members.erase(std::unique(members.begin(), members.end()), members.end());
    const Index m = static_cast<Index>(members.size());
    if (m > kReflectGroup) {
      for (std::size_t k : pos) out.push_back(trips[k]);
      continue;
    }
    auto local = [&](Index i) {
      return static_cast<Index>(std::lower_bound(members.begin(), members.end(), i) - members.begin());
    };
    Mat B = Mat::Zero(m, m);
    for (std::size_t k : pos) {
      const Index i = local(trips[k].row());
      const Index j = local(trips[k].col());
      B(i, j) += trips[k].value();
      if (i != j) B(j, i) += trips[k].value();
    }
    Eigen::SelfAdjointEigenSolver<Mat> eig(B);
    if (eig.info() != Eigen::Success || eig.eigenvalues().minCoeff() >= 0.0) {
      for (std::size_t k : pos) out.push_back(trips[k]);
      continue;
    }
    const Mat R = eig.eigenvectors() * eig.eigenvalues().cwiseAbs().asDiagonal() *
                  eig.eigenvectors().transpose();
    for (Index j = 0; j < m; ++j) {
      for (Index i = j; i < m; ++i) {
        if (R(i, j) != 0.0) out.emplace_back(members[static_cast<std::size_t>(i)],
                                             members[static_cast<std::size_t>(j)], R(i, j));
      }
    }
  }
  trips.swap(out);
}

/// Projected Newton on the augmented Lagrangian. The model Hessian is the
/// exact Gauss-Newton penalty term plus the Lagrangian curvature obtained by
/// differencing the gradient along the declared column groups.
InnerResult projected_newton(const AugmentedLagrangian& al, State& st, const Vec& lo, const Vec& hi,
                             double tol, int max_iter, const SolverOptions& opts, double& delta) {
  using Triplet = Eigen::Triplet<double>;
  using SpMat = Eigen::SparseMatrix<double>;
  const SmoothNLP& nlp = al.nlp();
  const ProblemScaling& sc = al.scaling();
  const Vec& dv = sc.variables;
  const Index n = st.u.size();
  InnerResult res;
  State trial;
  Evaluation ev_fd;
  std::vector<Triplet> trips;
  std::vector<Vec> dense;
  int stall = 0;

  for (int it = 0; it < max_iter; ++it) {
    res.pg = projected_gradient_norm(st.u, st.g, lo, hi);
    if (res.pg <= tol) return res;
    const auto active = epsilon_active(st, lo, hi, res.pg);
    auto is_active = [&](Index i) { return active[static_cast<std::size_t>(i)]; };
    trips.clear();
    dense.clear();

    // Lagrangian curvature with the penalty weights frozen at the current point.
    const Vec G0 = al.lagrangian_gradient(st.ev, st.w_eq, st.w_in);
    for (const auto& grp : nlp.hessian_groups) {
      double umax = 0.0;
      bool room_up = true;
      for (Index c : grp.columns) umax = std::max(umax, std::abs(st.u[c]));
      const double h0 = std::sqrt(std::numeric_limits<double>::epsilon()) * std::max(1.0, umax);
      for (Index c : grp.columns) room_up = room_up && st.u[c] + h0 <= hi[c];
      const double h = room_up ? h0 : -h0;
      Vec up = st.u;
      for (Index c : grp.columns) up[c] += h;
      try {
        evaluate(nlp, up.cwiseProduct(dv), ev_fd, true);
      } catch (const EvaluationError&) {
        continue;
      }
      const Vec G1 = al.lagrangian_gradient(ev_fd, st.w_eq, st.w_in);
      for (const auto& [r, c] : grp.entries) {
        if (is_active(r) || is_active(c)) continue;
        const double v = dv[r] * (G1[r] - G0[r]) / h;
        if (v != 0.0) trips.emplace_back(r, c, v);
      }
    }
    // Negative curvature is reflected (eigenvalues replaced by their absolute
    // values) within each small group of variables the curvature couples,
    // rather than shifted away globally, so it does not damp the Newton step
    // in every other direction. Larger groups fall back to the global shift.
    reflect_negative_curvature(trips, n);

    // Gauss-Newton penalty term over equality rows and the inequality rows
    // currently inside (or on the edge of) the penalty region.
    auto add_rows = [&](const SparseRM& J, const Vec& row_scale, auto&& in_penalty) {
      const double sr = std::sqrt(al.rho);
      std::vector<std::pair<Index, double>> row;
      for (Index r = 0; r < J.outerSize(); ++r) {
        if (!in_penalty(r)) continue;
        row.clear();
        for (SparseRM::InnerIterator itj(J, r); itj; ++itj) {
          if (is_active(itj.col())) continue;
          row.emplace_back(itj.col(), sr * row_scale[r] * itj.value() * dv[itj.col()]);
        }
        if (static_cast<Index>(row.size()) > kDenseRow) {
          Vec a = Vec::Zero(n);
          for (const auto& [c, v] : row) a[c] = v;
          dense.push_back(std::move(a));
          continue;
        }
        for (std::size_t i = 0; i < row.size(); ++i) {
          for (std::size_t j = 0; j <= i; ++j) {
            const auto [ci, vi] = row[i];
            const auto [cj, vj] = row[j];
            trips.emplace_back(std::max(ci, cj), std::min(ci, cj), vi * vj);
          }
        }
      }
    };
    add_rows(st.ev.j_eq, sc.eq_rows, [](Index) { return true; });
    // Rows sitting exactly on the penalty boundary count as inside it; leaving
    // them out lets the step cross the kink unseen.
    add_rows(st.ev.j_in, sc.in_rows,
             [&](Index r) { return sc.in_rows[r] * st.ev.c_in[r] <= al.mu[r] / al.rho; });

    double max_diag = 0.0;
    for (Index i = 0; i < n; ++i) trips.emplace_back(i, i, is_active(i) ? 1.0 : 0.0);
    SpMat K(n, n);
    K.setFromTriplets(trips.begin(), trips.end());
    for (Index i = 0; i < n; ++i) max_diag = std::max(max_diag, std::abs(K.coeff(i, i)));

    Vec rhs(n);
    for (Index i = 0; i < n; ++i) rhs[i] = is_active(i) ? 0.0 : -st.g[i];

    Eigen::SimplicialLDLT<SpMat, Eigen::Lower, Eigen::AMDOrdering<int>> ldlt;
    ldlt.analyzePattern(K);
    const double delta_floor = 1e-10 * std::max(1.0, max_diag);
    double dlt = delta > 0.0 ? std::max(delta / 4.0, delta_floor) : 0.0;
    bool factored = false;
    for (int attempt = 0; attempt < 40; ++attempt) {
      SpMat Kd = K;
      if (dlt > 0.0) {
        for (Index i = 0; i < n; ++i) {
          if (!is_active(i)) Kd.coeffRef(i, i) += dlt;
        }
      }
      ldlt.factorize(Kd);
      if (ldlt.info() == Eigen::Success && (ldlt.vectorD().array() > 0.0).all()) {
        factored = true;
        break;
      }
      dlt = dlt == 0.0 ? std::max(1e-8 * std::max(1.0, max_diag), delta_floor) : 10.0 * dlt;
    }
    delta = dlt;

    Vec d(n);
    if (factored) {
      Vec y = ldlt.solve(rhs);
      if (!dense.empty()) {
        // Woodbury: (K + A A')^{-1} b = y - Z (I + A' Z)^{-1} A' y with Z = K^{-1} A.
        const Index k = static_cast<Index>(dense.size());
        Mat A(n, k), Z(n, k);
        for (Index j = 0; j < k; ++j) {
          A.col(j) = dense[static_cast<std::size_t>(j)];
          Z.col(j) = ldlt.solve(A.col(j));
        }
        const Mat C = Mat::Identity(k, k) + A.transpose() * Z;
        y -= Z * C.ldlt().solve(A.transpose() * y);
      }
      d = y;
      for (Index i = 0; i < n; ++i) {
        if (is_active(i)) d[i] = -st.g[i];
      }
    }
    if (!factored || !d.allFinite() || st.g.dot(d) >= 0.0) d = -st.g;

    const double F_old = st.F;
    if (!projected_armijo(al, st, d, 1.0, lo, hi, opts.armijo, trial, res)) {
      // Fall back to a scaled projected-gradient step once before giving up.
      const Vec sd = -st.g;
      if (!projected_armijo(al, st, sd, 1.0 / std::max(inf_norm(sd), 1e-300), lo, hi, opts.armijo, trial,
                            res)) {
        res.line_search_failed = true;
        res.iterations = it;
        res.pg = projected_gradient_norm(st.u, st.g, lo, hi);
        return res;
      }
    }
    res.iterations = it + 1;
    stall = F_old - st.F <= 1e-15 * std::max(1.0, std::abs(F_old)) ? stall + 1 : 0;
    if (stall >= 5) break;
  }
  res.pg = projected_gradient_norm(st.u, st.g, lo, hi);
  return res;
}

SolveReport solve_single(const SmoothNLP& nlp, const Vec& x_start, const SolverOptions& opts,
                         const std::optional<MultiplierGuess>& guess) {
  const auto t0 = std::chrono::steady_clock::now();
  SolveReport rep;
  const Vec x0 = project(x_start, nlp.lower, nlp.upper);
  ProblemScaling sc;
  try {
    sc = ProblemScaling::from_point(nlp, x0);
  } catch (const EvaluationError& err) {
    rep.status = SolveStatus::NumericalFailure;
    rep.x = x0;
    rep.message = std::string("initial point: ") + err.what();
    return rep;
  }
  rep.scaling = sc;
  const Vec& d = sc.variables;
  const Vec lo = nlp.lower.cwiseQuotient(d);
  const Vec hi = nlp.upper.cwiseQuotient(d);
  const bool newton = opts.inner_method == InnerMethod::Newton ||
                      (opts.inner_method == InnerMethod::Automatic && !nlp.hessian_groups.empty());

  AugmentedLagrangian al(nlp, sc, opts.initial_penalty);
  if (guess) {
    // Unscaled multipliers back to the scaled problem.
    al.lam = guess->lambda_eq.cwiseQuotient(sc.eq_rows) * sc.objective;
    al.mu = (guess->lambda_in.cwiseQuotient(sc.in_rows) * sc.objective).cwiseMax(0.0);
  }
  State st;
  if (!al.eval(x0.cwiseQuotient(d), st)) {
    rep.status = SolveStatus::NumericalFailure;
    rep.x = x0;
    rep.message = "initial point: non-finite merit";
    return rep;
  }

  double inner_tol = std::max(0.5 * opts.kkt_tol, 1e-2);
  double prev_progress = std::numeric_limits<double>::infinity();
  double delta = 0.0;
  int log_line = 0;
  rep.status = SolveStatus::IterLimit;
  for (int outer = 1; outer <= opts.max_outer; ++outer) {
    const InnerResult in = newton ? projected_newton(al, st, lo, hi, inner_tol, opts.max_inner, opts, delta)
                                  : quasi_newton(al, st, lo, hi, inner_tol, opts.max_inner, opts);
    rep.inner_iterations += in.iterations;
    rep.merit_increases += in.merit_increases;
    rep.outer_iterations = outer;

    const Vec ce = sc.eq_rows.cwiseProduct(st.ev.c_eq);
    const Vec ci = sc.in_rows.cwiseProduct(st.ev.c_in);
    const double progress = std::max(inf_norm(ce), inf_norm(ci.cwiseMin(al.mu / al.rho)));
    al.lam += al.rho * ce;
    al.mu = (al.mu - al.rho * ci).cwiseMax(0.0);

    const KktResiduals r = residuals_scaled(nlp, st.ev, st.u, sc, al.lam, al.mu);
    rep.kkt = r;
    if (opts.on_iteration) {
      opts.on_iteration({++log_line, outer, in.iterations, st.ev.f, r.stationarity, r.feasibility});
    }
    if (std::max(inf_norm(al.lam), inf_norm(al.mu)) > opts.multiplier_bounds) {
      rep.status = SolveStatus::NumericalFailure;
      rep.message = "multiplier estimates exceeded bounds";
      break;
    }
    if (r.stationarity <= opts.kkt_tol && r.feasibility <= opts.kkt_tol &&
        r.complementarity <= opts.kkt_tol) {
      rep.status = SolveStatus::Optimal;
      break;
    }
    if (progress > 0.5 * prev_progress && progress > 0.1 * opts.kkt_tol) al.rho *= opts.penalty_growth;
    prev_progress = progress;
    if (al.rho > opts.max_penalty && r.feasibility > opts.kkt_tol) {
      rep.status = SolveStatus::Infeasible;
      rep.message = fmt::format("constraint violation {:.3e} persists at penalty {:.1e}", r.feasibility,
                                al.rho);
      break;
    }
    inner_tol = std::max(0.5 * opts.kkt_tol, 0.1 * inner_tol);
    // The merit changes with the multipliers; refresh the state.
    if (!al.eval(st.u, st)) {
      rep.status = SolveStatus::NumericalFailure;
      rep.message = "merit evaluation failed";
      break;
    }
  }
  if (rep.status == SolveStatus::IterLimit) rep.message = "outer iteration limit reached";

  rep.x = st.u.cwiseProduct(d);
  rep.objective = st.ev.f;
  rep.lambda_eq = al.lam.cwiseProduct(sc.eq_rows) / sc.objective;
  rep.lambda_in = al.mu.cwiseProduct(sc.in_rows) / sc.objective;
  rep.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return rep;
}

Vec perturbed_start(const SmoothNLP& nlp, const Vec& x0, int k, std::uint64_t seed) {
  const SplitMix64Stream rng(seed);
  const Index n = x0.size();
  Vec x = x0;
  for (Index i = 0; i < n; ++i) {
    const double u = rng.uniform_at(static_cast<std::uint64_t>(k) * static_cast<std::uint64_t>(n) +
                                    static_cast<std::uint64_t>(i));
    const bool bounded = std::isfinite(nlp.lower[i]) && std::isfinite(nlp.upper[i]);
    const double width = bounded ? 0.25 * (nlp.upper[i] - nlp.lower[i])
                                 : (nlp.scale.size() == n ? nlp.scale[i] : 1.0);
    x[i] += (2.0 * u - 1.0) * width;
  }
  return project(x, nlp.lower, nlp.upper);
}

}  // namespace

ProblemScaling ProblemScaling::identity(const SmoothNLP& nlp) {
  ProblemScaling sc;
  sc.variables = Vec::Ones(nlp.num_variables());
  sc.eq_rows = Vec::Ones(nlp.m_eq);
  sc.in_rows = Vec::Ones(nlp.m_in);
  return sc;
}

ProblemScaling ProblemScaling::from_point(const SmoothNLP& nlp, const Vec& x0) {
  ProblemScaling sc = identity(nlp);
  if (nlp.scale.size() == nlp.num_variables()) sc.variables = nlp.scale;
  Evaluation e;
  evaluate(nlp, x0, e, true);
  sc.objective = 1.0 / std::max(1.0, inf_norm(e.grad.cwiseProduct(sc.variables)));
  auto rows = [&](const SparseRM& J, Vec& out) {
    for (Index r = 0; r < J.outerSize(); ++r) {
      double m = 0.0;
      for (SparseRM::InnerIterator it(J, r); it; ++it) {
        m = std::max(m, std::abs(it.value() * sc.variables[it.col()]));
      }
      out[r] = 1.0 / std::max(1.0, m);
    }
  };
  rows(e.j_eq, sc.eq_rows);
  rows(e.j_in, sc.in_rows);
  return sc;
}

SolveReport solve(const SmoothNLP& nlp, const Vec& x0, const SolverOptions& opts,
                  const std::optional<MultiplierGuess>& guess) {
  opts.validate();
  if (x0.size() != nlp.num_variables()) {
    throw ProblemDimensionError(fmt::format("solve: start has size {}, problem has {} variables",
                                            x0.size(), nlp.num_variables()));
  }
  if (guess && (guess->lambda_eq.size() != nlp.m_eq || guess->lambda_in.size() != nlp.m_in)) {
    throw ProblemDimensionError("solve: multiplier guess does not match the constraint rows");
  }
  SolveReport best;
  bool have_best = false;
  auto better = [](const SolveReport& a, const SolveReport& b) {
    const bool ao = a.status == SolveStatus::Optimal;
    const bool bo = b.status == SolveStatus::Optimal;
    if (ao != bo) return ao;
    if (ao) return a.objective < b.objective;
    return a.kkt.feasibility < b.kkt.feasibility;
  };
  double wall = 0.0;
  for (int k = 0; k < opts.multistart_count; ++k) {
    const Vec start = k == 0 ? Vec(x0) : perturbed_start(nlp, x0, k, opts.seed);
    SolveReport rep = solve_single(nlp, start, opts, guess);
    rep.start_index = k;
    wall += rep.wall_time;
    if (!have_best || better(rep, best)) {
      best = std::move(rep);
      have_best = true;
    }
  }
  best.wall_time = wall;
  return best;
}

KktResiduals check_kkt(const SmoothNLP& nlp, const Vec& x, const Vec& lambda_eq,
                       const Vec& lambda_in, const ProblemScaling& sc) {
  if (x.size() != nlp.num_variables() || lambda_eq.size() != nlp.m_eq || lambda_in.size() != nlp.m_in ||
      sc.variables.size() != nlp.num_variables() || sc.eq_rows.size() != nlp.m_eq ||
      sc.in_rows.size() != nlp.m_in) {
    throw ProblemDimensionError("check_kkt: dimension mismatch");
  }
  Evaluation e;
  evaluate(nlp, x, e, true);
  const Vec lam_s = lambda_eq.cwiseQuotient(sc.eq_rows) * sc.objective;
  const Vec mu_s = lambda_in.cwiseQuotient(sc.in_rows) * sc.objective;
  return residuals_scaled(nlp, e, x.cwiseQuotient(sc.variables), sc, lam_s, mu_s);
}

KktResiduals check_kkt(const SmoothNLP& nlp, const Vec& x, const Vec& lambda_eq,
                       const Vec& lambda_in) {
  return check_kkt(nlp, x, lambda_eq, lambda_in, ProblemScaling::identity(nlp));
}

double finite_diff_check(const SmoothNLP& nlp, const Vec& x) {
  Evaluation base;
  evaluate(nlp, x, base, true);
  const Eigen::SparseMatrix<double> jeq_c(base.j_eq);
  const Eigen::SparseMatrix<double> jin_c(base.j_in);
  const double h0 = std::cbrt(std::numeric_limits<double>::epsilon());
  Evaluation plus, minus;
  double worst = 0.0;
  auto rel = [](double fd, double an) { return std::abs(fd - an) / std::max(1.0, std::abs(an)); };
  Vec an_eq(nlp.m_eq), an_in(nlp.m_in);
  for (Index i = 0; i < x.size(); ++i) {
    const double h = h0 * std::max(1.0, std::abs(x[i]));
    Vec xp = x, xm = x;
    xp[i] += h;
    xm[i] -= h;
    evaluate(nlp, xp, plus, false);
    evaluate(nlp, xm, minus, false);
    const double width = xp[i] - xm[i];
    worst = std::max(worst, rel((plus.f - minus.f) / width, base.grad[i]));
    an_eq.setZero();
    an_in.setZero();
    for (Eigen::SparseMatrix<double>::InnerIterator it(jeq_c, i); it; ++it) an_eq[it.row()] = it.value();
    for (Eigen::SparseMatrix<double>::InnerIterator it(jin_c, i); it; ++it) an_in[it.row()] = it.value();
    for (Index r = 0; r < nlp.m_eq; ++r) {
      worst = std::max(worst, rel((plus.c_eq[r] - minus.c_eq[r]) / width, an_eq[r]));
    }
    for (Index r = 0; r < nlp.m_in; ++r) {
      worst = std::max(worst, rel((plus.c_in[r] - minus.c_in[r]) / width, an_in[r]));
    }
  }
  return worst;
}

}  // namespace sigvar
