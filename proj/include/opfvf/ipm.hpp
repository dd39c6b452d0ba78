#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>

#include "opfvf/lp.hpp"

namespace opfvf {

// Primal-dual path-following interior-point solver (Mehrotra
// predictor-corrector). Inequality rows get slack columns; free variables
// are handled directly through the regularized augmented system
//
//   [ -(G + dI)  A' ] [dx]   [ r_dual ]
//   [     A      rI ] [dy] = [ r_primal ],   G = Z/(x-lo) + S/(hi-x),
//
// factorized with a sparse LDL'. The static regularization is compensated
// by iterative refinement against the unregularized system.

struct IpmOptions {
  double tol = 1e-8;
  int max_iter = 200;
  double step_fraction = 0.9995;
  bool collect_trace = true;
};

namespace ipm_detail {

constexpr double kInf = std::numeric_limits<double>::infinity();

struct StdProblem {
  // min c'x s.t. Ax = b, lo <= x <= hi, after presolve and slack insertion
  Eigen::SparseMatrix<double> a;
  Eigen::VectorXd b, c, lo, hi;
  double obj_offset = 0.0;

  // equilibration scales: a_scaled = R A C with x = C x_scaled, y = R y_scaled
  Eigen::VectorXd row_scale, col_scale;

  int n() const { return static_cast<int>(c.size()); }
  int m() const { return static_cast<int>(b.size()); }

  // bookkeeping back to the original LP
  std::vector<int> col_of_var;      // original var -> std column, -1 if removed
  std::vector<double> fixed_value;  // value for removed vars
  std::vector<int> row_of_con;      // original row -> std row, -1 if dropped
  int n_orig = 0;
  int m_orig = 0;
};

// Geometric-mean equilibration. Badly scaled OPF data (unit balance rows
// against susceptances of 10^2 and costs of 10^3) otherwise pushes the
// augmented system towards singularity long before the duals converge.
inline void equilibrate(StdProblem& sp) {
  const int m = sp.m();
  const int n = sp.n();
  sp.row_scale = Eigen::VectorXd::Ones(m);
  sp.col_scale = Eigen::VectorXd::Ones(n);
  if (sp.a.nonZeros() == 0) return;

  for (int pass = 0; pass < 3; ++pass) {
    Eigen::VectorXd row_max = Eigen::VectorXd::Zero(m), row_min = Eigen::VectorXd::Constant(m, 1e300);
    Eigen::VectorXd col_max = Eigen::VectorXd::Zero(n), col_min = Eigen::VectorXd::Constant(n, 1e300);
    for (int col = 0; col < sp.a.outerSize(); ++col)
      for (Eigen::SparseMatrix<double>::InnerIterator it(sp.a, col); it; ++it) {
        const double v = std::abs(it.value()) * sp.row_scale[it.row()] * sp.col_scale[col];
        if (v == 0.0) continue;
        row_max[it.row()] = std::max(row_max[it.row()], v);
        row_min[it.row()] = std::min(row_min[it.row()], v);
        col_max[col] = std::max(col_max[col], v);
        col_min[col] = std::min(col_min[col], v);
      }
    for (int i = 0; i < m; ++i)
      if (row_max[i] > 0.0) sp.row_scale[i] /= std::sqrt(row_max[i] * row_min[i]);
    for (int j = 0; j < n; ++j)
      if (col_max[j] > 0.0) sp.col_scale[j] /= std::sqrt(col_max[j] * col_min[j]);
  }

  for (int col = 0; col < sp.a.outerSize(); ++col)
    for (Eigen::SparseMatrix<double>::InnerIterator it(sp.a, col); it; ++it)
      it.valueRef() *= sp.row_scale[it.row()] * sp.col_scale[col];
  sp.b = sp.b.cwiseProduct(sp.row_scale);
  sp.c = sp.c.cwiseProduct(sp.col_scale);
  for (int j = 0; j < n; ++j) {
    if (std::isfinite(sp.lo[j])) sp.lo[j] /= sp.col_scale[j];
    if (std::isfinite(sp.hi[j])) sp.hi[j] /= sp.col_scale[j];
  }
}

enum class PresolveResult { Reduced, Infeasible, Unbounded };

inline PresolveResult standardize(const LinearProgram& lp, double feas_tol, StdProblem& out) {
  const int n0 = lp.num_vars();
  const int m0 = lp.num_rows();
  out.n_orig = n0;
  out.m_orig = m0;
  out.col_of_var.assign(n0, -1);
  out.fixed_value.assign(n0, 0.0);
  out.row_of_con.assign(m0, -1);

  // column occupancy over kept rows (all rows initially kept)
  std::vector<char> var_removed(n0, 0);
  std::vector<char> row_removed(m0, 0);
  std::vector<double> rhs_adj(lp.rhs);

  // fixed variables are substituted out; empty columns get clamped to their
  // optimal bound; iterate with empty-row removal until stable
  bool changed = true;
  while (changed) {
    changed = false;
    std::vector<int> col_count(n0, 0);
    for (int i = 0; i < m0; ++i) {
      if (row_removed[i]) continue;
      for (auto [col, coef] : lp.rows[i])
        if (!var_removed[col] && coef != 0.0) ++col_count[col];
    }
    for (int j = 0; j < n0; ++j) {
      if (var_removed[j]) continue;
      const bool fixed = lp.hi[j] - lp.lo[j] <= 1e-12;
      if (fixed) {
        var_removed[j] = 1;
        out.fixed_value[j] = 0.5 * (lp.lo[j] + lp.hi[j]);
        changed = true;
      } else if (col_count[j] == 0) {
        double v;
        if (lp.c[j] > 0.0) {
          if (!std::isfinite(lp.lo[j])) return PresolveResult::Unbounded;
          v = lp.lo[j];
        } else if (lp.c[j] < 0.0) {
          if (!std::isfinite(lp.hi[j])) return PresolveResult::Unbounded;
          v = lp.hi[j];
        } else {
          v = std::clamp(0.0, lp.lo[j], lp.hi[j]);
        }
        var_removed[j] = 1;
        out.fixed_value[j] = v;
        changed = true;
      }
    }
    // substitute removed vars into rhs, then drop rows that became empty
    for (int i = 0; i < m0; ++i) {
      if (row_removed[i]) continue;
      double adj = lp.rhs[i];
      bool empty = true;
      for (auto [col, coef] : lp.rows[i]) {
        if (coef == 0.0) continue;
        if (var_removed[col])
          adj -= coef * out.fixed_value[col];
        else
          empty = false;
      }
      rhs_adj[i] = adj;
      if (empty) {
        const double b = adj;
        switch (lp.kinds[i]) {
          case RowKind::Equal:
            if (std::abs(b) > feas_tol) return PresolveResult::Infeasible;
            break;
          case RowKind::LessEqual:
            if (b < -feas_tol) return PresolveResult::Infeasible;
            break;
          case RowKind::GreaterEqual:
            if (b > feas_tol) return PresolveResult::Infeasible;
            break;
        }
        row_removed[i] = 1;
        changed = true;
      }
    }
  }

  // assign std columns: kept originals first, then one slack per inequality
  int n = 0;
  for (int j = 0; j < n0; ++j)
    if (!var_removed[j]) out.col_of_var[j] = n++;
  int m = 0;
  int n_slack = 0;
  for (int i = 0; i < m0; ++i) {
    if (row_removed[i]) continue;
    out.row_of_con[i] = m++;
    if (lp.kinds[i] != RowKind::Equal) ++n_slack;
  }

  out.c = Eigen::VectorXd::Zero(n + n_slack);
  out.lo = Eigen::VectorXd::Constant(n + n_slack, -kInf);
  out.hi = Eigen::VectorXd::Constant(n + n_slack, kInf);
  out.b = Eigen::VectorXd::Zero(m);
  out.obj_offset = 0.0;
  for (int j = 0; j < n0; ++j) {
    if (var_removed[j]) {
      out.obj_offset += lp.c[j] * out.fixed_value[j];
    } else {
      const int col = out.col_of_var[j];
      out.c[col] = lp.c[j];
      out.lo[col] = lp.lo[j];
      out.hi[col] = lp.hi[j];
    }
  }

  std::vector<Eigen::Triplet<double>> trips;
  int slack = n;
  for (int i = 0; i < m0; ++i) {
    const int row = out.row_of_con[i];
    if (row < 0) continue;
    out.b[row] = rhs_adj[i];
    for (auto [col, coef] : lp.rows[i])
      if (!var_removed[col] && coef != 0.0)
        trips.emplace_back(row, out.col_of_var[col], coef);
    if (lp.kinds[i] == RowKind::LessEqual) {
      trips.emplace_back(row, slack, 1.0);
      out.lo[slack] = 0.0;
      ++slack;
    } else if (lp.kinds[i] == RowKind::GreaterEqual) {
      trips.emplace_back(row, slack, -1.0);
      out.lo[slack] = 0.0;
      ++slack;
    }
  }
  out.a.resize(m, n + n_slack);
  out.a.setFromTriplets(trips.begin(), trips.end());
  return PresolveResult::Reduced;
}

// One augmented-system solve with two rounds of iterative refinement
// against the unregularized matrix.
struct AugmentedSolver {
  const Eigen::SparseMatrix<double>* a = nullptr;
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt;
  Eigen::SparseMatrix<double> k;
  double delta = 0.0;
  double rho = 0.0;
  int n = 0, m = 0;
  bool ok = false;

  void factorize(const Eigen::SparseMatrix<double>& amat, const Eigen::VectorXd& g,
                 double delta_reg, double rho_reg) {
    a = &amat;
    n = static_cast<int>(amat.cols());
    m = static_cast<int>(amat.rows());
    delta = delta_reg;
    rho = rho_reg;

    std::vector<Eigen::Triplet<double>> trips;
    trips.reserve(static_cast<std::size_t>(amat.nonZeros()) + n + m);
    for (int j = 0; j < n; ++j) trips.emplace_back(j, j, -(g[j] + delta));
    for (int col = 0; col < amat.outerSize(); ++col)
      for (Eigen::SparseMatrix<double>::InnerIterator it(amat, col); it; ++it) {
        // lower triangle of the symmetric K: rows block sits below columns block
        trips.emplace_back(n + static_cast<int>(it.row()), col, it.value());
      }
    for (int i = 0; i < m; ++i) trips.emplace_back(n + i, n + i, rho);
    k.resize(n + m, n + m);
    k.setFromTriplets(trips.begin(), trips.end());

    ldlt.compute(k.selfadjointView<Eigen::Lower>());
    ok = ldlt.info() == Eigen::Success;
  }

  // solves [-G A'; A 0] sol = rhs
  Eigen::VectorXd solve(const Eigen::VectorXd& rhs) const {
    Eigen::SparseMatrix<double> ksym = k.selfadjointView<Eigen::Lower>();
    Eigen::VectorXd sol = ldlt.solve(rhs);
    for (int pass = 0; pass < 3; ++pass) {
      Eigen::VectorXd k0_sol = ksym * sol;
      k0_sol.head(n) += delta * sol.head(n);
      k0_sol.tail(m) -= rho * sol.tail(m);
      Eigen::VectorXd resid = rhs - k0_sol;
      if (resid.lpNorm<Eigen::Infinity>() < 1e-14 * (1.0 + rhs.lpNorm<Eigen::Infinity>())) break;
      sol += ldlt.solve(resid);
    }
    return sol;
  }
};

} // namespace ipm_detail

inline LpSolution solve(const LinearProgram& lp, const IpmOptions& opts = {}) {
  using namespace ipm_detail;
  lp.check_valid();
  if (opts.tol <= 0.0) throw std::invalid_argument("ipm: tol must be positive");

  LpSolution result;
  result.x = Eigen::VectorXd::Zero(lp.num_vars());
  result.y = Eigen::VectorXd::Zero(lp.num_rows());
  result.reduced_costs = Eigen::VectorXd::Zero(lp.num_vars());

  StdProblem sp;
  const PresolveResult pre = standardize(lp, 1e-9, sp);
  if (pre == PresolveResult::Infeasible) {
    result.status = LpStatus::Infeasible;
    return result;
  }
  if (pre == PresolveResult::Unbounded) {
    result.status = LpStatus::Unbounded;
    return result;
  }
  equilibrate(sp);

  const int n = sp.n();
  const int m = sp.m();
  const Eigen::SparseMatrix<double>& a = sp.a;
  const Eigen::SparseMatrix<double> at = a.transpose();

  std::vector<char> has_lo(n), has_hi(n);
  int n_bounded = 0;
  for (int j = 0; j < n; ++j) {
    has_lo[j] = std::isfinite(sp.lo[j]);
    has_hi[j] = std::isfinite(sp.hi[j]);
    n_bounded += has_lo[j] + has_hi[j];
  }

  const double bnorm = m > 0 ? sp.b.lpNorm<Eigen::Infinity>() : 0.0;
  const double cnorm = n > 0 ? sp.c.lpNorm<Eigen::Infinity>() : 0.0;
  double amax = 1.0;
  for (int col = 0; col < a.outerSize(); ++col)
    for (Eigen::SparseMatrix<double>::InnerIterator it(a, col); it; ++it)
      amax = std::max(amax, std::abs(it.value()));
  const double reg = 1e-10 * amax;

  // finalize: unscale and map the standardized iterate back onto the
  // original LP
  auto finish = [&](LpStatus status, const Eigen::VectorXd& x, const Eigen::VectorXd& y,
                    const Eigen::VectorXd& z, const Eigen::VectorXd& s, int iters) {
    result.status = status;
    result.iterations = iters;
    for (int j = 0; j < sp.n_orig; ++j) {
      const int col = sp.col_of_var[j];
      result.x[j] = col >= 0 ? x[col] * sp.col_scale[col] : sp.fixed_value[j];
    }
    for (int i = 0; i < sp.m_orig; ++i) {
      const int row = sp.row_of_con[i];
      result.y[i] = row >= 0 ? y[row] * sp.row_scale[row] : 0.0;
    }
    for (int j = 0; j < sp.n_orig; ++j) {
      const int col = sp.col_of_var[j];
      if (col >= 0) {
        result.reduced_costs[j] =
            ((has_lo[col] ? z[col] : 0.0) - (has_hi[col] ? s[col] : 0.0)) / sp.col_scale[col];
      } else {
        double aty = 0.0; // removed columns: rc from the original column
        for (int i = 0; i < sp.m_orig; ++i) {
          for (auto [col2, coef] : lp.rows[i])
            if (col2 == j) aty += coef * result.y[i];
        }
        result.reduced_costs[j] = lp.c[j] - aty;
      }
    }
    double obj = 0.0;
    for (int j = 0; j < sp.n_orig; ++j) obj += lp.c[j] * result.x[j];
    result.objective = obj;
    return result;
  };

  if (n == 0) {
    // everything presolved away; original rows all dropped as consistent
    return finish(LpStatus::Optimal, Eigen::VectorXd(), Eigen::VectorXd::Zero(m),
                  Eigen::VectorXd(), Eigen::VectorXd(), 0);
  }

  const double step_frac_base = opts.step_fraction;
  Eigen::VectorXd pl(n), pu(n), g(n);
  AugmentedSolver aug;

  auto dual_objective = [&](const Eigen::VectorXd& yv, const Eigen::VectorXd& zv,
                            const Eigen::VectorXd& sv) {
    double obj = sp.b.dot(yv);
    for (int j = 0; j < n; ++j) {
      if (has_lo[j]) obj += sp.lo[j] * zv[j];
      if (has_hi[j]) obj -= sp.hi[j] * sv[j];
    }
    return obj + sp.obj_offset;
  };

  // Farkas-style certificate check: sup_{lo<=x<=hi} y'Ax < y'b proves
  // primal infeasibility.
  auto primal_infeasible_certificate = [&](const Eigen::VectorXd& yv) {
    const double ynorm = yv.lpNorm<Eigen::Infinity>();
    if (ynorm < 1e-12) return false;
    Eigen::VectorXd yn = yv / ynorm;
    Eigen::VectorXd v = at * yn;
    const double eps_v = 1e-9 * amax;
    double support = 0.0;
    for (int j = 0; j < n; ++j) {
      if (v[j] > eps_v) {
        if (!has_hi[j]) return false;
        support += v[j] * sp.hi[j];
      } else if (v[j] < -eps_v) {
        if (!has_lo[j]) return false;
        support += v[j] * sp.lo[j];
      }
    }
    return sp.b.dot(yn) - support > 1e-6 * (1.0 + bnorm);
  };

  auto dual_infeasible_certificate = [&](const Eigen::VectorXd& xv) {
    const double xnorm = xv.lpNorm<Eigen::Infinity>();
    if (xnorm < 1e6) return false;
    Eigen::VectorXd d = xv / xnorm;
    for (int j = 0; j < n; ++j) {
      if (has_lo[j] && d[j] < -1e-8) return false;
      if (has_hi[j] && d[j] > 1e-8) return false;
    }
    if ((a * d).lpNorm<Eigen::Infinity>() > 1e-7 * amax) return false;
    return sp.c.dot(d) < -1e-7 * (1.0 + cnorm);
  };

  struct Residuals {
    double pinf = 0.0, dinf = 0.0, comp = 0.0, mu = 0.0, pobj = 0.0, dobj = 0.0;
    double score() const { return std::max({pinf, dinf, comp}); }
  };
  auto clamp_interior = [&](Eigen::VectorXd& xv, Eigen::VectorXd& zv, Eigen::VectorXd& sv) {
    // rounding can push the iterate out once bound gaps reach machine scale
    for (int j = 0; j < n; ++j) {
      if (has_lo[j] && xv[j] < sp.lo[j]) xv[j] = sp.lo[j];
      if (has_hi[j] && xv[j] > sp.hi[j]) xv[j] = sp.hi[j];
      if (has_lo[j] && zv[j] <= 0.0) zv[j] = 1e-13;
      if (has_hi[j] && sv[j] <= 0.0) sv[j] = 1e-13;
    }
  };
  auto residuals_at = [&](const Eigen::VectorXd& xv, const Eigen::VectorXd& yv,
                          const Eigen::VectorXd& zv, const Eigen::VectorXd& sv) {
    Residuals r;
    Eigen::VectorXd rp = sp.b - a * xv;
    Eigen::VectorXd rd = sp.c - at * yv;
    double mu = 0.0;
    for (int j = 0; j < n; ++j) {
      rd[j] -= (has_lo[j] ? zv[j] : 0.0) - (has_hi[j] ? sv[j] : 0.0);
      if (has_lo[j]) mu += std::max(xv[j] - sp.lo[j], 0.0) * zv[j];
      if (has_hi[j]) mu += std::max(sp.hi[j] - xv[j], 0.0) * sv[j];
    }
    r.pobj = sp.c.dot(xv) + sp.obj_offset;
    r.dobj = dual_objective(yv, zv, sv);
    r.pinf = m > 0 ? rp.lpNorm<Eigen::Infinity>() / (1.0 + bnorm) : 0.0;
    r.dinf = rd.lpNorm<Eigen::Infinity>() / (1.0 + cnorm);
    r.mu = n_bounded > 0 ? mu / n_bounded : 0.0;
    r.comp = mu / (1.0 + std::abs(r.pobj));
    return r;
  };

  struct Iterate {
    Eigen::VectorXd x, y, z, s;
  };

  // Mehrotra-style starting point: least-squares primal and dual estimates
  // pushed into the interior of the bounds.
  auto mehrotra_start = [&]() {
    Iterate it;
    it.x.resize(n);
    it.y = Eigen::VectorXd::Zero(m);
    it.z = Eigen::VectorXd::Zero(n);
    it.s = Eigen::VectorXd::Zero(n);
    AugmentedSolver init;
    init.factorize(a, Eigen::VectorXd::Ones(n), reg, reg);
    Eigen::VectorXd xhat = Eigen::VectorXd::Zero(n);
    Eigen::VectorXd zhat = sp.c;
    if (init.ok) {
      Eigen::VectorXd rhs1(n + m);
      rhs1.head(n).setZero();
      rhs1.tail(m) = sp.b;
      xhat = init.solve(rhs1).head(n); // argmin ||x|| s.t. Ax = b
      Eigen::VectorXd rhs2(n + m);
      rhs2.head(n) = sp.c;
      rhs2.tail(m).setZero();
      Eigen::VectorXd sol2 = init.solve(rhs2);
      it.y = sol2.tail(m);             // least-squares dual
      zhat = sp.c - at * it.y;
    }
    for (int j = 0; j < n; ++j) {
      if (has_lo[j] && has_hi[j]) {
        const double pad = 0.1 * (sp.hi[j] - sp.lo[j]);
        it.x[j] = std::clamp(xhat[j], sp.lo[j] + pad, sp.hi[j] - pad);
      } else if (has_lo[j]) {
        it.x[j] = std::max(xhat[j], sp.lo[j] + 1.0);
      } else if (has_hi[j]) {
        it.x[j] = std::min(xhat[j], sp.hi[j] - 1.0);
      } else {
        it.x[j] = xhat[j];
      }
      const double shift = 0.1 * (1.0 + std::abs(zhat[j]));
      if (has_lo[j]) it.z[j] = std::max(zhat[j], 0.0) + shift;
      if (has_hi[j]) it.s[j] = std::max(-zhat[j], 0.0) + shift;
    }
    return it;
  };

  // plain interior start used when the first trajectory jams on a
  // degenerate face
  auto naive_start = [&]() {
    Iterate it;
    it.x.resize(n);
    it.y = Eigen::VectorXd::Zero(m);
    it.z = Eigen::VectorXd::Zero(n);
    it.s = Eigen::VectorXd::Zero(n);
    const double unit = 1.0 + cnorm;
    for (int j = 0; j < n; ++j) {
      if (has_lo[j] && has_hi[j])
        it.x[j] = 0.5 * (sp.lo[j] + sp.hi[j]);
      else if (has_lo[j])
        it.x[j] = sp.lo[j] + 1.0;
      else if (has_hi[j])
        it.x[j] = sp.hi[j] - 1.0;
      else
        it.x[j] = 0.0;
      if (has_lo[j]) it.z[j] = unit;
      if (has_hi[j]) it.s[j] = unit;
    }
    return it;
  };

  struct AttemptOutcome {
    LpStatus status = LpStatus::IterationLimit;
    Iterate at;          // iterate to report for optimal/certificate exits
    Iterate best;        // lowest-score iterate seen
    Residuals best_res;
    double best_score = std::numeric_limits<double>::infinity();
    int iters = 0;
  };

  auto run_attempt = [&](Iterate it, double step_frac, int max_iter) {
    AttemptOutcome out;
    Eigen::VectorXd& x = it.x;
    Eigen::VectorXd& y = it.y;
    Eigen::VectorXd& z = it.z;
    Eigen::VectorXd& s = it.s;
    out.best = it;

    int iter = 0;
    for (; iter < max_iter; ++iter) {
      clamp_interior(x, z, s);
      for (int j = 0; j < n; ++j) {
        pl[j] = has_lo[j] ? std::max(x[j] - sp.lo[j], 1e-13 * (1.0 + std::abs(sp.lo[j]))) : 1.0;
        pu[j] = has_hi[j] ? std::max(sp.hi[j] - x[j], 1e-13 * (1.0 + std::abs(sp.hi[j]))) : 1.0;
      }

      const Residuals res = residuals_at(x, y, z, s);
      const double mu = res.mu;
      Eigen::VectorXd rp = sp.b - a * x;
      Eigen::VectorXd rd = sp.c - at * y;
      for (int j = 0; j < n; ++j) rd[j] -= (has_lo[j] ? z[j] : 0.0) - (has_hi[j] ? s[j] : 0.0);

      if (opts.collect_trace)
        result.trace.push_back({res.pobj, res.dobj, res.mu, res.pinf, res.dinf});

      if (res.score() < out.best_score) {
        out.best_score = res.score();
        out.best_res = res;
        out.best = it;
      }

      if (res.pinf <= opts.tol && res.dinf <= opts.tol && res.comp <= opts.tol) {
        out.status = LpStatus::Optimal;
        out.at = it;
        out.iters = iter;
        return out;
      }

      if (iter >= 3 && res.pinf > 10.0 * opts.tol && primal_infeasible_certificate(y)) {
        out.status = LpStatus::Infeasible;
        out.at = it;
        out.iters = iter;
        return out;
      }
      if (iter >= 3 && dual_infeasible_certificate(x)) {
        out.status = LpStatus::Unbounded;
        out.at = it;
        out.iters = iter;
        return out;
      }

      for (int j = 0; j < n; ++j)
        g[j] = (has_lo[j] ? z[j] / pl[j] : 0.0) + (has_hi[j] ? s[j] / pu[j] : 0.0);

      aug.factorize(a, g, reg, reg);
      if (!aug.ok) {
        // escalate regularization before giving up
        aug.factorize(a, g, 1e-6 * amax, 1e-6 * amax);
        if (!aug.ok) break;
      }

      auto solve_direction = [&](const Eigen::VectorXd& rcl, const Eigen::VectorXd& rcu,
                                 Eigen::VectorXd& dx, Eigen::VectorXd& dy, Eigen::VectorXd& dz,
                                 Eigen::VectorXd& ds) {
        Eigen::VectorXd rhs(n + m);
        for (int j = 0; j < n; ++j) {
          double r = rd[j];
          if (has_lo[j]) r -= rcl[j] / pl[j];
          if (has_hi[j]) r += rcu[j] / pu[j];
          rhs[j] = r;
        }
        rhs.tail(m) = rp;
        Eigen::VectorXd sol = aug.solve(rhs);
        dx = sol.head(n);
        dy = sol.tail(m);
        dz.setZero(n);
        ds.setZero(n);
        for (int j = 0; j < n; ++j) {
          if (has_lo[j]) dz[j] = (rcl[j] - z[j] * dx[j]) / pl[j];
          if (has_hi[j]) ds[j] = (rcu[j] + s[j] * dx[j]) / pu[j];
        }
      };

      auto max_primal_step = [&](const Eigen::VectorXd& dx) {
        double alpha = 1.0;
        for (int j = 0; j < n; ++j) {
          if (has_lo[j] && dx[j] < 0.0) alpha = std::min(alpha, -pl[j] / dx[j]);
          if (has_hi[j] && dx[j] > 0.0) alpha = std::min(alpha, pu[j] / dx[j]);
        }
        return alpha;
      };
      auto max_dual_step = [&](const Eigen::VectorXd& dz, const Eigen::VectorXd& ds) {
        double alpha = 1.0;
        for (int j = 0; j < n; ++j) {
          if (has_lo[j] && dz[j] < 0.0) alpha = std::min(alpha, -z[j] / dz[j]);
          if (has_hi[j] && ds[j] < 0.0) alpha = std::min(alpha, -s[j] / ds[j]);
        }
        return alpha;
      };

      // predictor
      Eigen::VectorXd rcl(n), rcu(n);
      for (int j = 0; j < n; ++j) {
        rcl[j] = has_lo[j] ? -pl[j] * z[j] : 0.0;
        rcu[j] = has_hi[j] ? -pu[j] * s[j] : 0.0;
      }
      Eigen::VectorXd dxa, dya, dza, dsa;
      solve_direction(rcl, rcu, dxa, dya, dza, dsa);
      const double ap_aff = max_primal_step(dxa);
      const double ad_aff = max_dual_step(dza, dsa);

      double mu_aff = 0.0;
      if (n_bounded > 0) {
        for (int j = 0; j < n; ++j) {
          if (has_lo[j]) mu_aff += (pl[j] + ap_aff * dxa[j]) * (z[j] + ad_aff * dza[j]);
          if (has_hi[j]) mu_aff += (pu[j] - ap_aff * dxa[j]) * (s[j] + ad_aff * dsa[j]);
        }
        mu_aff /= n_bounded;
      }
      const double ratio = mu > 0.0 ? mu_aff / mu : 0.0;
      const double sigma = std::clamp(ratio * ratio * ratio, 1e-8, 1.0);

      // corrector: centering plus second-order terms
      for (int j = 0; j < n; ++j) {
        if (has_lo[j]) rcl[j] = sigma * mu - pl[j] * z[j] - dxa[j] * dza[j];
        if (has_hi[j]) rcu[j] = sigma * mu - pu[j] * s[j] + dxa[j] * dsa[j];
      }
      Eigen::VectorXd dx, dy, dz, ds;
      solve_direction(rcl, rcu, dx, dy, dz, ds);

      double ap = std::min(1.0, step_frac * max_primal_step(dx));
      double ad = std::min(1.0, step_frac * max_dual_step(dz, ds));

      // Near convergence the factorization can lose the direction entirely;
      // never accept a step that throws away an almost-converged iterate.
      bool accepted = false;
      for (int backoff = 0; backoff < 8; ++backoff) {
        Eigen::VectorXd tx = x + ap * dx;
        Eigen::VectorXd ty = y + ad * dy;
        Eigen::VectorXd tz = z + ad * dz;
        Eigen::VectorXd ts = s + ad * ds;
        clamp_interior(tx, tz, ts);
        const Residuals trial = residuals_at(tx, ty, tz, ts);
        const bool destructive =
            out.best_score < 1e-6 && trial.score() > 10.0 * std::max(res.score(), opts.tol);
        if (!destructive) {
          x = std::move(tx);
          y = std::move(ty);
          z = std::move(tz);
          s = std::move(ts);
          accepted = true;
          break;
        }
        ap *= 0.5;
        ad *= 0.5;
      }
      if (!accepted) break;                // only destructive steps remain
      if (ap < 1e-10 && ad < 1e-10) break; // numerically stuck
    }

    out.iters = iter;
    out.at = it;
    return out;
  };

  AttemptOutcome outcome = run_attempt(mehrotra_start(), step_frac_base, opts.max_iter);
  int total_iters = outcome.iters;
  if (outcome.status == LpStatus::IterationLimit && outcome.best_score > opts.tol) {
    // jammed trajectory: retry once from a plain interior point with a more
    // conservative step fraction
    AttemptOutcome retry =
        run_attempt(naive_start(), std::min(step_frac_base, 0.9), opts.max_iter);
    total_iters += retry.iters;
    if (retry.status != LpStatus::IterationLimit || retry.best_score < outcome.best_score)
      outcome = retry;
    outcome.iters = total_iters;
  }

  if (outcome.status == LpStatus::Optimal || outcome.status == LpStatus::Infeasible ||
      outcome.status == LpStatus::Unbounded) {
    if (outcome.status == LpStatus::Optimal) {
      const Residuals res = residuals_at(outcome.at.x, outcome.at.y, outcome.at.z, outcome.at.s);
      result.primal_residual = res.pinf;
      result.dual_residual = res.dinf;
      result.gap = res.comp;
    }
    return finish(outcome.status, outcome.at.x, outcome.at.y, outcome.at.z, outcome.at.s,
                  total_iters);
  }

  // wind back to the best iterate before reporting
  result.primal_residual = outcome.best_res.pinf;
  result.dual_residual = outcome.best_res.dinf;
  result.gap = outcome.best_res.comp;
  if (outcome.best_score <= opts.tol)
    return finish(LpStatus::Optimal, outcome.best.x, outcome.best.y, outcome.best.z,
                  outcome.best.s, total_iters);

  // classify what we can before reporting the iteration limit
  if (primal_infeasible_certificate(outcome.at.y))
    return finish(LpStatus::Infeasible, outcome.at.x, outcome.at.y, outcome.at.z, outcome.at.s,
                  total_iters);
  if (dual_infeasible_certificate(outcome.at.x))
    return finish(LpStatus::Unbounded, outcome.at.x, outcome.at.y, outcome.at.z, outcome.at.s,
                  total_iters);
  return finish(LpStatus::IterationLimit, outcome.best.x, outcome.best.y, outcome.best.z,
                outcome.best.s, total_iters);
}

inline LpSolution solve(const LinearProgram& lp, double tol) {
  IpmOptions opts;
  opts.tol = tol;
  return solve(lp, opts);
}

} // namespace opfvf
