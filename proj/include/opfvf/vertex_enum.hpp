#pragma once

#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

#include "opfvf/lp.hpp"

namespace opfvf {

// Exhaustive vertex enumeration, independent of the interior-point code
// path. Intended as a test oracle for small LPs: every equality row is kept
// active and all n-subsets of the remaining inequalities and finite bounds
// are intersected. Requires a pointed feasible region (true whenever all
// variables are boxed, and for the toy problems this backs).

struct BruteForceResult {
  LpStatus status = LpStatus::Infeasible;
  double objective = 0.0;
  Eigen::VectorXd x;
  Eigen::VectorXd y;          // row duals at the optimal vertex
  bool duals_valid = false;   // false when the optimal vertex is degenerate
};

inline BruteForceResult brute_force_lp(const LinearProgram& lp) {
  lp.check_valid();
  const int n_all = lp.num_vars();
  const int m = lp.num_rows();

  // substitute fixed variables (lo == hi) out before counting dimensions
  std::vector<int> free_vars;
  std::vector<double> fixed(n_all, 0.0);
  std::vector<char> is_fixed(n_all, 0);
  for (int j = 0; j < n_all; ++j) {
    if (lp.hi[j] - lp.lo[j] <= 0.0) {
      is_fixed[j] = 1;
      fixed[j] = lp.lo[j];
    } else {
      free_vars.push_back(j);
    }
  }
  const int n = static_cast<int>(free_vars.size());
  if (n > 12) throw std::invalid_argument("brute_force_lp: more than 12 variables");
  std::vector<int> var_pos(n_all, -1);
  for (int k = 0; k < n; ++k) var_pos[free_vars[k]] = k;

  // constraint pool: a'v <=/>=/= b over the free variables
  struct Facet {
    Eigen::VectorXd a;
    double b;
    RowKind kind;
    int row = -1;   // original row index, -1 for variable bounds
    int var = -1;   // bounded variable, with sign via kind
  };
  std::vector<Facet> equalities, inequalities;
  for (int i = 0; i < m; ++i) {
    Facet f;
    f.a = Eigen::VectorXd::Zero(n);
    f.b = lp.rhs[i];
    f.kind = lp.kinds[i];
    f.row = i;
    for (auto [col, coef] : lp.rows[i]) {
      if (is_fixed[col])
        f.b -= coef * fixed[col];
      else
        f.a[var_pos[col]] += coef;
    }
    (f.kind == RowKind::Equal ? equalities : inequalities).push_back(f);
  }
  for (int k = 0; k < n; ++k) {
    const int j = free_vars[k];
    if (std::isfinite(lp.lo[j])) {
      Facet f;
      f.a = Eigen::VectorXd::Zero(n);
      f.a[k] = 1.0;
      f.b = lp.lo[j];
      f.kind = RowKind::GreaterEqual;
      f.var = j;
      inequalities.push_back(f);
    }
    if (std::isfinite(lp.hi[j])) {
      Facet f;
      f.a = Eigen::VectorXd::Zero(n);
      f.a[k] = 1.0;
      f.b = lp.hi[j];
      f.kind = RowKind::LessEqual;
      f.var = j;
      inequalities.push_back(f);
    }
  }

  const int n_eq = static_cast<int>(equalities.size());
  const int need = n - std::min(n_eq, n);
  const int pool = static_cast<int>(inequalities.size());
  if (need > pool && n > 0 && n_eq < n) {
    BruteForceResult res; // fewer facets than dimensions: no vertex exists
    res.status = LpStatus::Infeasible;
    return res;
  }

  double combos = 1.0;
  for (int i = 0; i < need; ++i) combos *= static_cast<double>(pool - i) / (i + 1);
  if (combos > 2e6) throw std::invalid_argument("brute_force_lp: too many facet combinations");

  const double feas_tol = 1e-8;
  BruteForceResult best;
  best.status = LpStatus::Infeasible;
  double best_obj = std::numeric_limits<double>::infinity();
  std::vector<int> best_active;

  Eigen::VectorXd cfree(n);
  for (int k = 0; k < n; ++k) cfree[k] = lp.c[free_vars[k]];

  auto try_active_set = [&](const std::vector<int>& chosen) {
    Eigen::MatrixXd mat(n, n);
    Eigen::VectorXd rhs(n);
    int r = 0;
    for (int e = 0; e < std::min(n_eq, n); ++e, ++r) {
      mat.row(r) = equalities[e].a.transpose();
      rhs[r] = equalities[e].b;
    }
    for (int idx : chosen) {
      mat.row(r) = inequalities[idx].a.transpose();
      rhs[r] = inequalities[idx].b;
      ++r;
    }
    Eigen::FullPivLU<Eigen::MatrixXd> lu(mat);
    lu.setThreshold(1e-10);
    if (!lu.isInvertible()) return;
    Eigen::VectorXd v = lu.solve(rhs);

    const double scale = 1.0 + v.lpNorm<Eigen::Infinity>();
    for (const auto& f : equalities)
      if (std::abs(f.a.dot(v) - f.b) > feas_tol * scale) return;
    for (const auto& f : inequalities) {
      const double lhs = f.a.dot(v);
      if (f.kind == RowKind::LessEqual && lhs > f.b + feas_tol * scale) return;
      if (f.kind == RowKind::GreaterEqual && lhs < f.b - feas_tol * scale) return;
    }

    const double obj = cfree.dot(v);
    if (obj < best_obj - 1e-12) {
      best_obj = obj;
      best.x = v;
      best_active = chosen;
      best.status = LpStatus::Optimal;
    }
  };

  // iterate over all need-subsets of the inequality pool
  if (n == 0) {
    // all variables fixed: feasibility check only
    Eigen::VectorXd v(0);
    bool ok = true;
    for (const auto& f : equalities) ok = ok && std::abs(f.b) <= feas_tol;
    for (const auto& f : inequalities) {
      if (f.kind == RowKind::LessEqual) ok = ok && 0.0 <= f.b + feas_tol;
      if (f.kind == RowKind::GreaterEqual) ok = ok && 0.0 >= f.b - feas_tol;
    }
    best.status = ok ? LpStatus::Optimal : LpStatus::Infeasible;
    best_obj = 0.0;
    best.x = v;
  } else if (n_eq >= n) {
    try_active_set({});
  } else {
    std::vector<int> chosen(need);
    for (int i = 0; i < need; ++i) chosen[i] = i;
    while (true) {
      try_active_set(chosen);
      int pos = need - 1;
      while (pos >= 0 && chosen[pos] == pool - need + pos) --pos;
      if (pos < 0) break;
      ++chosen[pos];
      for (int i = pos + 1; i < need; ++i) chosen[i] = chosen[i - 1] + 1;
    }
  }

  if (best.status != LpStatus::Optimal) return best;

  // assemble the full primal point and objective
  Eigen::VectorXd xfull(n_all);
  for (int j = 0; j < n_all; ++j)
    xfull[j] = is_fixed[j] ? fixed[j] : best.x[var_pos[j]];
  best.x = xfull;
  double obj = 0.0;
  for (int j = 0; j < n_all; ++j) obj += lp.c[j] * xfull[j];
  best.objective = obj;

  // duals from the active set: solve M' lambda = c over the free variables
  if (n > 0) {
    const int k_rows = std::min(n_eq, n) + static_cast<int>(best_active.size());
    Eigen::MatrixXd mt(n, k_rows);
    int r = 0;
    std::vector<const Facet*> facets;
    for (int e = 0; e < std::min(n_eq, n); ++e, ++r) {
      mt.col(r) = equalities[e].a;
      facets.push_back(&equalities[e]);
    }
    for (int idx : best_active) {
      mt.col(r++) = inequalities[idx].a;
      facets.push_back(&inequalities[idx]);
    }
    Eigen::VectorXd lambda = mt.colPivHouseholderQr().solve(cfree);
    if ((mt * lambda - cfree).lpNorm<Eigen::Infinity>() <= 1e-7 * (1.0 + cfree.lpNorm<Eigen::Infinity>())) {
      best.y = Eigen::VectorXd::Zero(m);
      for (int i = 0; i < k_rows; ++i)
        if (facets[i]->row >= 0) best.y[facets[i]->row] = lambda[i];
      best.duals_valid = true;
    }
  }
  return best;
}

} // namespace opfvf
