#pragma once

#include "opfvf/lp.hpp"
#include "opfvf/rng.hpp"

namespace testutil {

// Random box-bounded LP that is feasible by construction: rhs values are
// derived from a random interior point. Bounded boxes keep the region
// pointed, so vertex enumeration is a valid oracle.
inline opfvf::LinearProgram random_feasible_lp(opfvf::Rng& rng, int max_vars = 5) {
  opfvf::LinearProgram lp;
  const int n = 2 + static_cast<int>(rng.next_below(static_cast<std::uint64_t>(max_vars - 1)));
  std::vector<double> x0(n);
  for (int j = 0; j < n; ++j) {
    const double lo = rng.uniform(-3.0, 0.0);
    const double hi = lo + rng.uniform(0.5, 4.0);
    lp.add_variable(rng.uniform(-3.0, 3.0), lo, hi);
    x0[j] = rng.uniform(lo + 0.05, hi - 0.05);
  }
  const int m = 1 + static_cast<int>(rng.next_below(static_cast<std::uint64_t>(n + 2)));
  int n_eq = 0;
  for (int i = 0; i < m; ++i) {
    std::vector<std::pair<int, double>> entries;
    double ax0 = 0.0;
    for (int j = 0; j < n; ++j) {
      if (rng.next_double() < 0.7) {
        const double coef = rng.uniform(-2.0, 2.0);
        entries.push_back({j, coef});
        ax0 += coef * x0[j];
      }
    }
    if (entries.empty()) continue;
    const double u = rng.next_double();
    if (u < 0.25 && n_eq < n / 2) {
      lp.add_row(opfvf::RowKind::Equal, ax0, entries);
      ++n_eq;
    } else if (u < 0.6) {
      lp.add_row(opfvf::RowKind::LessEqual, ax0 + rng.uniform(0.1, 2.0), entries);
    } else {
      lp.add_row(opfvf::RowKind::GreaterEqual, ax0 - rng.uniform(0.1, 2.0), entries);
    }
  }
  return lp;
}

// total complementarity violation: row slacks times duals plus bound gaps
// times reduced costs
inline double complementarity_violation(const opfvf::LinearProgram& lp,
                                        const opfvf::LpSolution& sol) {
  double total = 0.0;
  for (int i = 0; i < lp.num_rows(); ++i) {
    if (lp.kinds[i] == opfvf::RowKind::Equal) continue;
    double ax = 0.0;
    for (auto [col, coef] : lp.rows[i]) ax += coef * sol.x[col];
    total += std::abs((lp.rhs[i] - ax) * sol.y[i]);
  }
  for (int j = 0; j < lp.num_vars(); ++j) {
    const double rc = sol.reduced_costs[j];
    if (std::isfinite(lp.lo[j]) && rc > 0.0) total += (sol.x[j] - lp.lo[j]) * rc;
    if (std::isfinite(lp.hi[j]) && rc < 0.0) total += (lp.hi[j] - sol.x[j]) * (-rc);
  }
  return total;
}

} // namespace testutil
