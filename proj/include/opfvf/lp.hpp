#pragma once

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>

namespace opfvf {

enum class RowKind { Equal, LessEqual, GreaterEqual };

enum class LpStatus { Optimal, Infeasible, Unbounded, IterationLimit };

inline const char* to_string(LpStatus s) {
  switch (s) {
    case LpStatus::Optimal: return "optimal";
    case LpStatus::Infeasible: return "infeasible";
    case LpStatus::Unbounded: return "unbounded";
    case LpStatus::IterationLimit: return "iteration-limit";
  }
  return "unknown";
}

// Row-wise sparse LP:  min c'x  s.t.  a_i'x {=,<=,>=} rhs_i,  lo <= x <= hi.
// Bounds may be +-inf. Range rows are expressed as two inequality rows.
struct LinearProgram {
  std::vector<double> c;
  std::vector<double> lo;
  std::vector<double> hi;
  std::vector<std::vector<std::pair<int, double>>> rows; // (col, coef)
  std::vector<double> rhs;
  std::vector<RowKind> kinds;

  int num_vars() const { return static_cast<int>(c.size()); }
  int num_rows() const { return static_cast<int>(rows.size()); }

  int add_variable(double cost, double lower, double upper) {
    c.push_back(cost);
    lo.push_back(lower);
    hi.push_back(upper);
    return num_vars() - 1;
  }

  int add_row(RowKind kind, double b, std::vector<std::pair<int, double>> entries) {
    rows.push_back(std::move(entries));
    rhs.push_back(b);
    kinds.push_back(kind);
    return num_rows() - 1;
  }

  void check_valid() const {
    const int n = num_vars();
    if (lo.size() != c.size() || hi.size() != c.size())
      throw std::invalid_argument("lp: bound vectors must match variable count");
    if (rhs.size() != rows.size() || kinds.size() != rows.size())
      throw std::invalid_argument("lp: rhs/kind vectors must match row count");
    for (int j = 0; j < n; ++j) {
      if (std::isnan(c[j]) || std::isinf(c[j])) throw std::invalid_argument("lp: bad objective coefficient");
      if (std::isnan(lo[j]) || std::isnan(hi[j])) throw std::invalid_argument("lp: NaN bound");
      if (lo[j] > hi[j]) throw std::invalid_argument("lp: lower bound above upper bound");
    }
    for (std::size_t i = 0; i < rows.size(); ++i) {
      if (std::isnan(rhs[i]) || std::isinf(rhs[i])) throw std::invalid_argument("lp: bad rhs");
      for (auto [col, coef] : rows[i]) {
        if (col < 0 || col >= n) throw std::invalid_argument("lp: column index out of range");
        if (std::isnan(coef) || std::isinf(coef))
          throw std::invalid_argument("lp: bad constraint coefficient");
      }
    }
  }
};

struct IterateInfo {
  double primal_obj = 0.0;
  double dual_obj = 0.0;
  double mu = 0.0;
  double primal_inf = 0.0;
  double dual_inf = 0.0;
};

struct LpSolution {
  LpStatus status = LpStatus::IterationLimit;
  Eigen::VectorXd x;             // primal values per original variable
  Eigen::VectorXd y;             // dual values per original row
  Eigen::VectorXd reduced_costs; // per original variable
  double objective = 0.0;
  int iterations = 0;
  double primal_residual = 0.0;  // relative, at exit
  double dual_residual = 0.0;
  double gap = 0.0;              // relative complementarity gap at exit
  std::vector<IterateInfo> trace;

  bool optimal() const { return status == LpStatus::Optimal; }
};

} // namespace opfvf
