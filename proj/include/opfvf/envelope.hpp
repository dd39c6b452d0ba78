#pragma once

#include <algorithm>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

#include "opfvf/ipm.hpp"
#include "opfvf/lp.hpp"

namespace opfvf {

// Data-driven convex envelopes over the hull of support inputs:
//   lower:  max_i  value_i + grad_i'(b - b_i)        (supporting hyperplanes)
//   upper:  min_l  sum l_i value_i  s.t. l >= 0, sum l = 1, sum l_i b_i = b
// The upper envelope needs the barycentric constraint sum l_i b_i = b;
// without it the minimum degenerates to min_i value_i, which cannot bound a
// convex function from above.

struct SupportPoint {
  Eigen::VectorXd b;
  double value = 0.0;
  Eigen::VectorXd grad;
};

struct EnvelopePair {
  std::vector<SupportPoint> points;

  int dim() const { return points.empty() ? 0 : static_cast<int>(points.front().b.size()); }

  void check_valid() const {
    if (points.empty()) throw std::invalid_argument("envelope: no support points");
    const auto d = points.front().b.size();
    for (const auto& p : points)
      if (p.b.size() != d || p.grad.size() != d)
        throw std::invalid_argument("envelope: inconsistent dimensions");
  }
};

inline double lower_env(const EnvelopePair& env, const Eigen::VectorXd& b) {
  env.check_valid();
  if (b.size() != env.dim()) throw std::invalid_argument("lower_env: dimension mismatch");
  double best = -std::numeric_limits<double>::infinity();
  for (const auto& p : env.points) best = std::max(best, p.value + p.grad.dot(b - p.b));
  return best;
}

struct UpperEnvValue {
  bool inside_hull = false;
  double value = 0.0;
};

inline UpperEnvValue upper_env(const EnvelopePair& env, const Eigen::VectorXd& b,
                               double tol = 1e-9) {
  env.check_valid();
  if (b.size() != env.dim()) throw std::invalid_argument("upper_env: dimension mismatch");
  const int n = static_cast<int>(env.points.size());
  const int d = env.dim();

  LinearProgram lp;
  for (int i = 0; i < n; ++i) lp.add_variable(env.points[i].value, 0.0, 1.0);
  {
    std::vector<std::pair<int, double>> entries;
    for (int i = 0; i < n; ++i) entries.push_back({i, 1.0});
    lp.add_row(RowKind::Equal, 1.0, entries);
  }
  for (int j = 0; j < d; ++j) {
    std::vector<std::pair<int, double>> entries;
    for (int i = 0; i < n; ++i) {
      const double coef = env.points[i].b[j];
      if (coef != 0.0) entries.push_back({i, coef});
    }
    lp.add_row(RowKind::Equal, b[j], entries);
  }

  IpmOptions opts;
  opts.tol = tol;
  opts.collect_trace = false;
  const LpSolution sol = solve(lp, opts);
  UpperEnvValue out;
  if (sol.optimal()) {
    out.inside_hull = true;
    out.value = sol.objective;
  }
  return out;
}

// --- exact 1-D machinery for validating the sampled estimator ---

namespace envelope_detail {

// lower convex hull of (b, z) pairs; evaluates the 1-D upper envelope
struct Hull1d {
  std::vector<std::pair<double, double>> vertices; // sorted by b

  static Hull1d build(const EnvelopePair& env) {
    std::vector<std::pair<double, double>> pts;
    for (const auto& p : env.points) pts.push_back({p.b[0], p.value});
    std::sort(pts.begin(), pts.end());
    // keep the lowest value per distinct b
    std::vector<std::pair<double, double>> uniq;
    for (const auto& p : pts) {
      if (!uniq.empty() && p.first == uniq.back().first)
        uniq.back().second = std::min(uniq.back().second, p.second);
      else
        uniq.push_back(p);
    }
    Hull1d hull;
    for (const auto& p : uniq) {
      auto& v = hull.vertices;
      while (v.size() >= 2) {
        const auto& a = v[v.size() - 2];
        const auto& m = v[v.size() - 1];
        // drop m if it lies on or above segment a-p
        if ((m.second - a.second) * (p.first - a.first) >=
            (p.second - a.second) * (m.first - a.first))
          v.pop_back();
        else
          break;
      }
      v.push_back(p);
    }
    return hull;
  }

  double eval(double x) const {
    if (vertices.size() == 1) return vertices.front().second;
    for (std::size_t i = 1; i < vertices.size(); ++i) {
      const auto& a = vertices[i - 1];
      const auto& b = vertices[i];
      if (x <= b.first || i + 1 == vertices.size()) {
        const double t = (x - a.first) / (b.first - a.first);
        return a.second + t * (b.second - a.second);
      }
    }
    return vertices.back().second;
  }
};

// all points where a piecewise-linear structure can bend: hull vertices,
// pairwise intersections of supporting lines, and the support inputs
inline std::vector<double> candidate_breakpoints_1d(const EnvelopePair& env, double lo, double hi) {
  std::vector<double> xs = {lo, hi};
  for (const auto& p : env.points) {
    const double x = p.b[0];
    if (x >= lo && x <= hi) xs.push_back(x);
  }
  const int n = static_cast<int>(env.points.size());
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      const double gi = env.points[i].grad[0];
      const double gj = env.points[j].grad[0];
      if (gi == gj) continue;
      // value_i + gi (x - b_i) = value_j + gj (x - b_j)
      const double x = (env.points[j].value - gj * env.points[j].b[0] - env.points[i].value +
                        gi * env.points[i].b[0]) /
                       (gi - gj);
      if (x >= lo && x <= hi) xs.push_back(x);
    }
  }
  const Hull1d hull = Hull1d::build(env);
  for (const auto& v : hull.vertices)
    if (v.first >= lo && v.first <= hi) xs.push_back(v.first);
  std::sort(xs.begin(), xs.end());
  xs.erase(std::unique(xs.begin(), xs.end()), xs.end());
  return xs;
}

} // namespace envelope_detail

} // namespace opfvf
