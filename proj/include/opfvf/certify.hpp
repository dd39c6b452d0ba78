#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "opfvf/envelope.hpp"
#include "opfvf/icnn.hpp"
#include "opfvf/jsonio.hpp"
#include "opfvf/rng.hpp"
#include "opfvf/version.hpp"

namespace opfvf {

// Generalization certificates for a model f learning a convex value
// function Phi, computed from the labeled data alone.
//
// The envelope bound replaces Phi at unseen b by its own data-driven
// envelopes, so the certificate depends only on {(b_i, z_i, y_i)} and the
// model's {(z~_i, y~_i)}:
//   M^ = max over b in conv{b_i} of max( h^_f(b) - c^_Phi(b),
//                                        h^_Phi(b) - c^_f(b) ).
// Sampled mode maximizes over Dirichlet combinations of the b_i (a lower
// estimate of the supremum); the exact 1-D mode enumerates the breakpoints
// of the piecewise-linear envelopes and is used to validate the estimator.
//
// The perfect-fit bound is  max_i ||y_i||_2 * diam(B),  valid whenever f
// interpolates values and gradients on the data; when the fit residuals
// exceed fit_tol the certificate is still reported but flagged non-binding.

enum class CertificateKind { Theorem1Sampled, Theorem1Exact1d, Theorem2 };

inline const char* to_string(CertificateKind k) {
  switch (k) {
    case CertificateKind::Theorem1Sampled: return "envelope-sampled";
    case CertificateKind::Theorem1Exact1d: return "envelope-exact-1d";
    case CertificateKind::Theorem2: return "perfect-fit";
  }
  return "unknown";
}

struct BoundCertificate {
  CertificateKind kind = CertificateKind::Theorem1Sampled;
  double bound = 0.0;
  double fit_residual_value = 0.0; // max_i |f(b_i) - z_i|
  double fit_residual_grad = 0.0;  // max_i ||grad f(b_i) - y_i||_2
  bool binding = true;             // perfect-fit kind: residuals <= fit_tol
  double diameter = 0.0;
  std::string diameter_mode;
  std::size_t sample_count = 0;
  std::uint64_t seed = 0;
  std::string provenance;
};

struct DiamResult {
  double value = 0.0;
  std::string mode; // "exact-pairwise" or "bounding-box"
};

// Exact max pairwise distance up to 5,000 points; beyond that the
// bounding-box diagonal, a valid upper bound, keeps certificates sound.
inline DiamResult diam_upper(const std::vector<Eigen::VectorXd>& points) {
  if (points.empty()) throw std::invalid_argument("diam_upper: no points");
  DiamResult out;
  if (points.size() <= 5000) {
    out.mode = "exact-pairwise";
    for (std::size_t i = 0; i < points.size(); ++i)
      for (std::size_t j = i + 1; j < points.size(); ++j)
        out.value = std::max(out.value, (points[i] - points[j]).norm());
  } else {
    out.mode = "bounding-box";
    Eigen::VectorXd lo = points.front(), hi = points.front();
    for (const auto& p : points) {
      lo = lo.cwiseMin(p);
      hi = hi.cwiseMax(p);
    }
    out.value = (hi - lo).norm();
  }
  return out;
}

namespace certify_detail {

inline void check_shared_inputs(const EnvelopePair& f_data, const EnvelopePair& phi_data) {
  f_data.check_valid();
  phi_data.check_valid();
  if (f_data.points.size() != phi_data.points.size())
    throw std::invalid_argument("theorem1: datasets must share the support inputs");
  for (std::size_t i = 0; i < f_data.points.size(); ++i)
    if ((f_data.points[i].b - phi_data.points[i].b).lpNorm<Eigen::Infinity>() > 1e-12)
      throw std::invalid_argument("theorem1: datasets must share the support inputs");
}

inline double envelope_gap_at(const EnvelopePair& f_data, const EnvelopePair& phi_data,
                              const Eigen::VectorXd& b) {
  const UpperEnvValue hf = upper_env(f_data, b);
  const UpperEnvValue hphi = upper_env(phi_data, b);
  if (!hf.inside_hull || !hphi.inside_hull) return -std::numeric_limits<double>::infinity();
  const double v1 = hf.value - lower_env(phi_data, b);
  const double v2 = hphi.value - lower_env(f_data, b);
  return std::max(v1, v2);
}

} // namespace certify_detail

inline BoundCertificate theorem1_bound(const EnvelopePair& f_data, const EnvelopePair& phi_data,
                                       std::size_t samples, std::uint64_t seed,
                                       bool exact_1d = false) {
  using namespace certify_detail;
  check_shared_inputs(f_data, phi_data);
  const std::size_t n = f_data.points.size();

  BoundCertificate cert;
  cert.seed = seed;
  for (std::size_t i = 0; i < n; ++i) {
    cert.fit_residual_value =
        std::max(cert.fit_residual_value, std::abs(f_data.points[i].value - phi_data.points[i].value));
    cert.fit_residual_grad =
        std::max(cert.fit_residual_grad,
                 (f_data.points[i].grad - phi_data.points[i].grad).norm());
  }

  if (exact_1d) {
    if (f_data.dim() != 1) throw std::invalid_argument("theorem1: exact mode requires 1-D inputs");
    cert.kind = CertificateKind::Theorem1Exact1d;
    double lo = f_data.points.front().b[0], hi = lo;
    for (const auto& p : f_data.points) {
      lo = std::min(lo, p.b[0]);
      hi = std::max(hi, p.b[0]);
    }
    // every kink of the four piecewise-linear envelopes
    std::vector<double> xs = envelope_detail::candidate_breakpoints_1d(f_data, lo, hi);
    for (double x : envelope_detail::candidate_breakpoints_1d(phi_data, lo, hi)) xs.push_back(x);
    std::sort(xs.begin(), xs.end());
    xs.erase(std::unique(xs.begin(), xs.end()), xs.end());

    const auto hull_f = envelope_detail::Hull1d::build(f_data);
    const auto hull_phi = envelope_detail::Hull1d::build(phi_data);
    double best = -std::numeric_limits<double>::infinity();
    Eigen::VectorXd b(1);
    for (double x : xs) {
      b[0] = x;
      const double v1 = hull_f.eval(x) - lower_env(phi_data, b);
      const double v2 = hull_phi.eval(x) - lower_env(f_data, b);
      best = std::max(best, std::max(v1, v2));
    }
    cert.bound = best;
    cert.sample_count = xs.size();
    return cert;
  }

  cert.kind = CertificateKind::Theorem1Sampled;
  double best = -std::numeric_limits<double>::infinity();
  // the support points themselves, then random interior combinations
  for (std::size_t i = 0; i < n; ++i)
    best = std::max(best, envelope_gap_at(f_data, phi_data, f_data.points[i].b));
  Rng rng(seed);
  const int d = f_data.dim();
  for (std::size_t s = 0; s < samples; ++s) {
    const std::vector<double> lambda = rng.dirichlet_uniform(n);
    Eigen::VectorXd b = Eigen::VectorXd::Zero(d);
    for (std::size_t i = 0; i < n; ++i) b += lambda[i] * f_data.points[i].b;
    best = std::max(best, envelope_gap_at(f_data, phi_data, b));
  }
  cert.bound = best;
  cert.sample_count = n + samples;
  return cert;
}

// Support data evaluated through a model: (b_i, f(b_i), grad f(b_i)).
inline EnvelopePair model_support_data(const IcnnModel& model,
                                       const std::vector<Eigen::VectorXd>& inputs) {
  EnvelopePair env;
  for (const auto& b : inputs) env.points.push_back({b, forward(model, b), input_gradient(model, b)});
  return env;
}

inline BoundCertificate theorem2_bound(const EnvelopePair& phi_data, const IcnnModel& model,
                                       double fit_tol) {
  phi_data.check_valid();
  BoundCertificate cert;
  cert.kind = CertificateKind::Theorem2;

  double max_dual_norm = 0.0;
  std::vector<Eigen::VectorXd> inputs;
  for (const auto& p : phi_data.points) {
    inputs.push_back(p.b);
    max_dual_norm = std::max(max_dual_norm, p.grad.norm());
    const double f_val = forward(model, p.b);
    const Eigen::VectorXd f_grad = input_gradient(model, p.b);
    cert.fit_residual_value = std::max(cert.fit_residual_value, std::abs(f_val - p.value));
    cert.fit_residual_grad = std::max(cert.fit_residual_grad, (f_grad - p.grad).norm());
  }
  const DiamResult diam = diam_upper(inputs);
  cert.diameter = diam.value;
  cert.diameter_mode = diam.mode;
  cert.bound = max_dual_norm * diam.value;
  cert.binding = cert.fit_residual_value <= fit_tol && cert.fit_residual_grad <= fit_tol;
  cert.sample_count = phi_data.points.size();
  return cert;
}

// --- certificate persistence ---

inline std::string certificate_to_json(const BoundCertificate& cert) {
  JsonWriter w;
  w.begin_object();
  w.kv("schema_version", kCertificateSchemaVersion);
  w.kv("kind", to_string(cert.kind));
  w.kv("bound", cert.bound);
  w.kv("fit_residual_value", cert.fit_residual_value);
  w.kv("fit_residual_grad", cert.fit_residual_grad);
  w.kv("binding", cert.binding);
  if (cert.kind == CertificateKind::Theorem2) {
    w.kv("diameter", cert.diameter);
    w.kv("diameter_mode", cert.diameter_mode);
  }
  w.kv("sample_count", cert.sample_count);
  w.kv("seed", cert.seed);
  w.kv("provenance", cert.provenance);
  w.end_object();
  return w.str() + "\n";
}

inline void save_certificate(const BoundCertificate& cert, const std::string& path) {
  write_text_file(path, certificate_to_json(cert));
}

} // namespace opfvf
