#pragma once

#include <cstdint>
#include <stdexcept>
#include <vector>

#include "opfvf/grid.hpp"
#include "opfvf/rng.hpp"

namespace opfvf {

// Load perturbation per instance:
//   pd = alpha * eta_i * pd_ref,  qd = alpha * eta_i * qd_ref
// with alpha ~ Uniform(alpha_min, alpha_max) system-wide and eta_i i.i.d.
// log-normal with arithmetic mean 1 and standard deviation eta_std. The same
// eta multiplies both active and reactive load, preserving the power factor.
struct PerturbationConfig {
  double alpha_min = 0.80;
  double alpha_max = 1.065;
  double eta_std = 0.05;
  std::uint64_t base_seed = 0;
  std::size_t count = 0;

  void check_valid() const {
    if (!(alpha_min > 0.0) || !(alpha_min <= alpha_max))
      throw std::invalid_argument("perturbation: need 0 < alpha_min <= alpha_max");
    if (eta_std < 0.0) throw std::invalid_argument("perturbation: eta_std must be >= 0");
  }
};

struct LoadSample {
  std::vector<double> pd;
  std::vector<double> qd;
  double alpha = 0.0;
  std::uint64_t seed = 0;
};

// Each instance draws from its own generator seeded by hash(base_seed,
// index), so samples do not depend on generation order.
inline LoadSample sample_loads(const PowerNetwork& net, const PerturbationConfig& cfg,
                               std::size_t index) {
  cfg.check_valid();
  if (index >= cfg.count) throw std::invalid_argument("sample_loads: index out of range");

  LoadSample out;
  out.seed = seed_for_index(cfg.base_seed, index);
  Rng rng(out.seed);
  out.alpha = rng.uniform(cfg.alpha_min, cfg.alpha_max);

  const LogNormalUnitMean ln(cfg.eta_std);
  out.pd.resize(net.num_buses());
  out.qd.resize(net.num_buses());
  for (std::size_t i = 0; i < net.num_buses(); ++i) {
    const double eta = rng.lognormal(ln.mu_log, ln.sigma_log); // exactly 1 when eta_std = 0
    out.pd[i] = out.alpha * eta * net.pd_ref[i];
    out.qd[i] = out.alpha * eta * net.qd_ref[i];
  }
  return out;
}

} // namespace opfvf
