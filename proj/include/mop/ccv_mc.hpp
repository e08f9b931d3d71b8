#pragma once

#include <cstdint>
#include <iosfwd>
#include <vector>

#include "mop/capability.hpp"
#include "mop/design.hpp"

namespace mop {

// Monte Carlo capability chart volume estimate with its standard deviation.
struct CcvEstimate {
  double estimate = 0.0;
  double sigma = 0.0;
  std::int64_t n_total = 0;
  std::int64_t n_feasible = 0;
  double sample_volume = 0.0;
  std::uint64_t seed = 0;
};

struct McOptions {
  int workers = 1;
  std::uint32_t stream = 0;
};

// Volume of the sampling box measured on the sum(P) = 0 hyperplane. The free
// real powers are the first m-1 coordinates; sqrt(m) converts parameter
// volume into surface measure.
double sample_volume(CapabilityMode mode, int m);

// Applies the hit-ratio estimator and its binomial standard deviation.
CcvEstimate make_estimate(std::int64_t n_feasible, std::int64_t n_total, double volume, std::uint64_t seed);

CcvEstimate estimate_ccv(const Design& d, int m, CapabilityMode mode, std::int64_t n_total, std::uint64_t seed,
                         const McOptions& options = {});

// Same, reusing a prebuilt chart.
CcvEstimate estimate_ccv(const CapabilityChart& chart, CapabilityMode mode, std::int64_t n_total,
                         std::uint64_t seed, const McOptions& options = {});

// One estimate per sample count, each on its own random stream.
std::vector<CcvEstimate> convergence_sweep(const Design& d, int m, CapabilityMode mode,
                                           const std::vector<std::int64_t>& n_grid, std::uint64_t seed,
                                           int workers = 1);

// n_total,n_feasible,estimate,sigma,lower95,upper95
void write_sweep_csv(std::ostream& os, const std::vector<CcvEstimate>& sweep);

}  // namespace mop
