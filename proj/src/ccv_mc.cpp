#include "mop/ccv_mc.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <ostream>
#include <thread>

#include "mop/errors.hpp"
#include "mop/philox.hpp"

namespace mop {

namespace {

constexpr int kMaxFeeders = 16;

std::int64_t count_feasible(const CapabilityChart& chart, CapabilityMode mode, std::uint64_t seed,
                            std::uint32_t stream, std::int64_t begin, std::int64_t end) {
  const int m = chart.feeders();
  std::array<double, kMaxFeeders> p{};
  std::array<double, kMaxFeeders> q{};
  std::array<double, kMaxFeeders> mag{};
  std::int64_t hits = 0;
  for (std::int64_t k = begin; k < end; ++k) {
    rng::SampleStream rs(seed, static_cast<std::uint64_t>(k), stream);
    if (mode != CapabilityMode::statcom) {
      double sum = 0.0;
      for (int i = 0; i < m - 1; ++i) {
        p[i] = rs.uniform(-1.0, 1.0);
        sum += p[i];
      }
      p[m - 1] = -sum;
    }
    if (mode != CapabilityMode::upf) {
      for (int i = 0; i < m; ++i) q[i] = rs.uniform(-1.0, 1.0);
    }
    for (int i = 0; i < m; ++i) mag[i] = std::sqrt(p[i] * p[i] + q[i] * q[i]);
    if (chart.contains_apparent(mag.data())) ++hits;
  }
  return hits;
}

}  // namespace

double sample_volume(CapabilityMode mode, int m) {
  switch (mode) {
    case CapabilityMode::upf: return std::ldexp(std::sqrt(static_cast<double>(m)), m - 1);
    case CapabilityMode::statcom: return std::ldexp(1.0, m);
    case CapabilityMode::pq: return std::ldexp(std::sqrt(static_cast<double>(m)), 2 * m - 1);
    case CapabilityMode::mpt: break;
  }
  throw UnsupportedOperation("maximum power transfer is a scalar; use max_power_transfer");
}

CcvEstimate make_estimate(std::int64_t n_feasible, std::int64_t n_total, double volume, std::uint64_t seed) {
  CcvEstimate e;
  e.n_total = n_total;
  e.n_feasible = n_feasible;
  e.sample_volume = volume;
  e.seed = seed;
  const double f = static_cast<double>(n_feasible) / static_cast<double>(n_total);
  e.estimate = volume * f;
  e.sigma = volume * std::sqrt(f * (1.0 - f) / static_cast<double>(n_total));
  return e;
}

CcvEstimate estimate_ccv(const CapabilityChart& chart, CapabilityMode mode, std::int64_t n_total,
                         std::uint64_t seed, const McOptions& options) {
  if (n_total < 1) throw ArgumentError("need at least one Monte Carlo sample");
  if (chart.feeders() > kMaxFeeders) throw ArgumentError("too many feeders for Monte Carlo sampling");
  const double volume = sample_volume(mode, chart.feeders());

  const int workers = std::clamp(options.workers, 1, 256);
  std::int64_t hits = 0;
  if (workers == 1 || n_total < 4096) {
    hits = count_feasible(chart, mode, seed, options.stream, 0, n_total);
  } else {
    std::vector<std::int64_t> partial(static_cast<std::size_t>(workers), 0);
    std::vector<std::thread> pool;
    const std::int64_t chunk = (n_total + workers - 1) / workers;
    for (int w = 0; w < workers; ++w) {
      const std::int64_t begin = std::min(n_total, w * chunk);
      const std::int64_t end = std::min(n_total, begin + chunk);
      pool.emplace_back([&, w, begin, end] {
        partial[static_cast<std::size_t>(w)] = count_feasible(chart, mode, seed, options.stream, begin, end);
      });
    }
    for (auto& t : pool) t.join();
    for (auto h : partial) hits += h;
  }
  return make_estimate(hits, n_total, volume, seed);
}

CcvEstimate estimate_ccv(const Design& d, int m, CapabilityMode mode, std::int64_t n_total, std::uint64_t seed,
                         const McOptions& options) {
  if (mode == CapabilityMode::mpt) {
    throw UnsupportedOperation("maximum power transfer is a scalar; use max_power_transfer");
  }
  return estimate_ccv(CapabilityChart(d, m), mode, n_total, seed, options);
}

std::vector<CcvEstimate> convergence_sweep(const Design& d, int m, CapabilityMode mode,
                                           const std::vector<std::int64_t>& n_grid, std::uint64_t seed,
                                           int workers) {
  if (n_grid.empty()) throw ArgumentError("convergence sweep needs at least one sample count");
  if (!std::is_sorted(n_grid.begin(), n_grid.end()) ||
      std::adjacent_find(n_grid.begin(), n_grid.end()) != n_grid.end()) {
    throw ArgumentError("convergence sweep sample counts must be strictly increasing");
  }
  const CapabilityChart chart(d, m);
  std::vector<CcvEstimate> out;
  out.reserve(n_grid.size());
  for (std::size_t k = 0; k < n_grid.size(); ++k) {
    McOptions options;
    options.workers = workers;
    options.stream = static_cast<std::uint32_t>(k + 1);
    out.push_back(estimate_ccv(chart, mode, n_grid[k], seed, options));
  }
  return out;
}

void write_sweep_csv(std::ostream& os, const std::vector<CcvEstimate>& sweep) {
  os << "n_total,n_feasible,estimate,sigma,lower95,upper95\n";
  const auto old = os.precision(12);
  for (const auto& e : sweep) {
    os << e.n_total << ',' << e.n_feasible << ',' << e.estimate << ',' << e.sigma << ','
       << e.estimate - 1.96 * e.sigma << ',' << e.estimate + 1.96 * e.sigma << '\n';
  }
  os.precision(old);
}

}  // namespace mop
