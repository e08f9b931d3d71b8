#pragma once

#include <Eigen/Core>
#include <complex>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "mop/design.hpp"

namespace mop {

enum class CapabilityMode { pq, upf, statcom, mpt };

std::string to_string(CapabilityMode mode);
CapabilityMode capability_mode_from_string(const std::string& s);

// Aggregate converter capacity connected to each feeder, S+ = B alpha (pu).
using CapacityVector = Eigen::VectorXd;

// Column-wise encoding of the multiplexer matrix: feeder[j] is the (0-based)
// feeder that converter j is switched onto.
struct MultiplexerAssignment {
  std::vector<int> feeder;
};

// Complex power drawn from each feeder into the device (pu). p > 0 is inflow.
struct InjectionPoint {
  Eigen::VectorXd p;
  Eigen::VectorXd q;

  int feeders() const noexcept { return static_cast<int>(p.size()); }
  Eigen::VectorXd apparent() const { return (p.array().square() + q.array().square()).sqrt(); }
};

struct EnumerationLimits {
  std::uint64_t max_assignments = 10'000'000;
};

// Feasibility slack on capacity comparisons.
inline constexpr double kFeasibilityTolerance = 1e-12;

CapacityVector connected_capacity(const Design& d, const MultiplexerAssignment& b, int m);

// Distinct S+ over all m^n multiplexer states, sorted lexicographically
// descending. Fixed designs yield the single hard-wired split.
std::vector<CapacityVector> enumerate_capacity_vectors(const Design& d, int m,
                                                       const EnumerationLimits& limits = {});

// Capability chart of one design at an m-feeder bus, with the connected
// capacity set precomputed. Cheap to query and safe to share across threads.
class CapabilityChart {
 public:
  CapabilityChart(const Design& design, int m, const EnumerationLimits& limits = {});

  int feeders() const noexcept { return m_; }
  const Design& design() const noexcept { return design_; }
  const std::vector<CapacityVector>& capacity_vectors() const noexcept { return caps_; }

  // True iff apparent[i] <= S+[i] for some connected capacity vector (or
  // sum(apparent) <= 1 for the idealised device).
  bool contains_apparent(const double* apparent) const;
  bool contains(const InjectionPoint& s) const;

 private:
  Design design_;
  int m_;
  std::vector<CapacityVector> caps_;
  std::vector<double> flat_;  // caps_, packed row-major [vector][feeder]
};

bool is_feasible(const Design& d, int m, const InjectionPoint& s, CapabilityMode mode);

struct TransferTable {
  Eigen::MatrixXd pair;  // pair(i, j): largest transfer from feeder i to j; diagonal is zero
  double maximum = 0.0;
};

TransferTable max_power_transfer(const Design& d, int m);

// Splits each feeder's power across its connected converters in proportion
// to their ratings. Result is indexed by converter.
std::vector<std::complex<double>> disaggregate(const InjectionPoint& s, const MultiplexerAssignment& b,
                                               const Design& d);

void write_capacity_csv(std::ostream& os, const std::vector<CapacityVector>& caps);

}  // namespace mop
