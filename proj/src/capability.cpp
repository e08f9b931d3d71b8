#include "mop/capability.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <map>
#include <ostream>

#include "mop/errors.hpp"

namespace mop {

std::string to_string(CapabilityMode mode) {
  switch (mode) {
    case CapabilityMode::pq: return "pq";
    case CapabilityMode::upf: return "upf";
    case CapabilityMode::statcom: return "statcom";
    case CapabilityMode::mpt: return "mpt";
  }
  return "unknown";
}

CapabilityMode capability_mode_from_string(const std::string& s) {
  if (s == "pq" || s == "PQ") return CapabilityMode::pq;
  if (s == "upf" || s == "UPF") return CapabilityMode::upf;
  if (s == "statcom" || s == "STATCOM") return CapabilityMode::statcom;
  if (s == "mpt" || s == "MPT") return CapabilityMode::mpt;
  throw ArgumentError("unknown capability mode '" + s + "'");
}

namespace {

void check_feeders(const Design& d, int m) {
  if (m < 2) throw ArgumentError("need at least two feeders, got " + std::to_string(m));
  if (d.is_fixed() && d.converter_count() != m) {
    throw InvalidDesign("fixed SOP with " + std::to_string(d.converter_count()) +
                        " converters cannot serve " + std::to_string(m) + " feeders");
  }
}

bool lex_greater(const CapacityVector& a, const CapacityVector& b) {
  for (Eigen::Index i = 0; i < a.size(); ++i) {
    if (a[i] != b[i]) return a[i] > b[i];
  }
  return false;
}

bool near_equal(const CapacityVector& a, const CapacityVector& b) {
  return (a - b).cwiseAbs().maxCoeff() <= kCapacityTolerance;
}

// Reduces a set of vectors to distinct members within kCapacityTolerance.
// Quantised hashing collapses bit-identical and near-identical sums; a final
// pairwise pass merges the rare pairs split across a quantisation boundary.
std::vector<CapacityVector> deduplicate(std::vector<CapacityVector> vectors) {
  std::map<std::vector<long long>, std::size_t> index;
  std::vector<CapacityVector> unique;
  unique.reserve(vectors.size());
  constexpr double kScale = 1.0 / (16.0 * kCapacityTolerance);
  for (auto& v : vectors) {
    std::vector<long long> key(static_cast<std::size_t>(v.size()));
    for (Eigen::Index i = 0; i < v.size(); ++i) key[static_cast<std::size_t>(i)] = std::llround(v[i] * kScale);
    if (index.emplace(std::move(key), unique.size()).second) unique.push_back(std::move(v));
  }
  std::sort(unique.begin(), unique.end(), lex_greater);
  std::vector<CapacityVector> merged;
  merged.reserve(unique.size());
  for (auto& v : unique) {
    bool dup = false;
    for (auto it = merged.rbegin(); it != merged.rend(); ++it) {
      if (std::abs((*it)[0] - v[0]) > kCapacityTolerance) break;
      if (near_equal(*it, v)) {
        dup = true;
        break;
      }
    }
    if (!dup) merged.push_back(std::move(v));
  }
  return merged;
}

}  // namespace

CapacityVector connected_capacity(const Design& d, const MultiplexerAssignment& b, int m) {
  if (d.is_idealised()) throw UnsupportedOperation("the idealised device has no multiplexer state");
  if (static_cast<int>(b.feeder.size()) != d.converter_count()) {
    throw ArgumentError("assignment length does not match converter count");
  }
  CapacityVector caps = CapacityVector::Zero(m);
  for (int j = 0; j < d.converter_count(); ++j) {
    const int i = b.feeder[static_cast<std::size_t>(j)];
    if (i < 0 || i >= m) throw ArgumentError("assignment names feeder " + std::to_string(i) + " out of range");
    caps[i] += d.alphas()[j];
  }
  return caps;
}

std::vector<CapacityVector> enumerate_capacity_vectors(const Design& d, int m, const EnumerationLimits& limits) {
  if (d.is_idealised()) {
    throw UnsupportedOperation("the idealised capability chart is a continuum; no capacity vectors");
  }
  check_feeders(d, m);
  if (d.is_fixed()) return {CapacityVector::Constant(m, 1.0 / m)};

  const int n = d.converter_count();
  std::uint64_t count = 1;
  for (int j = 0; j < n; ++j) {
    if (count > limits.max_assignments / static_cast<std::uint64_t>(m)) {
      throw SizeLimitExceeded("m^n = " + std::to_string(m) + "^" + std::to_string(n) +
                              " multiplexer states exceeds the enumeration cap of " +
                              std::to_string(limits.max_assignments));
    }
    count *= static_cast<std::uint64_t>(m);
  }

  // Fold converters in one at a time; deduplicating each stage gives the same
  // set as visiting all m^n assignments.
  std::vector<CapacityVector> stage{CapacityVector::Zero(m)};
  for (int j = 0; j < n; ++j) {
    std::vector<CapacityVector> next;
    next.reserve(stage.size() * static_cast<std::size_t>(m));
    for (const auto& v : stage) {
      for (int i = 0; i < m; ++i) {
        CapacityVector w = v;
        w[i] += d.alphas()[j];
        next.push_back(std::move(w));
      }
    }
    stage = deduplicate(std::move(next));
  }
  return stage;
}

CapabilityChart::CapabilityChart(const Design& design, int m, const EnumerationLimits& limits)
    : design_(design), m_(m) {
  if (m < 2) throw ArgumentError("need at least two feeders, got " + std::to_string(m));
  if (!design.is_idealised()) {
    caps_ = enumerate_capacity_vectors(design, m, limits);
    flat_.reserve(caps_.size() * static_cast<std::size_t>(m));
    for (const auto& c : caps_) flat_.insert(flat_.end(), c.data(), c.data() + m);
  }
}

bool CapabilityChart::contains_apparent(const double* apparent) const {
  if (design_.is_idealised()) {
    double total = 0.0;
    for (int i = 0; i < m_; ++i) total += apparent[i];
    return total <= 1.0 + kFeasibilityTolerance;
  }
  const std::size_t mm = static_cast<std::size_t>(m_);
  for (std::size_t k = 0; k < caps_.size(); ++k) {
    const double* c = flat_.data() + k * mm;
    bool ok = true;
    for (std::size_t i = 0; i < mm; ++i) {
      if (apparent[i] > c[i] + kFeasibilityTolerance) {
        ok = false;
        break;
      }
    }
    if (ok) return true;
  }
  return false;
}

bool CapabilityChart::contains(const InjectionPoint& s) const {
  if (s.p.size() != m_ || s.q.size() != m_) {
    throw ArgumentError("injection point has " + std::to_string(s.p.size()) + " feeders, chart has " +
                        std::to_string(m_));
  }
  const Eigen::VectorXd mag = s.apparent();
  return contains_apparent(mag.data());
}

bool is_feasible(const Design& d, int m, const InjectionPoint& s, CapabilityMode mode) {
  if (s.p.size() != m || s.q.size() != m) {
    throw ArgumentError("injection point dimension does not match the feeder count");
  }
  if (mode == CapabilityMode::upf && s.q.cwiseAbs().maxCoeff() > 0.0) {
    throw DomainError("unity power factor points must have zero reactive power");
  }
  if (mode == CapabilityMode::statcom && s.p.cwiseAbs().maxCoeff() > 0.0) {
    throw DomainError("STATCOM points must have zero real power");
  }
  if (!d.is_idealised()) check_feeders(d, m);
  return CapabilityChart(d, m).contains(s);
}

TransferTable max_power_transfer(const Design& d, int m) {
  TransferTable table;
  table.pair = Eigen::MatrixXd::Zero(m, m);
  if (d.is_idealised()) {
    if (m < 2) throw ArgumentError("need at least two feeders");
    table.pair.setConstant(0.5);
    table.pair.diagonal().setZero();
    table.maximum = 0.5;
    return table;
  }
  const auto caps = enumerate_capacity_vectors(d, m);
  for (int i = 0; i < m; ++i) {
    for (int j = 0; j < m; ++j) {
      if (i == j) continue;
      double best = 0.0;
      for (const auto& c : caps) best = std::max(best, std::min(c[i], c[j]));
      table.pair(i, j) = best;
      table.maximum = std::max(table.maximum, best);
    }
  }
  return table;
}

std::vector<std::complex<double>> disaggregate(const InjectionPoint& s, const MultiplexerAssignment& b,
                                               const Design& d) {
  const int m = s.feeders();
  const CapacityVector caps = connected_capacity(d, b, m);
  std::vector<std::complex<double>> per_converter(static_cast<std::size_t>(d.converter_count()));
  if (d.is_fixed()) {
    for (int j = 0; j < d.converter_count(); ++j) {
      if (b.feeder[static_cast<std::size_t>(j)] != j) {
        throw InfeasibleAssignment("fixed SOP converters are hard-wired to their own feeder");
      }
    }
  }
  for (int i = 0; i < m; ++i) {
    if (caps[i] <= 0.0 && std::abs(std::complex<double>(s.p[i], s.q[i])) > 0.0) {
      throw InfeasibleAssignment("feeder " + std::to_string(i) + " carries power but has no converter");
    }
  }
  for (int j = 0; j < d.converter_count(); ++j) {
    const int i = b.feeder[static_cast<std::size_t>(j)];
    per_converter[static_cast<std::size_t>(j)] = std::complex<double>(s.p[i], s.q[i]) * (d.alphas()[j] / caps[i]);
  }
  return per_converter;
}

void write_capacity_csv(std::ostream& os, const std::vector<CapacityVector>& caps) {
  if (caps.empty()) return;
  const auto m = caps.front().size();
  for (Eigen::Index i = 0; i < m; ++i) os << (i ? "," : "") << "s_plus_" << (i + 1);
  os << '\n';
  const auto old = os.precision(12);
  for (const auto& c : caps) {
    for (Eigen::Index i = 0; i < m; ++i) os << (i ? "," : "") << c[i];
    os << '\n';
  }
  os.precision(old);
}

}  // namespace mop
