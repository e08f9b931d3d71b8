#include "mop/design.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <sstream>

#include "mop/errors.hpp"

namespace mop {

namespace {

Eigen::VectorXd sorted_descending(std::vector<double> values) {
  std::stable_sort(values.begin(), values.end(), std::greater<>());
  return Eigen::Map<const Eigen::VectorXd>(values.data(), static_cast<Eigen::Index>(values.size()));
}

void validate(const Eigen::VectorXd& alphas, const char* what) {
  if (alphas.size() < 2) {
    throw InvalidDesign(std::string(what) + " design needs at least two converters");
  }
  for (double a : alphas) {
    if (!(a > 0.0) || !std::isfinite(a)) {
      throw InvalidDesign(std::string(what) + " design has a non-positive converter size");
    }
  }
  if (std::abs(alphas.sum() - 1.0) > kCapacityTolerance) {
    std::ostringstream os;
    os << what << " design capacities sum to " << alphas.sum() << ", expected 1";
    throw InvalidDesign(os.str());
  }
}

void require_count(int n, const char* strategy) {
  if (n < 2) {
    throw InvalidDesign(std::string(strategy) + " sizing needs n >= 2, got " + std::to_string(n));
  }
}

}  // namespace

Design Design::multiplexed(std::vector<double> alphas) {
  auto sorted = sorted_descending(std::move(alphas));
  validate(sorted, "multiplexed");
  return Design(DesignKind::multiplexed, std::move(sorted));
}

Design Design::fixed(std::vector<double> alphas) {
  auto sorted = sorted_descending(std::move(alphas));
  validate(sorted, "fixed");
  return Design(DesignKind::fixed, std::move(sorted));
}

Design Design::idealised() { return Design(DesignKind::idealised, Eigen::VectorXd()); }

bool operator==(const Design& a, const Design& b) {
  if (a.kind_ != b.kind_ || a.alphas_.size() != b.alphas_.size()) return false;
  if (a.alphas_.size() == 0) return true;
  return (a.alphas_ - b.alphas_).cwiseAbs().maxCoeff() <= kCapacityTolerance;
}

double golden_ratio() { return 0.5 * (1.0 + std::sqrt(5.0)); }

Design uniform_sizing(int n) {
  require_count(n, "uniform");
  return Design::multiplexed(std::vector<double>(static_cast<std::size_t>(n), 1.0 / n));
}

Design bisection_sizing(int n) {
  require_count(n, "bisection");
  std::vector<double> alphas;
  alphas.reserve(static_cast<std::size_t>(n));
  double size = 0.5;
  for (int j = 0; j < n - 1; ++j) {
    alphas.push_back(size);
    size *= 0.5;
  }
  alphas.push_back(alphas.back());
  return Design::multiplexed(std::move(alphas));
}

Design golden_sizing(int n) {
  require_count(n, "golden");
  const double phi = golden_ratio();
  std::vector<double> alphas{0.5, 0.5};
  for (int k = 0; k < n - 2; ++k) {
    // alphas is non-increasing, so the back entry is the (last) smallest.
    const double s = alphas.back();
    alphas.pop_back();
    alphas.push_back(s * (phi - 1.0));
    alphas.push_back(s * (2.0 - phi));
    std::stable_sort(alphas.begin(), alphas.end(), std::greater<>());
  }
  return Design::multiplexed(std::move(alphas));
}

Design fixed_sop(int m) {
  if (m < 2) {
    throw InvalidDesign("fixed SOP needs m >= 2 feeders, got " + std::to_string(m));
  }
  return Design::fixed(std::vector<double>(static_cast<std::size_t>(m), 1.0 / m));
}

Design idealised_design() { return Design::idealised(); }

Design split_refinement(const Design& d, int index, double fraction) {
  if (d.kind() != DesignKind::multiplexed) {
    throw UnsupportedOperation("split refinement applies to multiplexed designs only");
  }
  if (index < 0 || index >= d.converter_count()) {
    throw ArgumentError("split index " + std::to_string(index) + " out of range");
  }
  if (!(fraction > 0.0 && fraction < 1.0)) {
    throw ArgumentError("split fraction must lie strictly inside (0, 1)");
  }
  std::vector<double> alphas(d.alphas().begin(), d.alphas().end());
  const double s = alphas[static_cast<std::size_t>(index)];
  alphas.erase(alphas.begin() + index);
  alphas.push_back(s * fraction);
  alphas.push_back(s * (1.0 - fraction));
  return Design::multiplexed(std::move(alphas));
}

std::string to_string(DesignKind kind) {
  switch (kind) {
    case DesignKind::fixed: return "fixed";
    case DesignKind::multiplexed: return "multiplexed";
    case DesignKind::idealised: return "idealised";
  }
  return "unknown";
}

DesignKind design_kind_from_string(const std::string& s) {
  if (s == "fixed") return DesignKind::fixed;
  if (s == "multiplexed") return DesignKind::multiplexed;
  if (s == "idealised") return DesignKind::idealised;
  throw ArgumentError("unknown design kind '" + s + "'");
}

std::string describe(const Design& d) {
  switch (d.kind()) {
    case DesignKind::idealised: return "Omega";
    case DesignKind::fixed: return "U_Fx(" + std::to_string(d.converter_count()) + ")";
    case DesignKind::multiplexed: break;
  }
  const int n = d.converter_count();
  if (d == uniform_sizing(n)) return "U(" + std::to_string(n) + ")";
  if (d == bisection_sizing(n)) return "B(" + std::to_string(n) + ")";
  if (d == golden_sizing(n)) return "G(" + std::to_string(n) + ")";
  std::ostringstream os;
  os << "M[";
  for (int j = 0; j < n; ++j) os << (j ? "," : "") << d.alphas()[j];
  os << "]";
  return os.str();
}

Design design_from_strategy(const std::string& strategy, int n) {
  if (strategy == "uniform") return uniform_sizing(n);
  if (strategy == "bisection") return bisection_sizing(n);
  if (strategy == "golden") return golden_sizing(n);
  if (strategy == "fixed") return fixed_sop(n);
  if (strategy == "idealised") return idealised_design();
  throw ArgumentError("unknown sizing strategy '" + strategy + "'");
}

}  // namespace mop
