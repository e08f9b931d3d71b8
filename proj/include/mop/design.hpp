#pragma once

#include <Eigen/Core>
#include <string>
#include <vector>

namespace mop {

enum class DesignKind { fixed, multiplexed, idealised };

// Per-unit converter sizing of a device. Capacities sum to one and are kept in
// non-increasing order; the idealised device has no discrete converters.
class Design {
 public:
  static Design multiplexed(std::vector<double> alphas);
  static Design fixed(std::vector<double> alphas);
  static Design idealised();

  DesignKind kind() const noexcept { return kind_; }
  const Eigen::VectorXd& alphas() const noexcept { return alphas_; }
  int converter_count() const noexcept { return static_cast<int>(alphas_.size()); }

  bool is_fixed() const noexcept { return kind_ == DesignKind::fixed; }
  bool is_idealised() const noexcept { return kind_ == DesignKind::idealised; }

  friend bool operator==(const Design& a, const Design& b);

 private:
  Design(DesignKind kind, Eigen::VectorXd alphas) : kind_(kind), alphas_(std::move(alphas)) {}

  DesignKind kind_;
  Eigen::VectorXd alphas_;
};

inline constexpr double kCapacityTolerance = 1e-12;

Design uniform_sizing(int n);
Design bisection_sizing(int n);
Design golden_sizing(int n);
Design fixed_sop(int m);
Design idealised_design();

// Replaces alphas[index] by the pair {s*fraction, s*(1-fraction)} and resorts.
Design split_refinement(const Design& d, int index, double fraction);

double golden_ratio();

std::string to_string(DesignKind kind);
DesignKind design_kind_from_string(const std::string& s);

// Short human label, e.g. "G(3)", "U_Fx(4)", "Omega".
std::string describe(const Design& d);

// Builds a design from a strategy name ("uniform", "bisection", "golden",
// "fixed", "idealised") and a converter count.
Design design_from_strategy(const std::string& strategy, int n);

}  // namespace mop
