#include "mop/ccv_analytic.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <numbers>
#include <ostream>
#include <sstream>

#include "mop/elliptic.hpp"
#include "mop/errors.hpp"
#include "mop/quadrature.hpp"

namespace mop {

namespace {

constexpr double kSqrt2 = std::numbers::sqrt2;

void require_two_feeders(const Design& d, int m, const char* what) {
  if (m != 2) throw UnsupportedOperation(std::string(what) + " is only defined for two feeders; use Monte Carlo");
  if (d.is_fixed() && d.converter_count() != 2) throw InvalidDesign("fixed SOP must have two converters here");
}

std::vector<std::pair<double, double>> capacity_pairs(const Design& d) {
  std::vector<std::pair<double, double>> pairs;
  for (const auto& c : enumerate_capacity_vectors(d, 2)) pairs.emplace_back(c[0], c[1]);
  return pairs;
}

// Idealised (Q1, Q2) cross-section at real transfer p: the region
// sqrt(p^2 + q1^2) + sqrt(p^2 + q2^2) <= 1.
double idealised_cross_section(double p) {
  p = std::abs(p);
  if (p >= 0.5) return 0.0;
  const double x_max = std::sqrt(1.0 - 2.0 * p);
  auto height = [p](double x) {
    const double r = 1.0 - std::sqrt(p * p + x * x);
    return std::sqrt(std::max(0.0, r * r - p * p));
  };
  // x = x_max (1 - u^2) removes the square-root edge at x_max.
  auto integrand = [&](double u) { return height(x_max * (1.0 - u * u)) * 2.0 * x_max * u; };
  return 4.0 * quad::adaptive_simpson(integrand, 0.0, 1.0, 1e-15);
}

}  // namespace

double staircase_area(std::vector<std::pair<double, double>> rectangles) {
  std::sort(rectangles.begin(), rectangles.end(), [](const auto& a, const auto& b) {
    return a.first != b.first ? a.first > b.first : a.second > b.second;
  });
  double area = 0.0;
  double height = 0.0;
  for (std::size_t k = 0; k < rectangles.size(); ++k) {
    height = std::max(height, rectangles[k].second);
    const double next_width = k + 1 < rectangles.size() ? rectangles[k + 1].first : 0.0;
    area += (rectangles[k].first - next_width) * height;
  }
  return area;
}

double statcom_ccv_staircase(const Design& d, int m) {
  if (d.is_idealised()) throw UnsupportedOperation("use statcom_ccv_idealised for the idealised device");
  require_two_feeders(d, m, "staircase STATCOM volume");
  return 4.0 * staircase_area(capacity_pairs(d));
}

double statcom_ccv_idealised(int m) {
  if (m < 2) throw ArgumentError("need at least two feeders");
  double v = 1.0;
  for (int k = 1; k <= m; ++k) v *= 2.0 / k;
  return v;
}

double upf_ccv_two_feeder(const Design& d) { return 2.0 * kSqrt2 * max_power_transfer(d, 2).maximum; }

double pq_cross_section_area(const Design& d, double p) {
  if (d.is_idealised()) return idealised_cross_section(p);
  require_two_feeders(d, 2, "PQ cross-section");
  const double p2 = p * p;
  std::vector<std::pair<double, double>> rects;
  for (const auto& [c1, c2] : capacity_pairs(d)) {
    if (std::min(c1, c2) < std::abs(p)) continue;
    rects.emplace_back(std::sqrt(c1 * c1 - p2), std::sqrt(c2 * c2 - p2));
  }
  return 4.0 * staircase_area(std::move(rects));
}

EllipticCcvTerms pq_ccv_elliptic_terms(const Design& d) {
  if (d.kind() != DesignKind::multiplexed || d.converter_count() != 3) {
    throw UnsupportedOperation("closed-form PQ volume needs a three-converter multiplexed design");
  }
  const auto& a = d.alphas();
  if (std::abs(a[0] - 0.5) > kCapacityTolerance) {
    throw UnsupportedOperation("closed-form PQ volume needs the largest converter at 0.5 pu; use quadrature");
  }
  EllipticCcvTerms t;
  // 0.5 * integral over [0, 1/2] of (1/4 - P^2).
  t.r1 = 1.0 / 24.0;
  t.r2 = w_integral(a[0] + a[2], a[1]) - w_integral(a[0], a[1]);
  t.r3 = w_integral(a[0] + a[1], a[2]) - w_integral(a[0] + a[2], a[2]);
  t.ccv = 16.0 * kSqrt2 * (t.r1 + t.r2 + t.r3);
  return t;
}

double pq_ccv_elliptic(const Design& d) { return pq_ccv_elliptic_terms(d).ccv; }

double pq_ccv_quadrature(const Design& d, int m, int panels) {
  if (panels < 32 || panels % 2 != 0) throw ArgumentError("PQ quadrature needs an even panel count >= 32");
  if (d.is_idealised()) {
    if (m != 2) throw UnsupportedOperation("PQ quadrature is only defined for two feeders; use Monte Carlo");
    auto area = [](double p) { return idealised_cross_section(p); };
    return 2.0 * kSqrt2 * quad::simpson_upper_sqrt(area, 0.0, 0.5, panels);
  }
  require_two_feeders(d, m, "PQ quadrature");

  // The cross-section loses rectangles where |P| crosses min(c1, c2); each
  // such breakpoint carries a square-root edge from the left.
  const auto pairs = capacity_pairs(d);
  std::vector<double> breaks;
  for (const auto& [c1, c2] : pairs) {
    const double b = std::min(c1, c2);
    if (b > 0.0) breaks.push_back(b);
  }
  std::sort(breaks.begin(), breaks.end());
  breaks.erase(std::unique(breaks.begin(), breaks.end(),
                           [](double x, double y) { return std::abs(x - y) <= kCapacityTolerance; }),
               breaks.end());

  auto area = [&](double p) { return pq_cross_section_area(d, p); };
  double integral = 0.0;
  double lower = 0.0;
  for (double upper : breaks) {
    integral += quad::simpson_upper_sqrt(area, lower, upper, panels);
    lower = upper;
  }
  return 2.0 * kSqrt2 * integral;
}

CheckedQuadrature pq_ccv_quadrature_checked(const Design& d, int m, int panels) {
  if (panels % 4 != 0 || panels / 2 < 32) throw ArgumentError("halving check needs panels divisible by 4 and >= 64");
  CheckedQuadrature r;
  r.value = pq_ccv_quadrature(d, m, panels);
  r.halving_change = std::abs(r.value - pq_ccv_quadrature(d, m, panels / 2));
  return r;
}

std::vector<Design> table1_designs() {
  return {fixed_sop(2), uniform_sizing(3), bisection_sizing(3), golden_sizing(3), idealised_design()};
}

std::vector<Table1Row> table1() {
  std::vector<Table1Row> rows;
  for (const auto& d : table1_designs()) {
    Table1Row row;
    row.label = describe(d);
    row.converters = d.converter_count();
    row.mpt = max_power_transfer(d, 2).maximum;
    row.upf = upf_ccv_two_feeder(d);
    row.statcom = d.is_idealised() ? statcom_ccv_idealised(2) : statcom_ccv_staircase(d);
    const bool closed_form = d.kind() == DesignKind::multiplexed && d.converter_count() == 3 &&
                             std::abs(d.alphas()[0] - 0.5) <= kCapacityTolerance;
    row.pq = closed_form ? pq_ccv_elliptic(d) : pq_ccv_quadrature(d);
    rows.push_back(row);
  }
  return rows;
}

double table1_cell(const Table1Row& row, CapabilityMode mode) {
  switch (mode) {
    case CapabilityMode::mpt: return row.mpt;
    case CapabilityMode::upf: return row.upf;
    case CapabilityMode::statcom: return row.statcom;
    case CapabilityMode::pq: return row.pq;
  }
  return 0.0;
}

void write_table1_csv(std::ostream& os, const std::vector<Table1Row>& rows) {
  os << "design,n,mpt,upf,statcom,pq\n";
  const auto old = os.precision(10);
  for (const auto& r : rows) {
    os << r.label << ',';
    if (r.converters > 0) {
      os << r.converters;
    } else {
      os << '-';
    }
    os << ',' << r.mpt << ',' << r.upf << ',' << r.statcom << ',' << r.pq << '\n';
  }
  os.precision(old);
}

std::vector<GoldenCell> read_golden_csv(std::istream& is) {
  std::vector<GoldenCell> cells;
  std::string line;
  int line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#') continue;
    if (line.rfind("design,", 0) == 0) continue;
    std::istringstream ls(line);
    std::string label, mode, value, tol;
    if (!std::getline(ls, label, ',') || !std::getline(ls, mode, ',') || !std::getline(ls, value, ',') ||
        !std::getline(ls, tol, ',')) {
      throw ParseError("golden file line " + std::to_string(line_no) + ": expected 4 columns", line_no);
    }
    try {
      cells.push_back({label, capability_mode_from_string(mode), std::stod(value), std::stod(tol)});
    } catch (const std::invalid_argument&) {
      throw ParseError("golden file line " + std::to_string(line_no) + ": bad number", line_no);
    }
  }
  return cells;
}

std::vector<GoldenMismatch> compare_with_golden(const std::vector<Table1Row>& rows,
                                                const std::vector<GoldenCell>& golden) {
  std::vector<GoldenMismatch> mismatches;
  for (const auto& cell : golden) {
    auto it = std::find_if(rows.begin(), rows.end(), [&](const Table1Row& r) { return r.label == cell.label; });
    if (it == rows.end()) {
      mismatches.push_back({cell, std::nan("")});
      continue;
    }
    const double v = table1_cell(*it, cell.mode);
    if (!(std::abs(v - cell.value) <= cell.tolerance)) mismatches.push_back({cell, v});
  }
  return mismatches;
}

std::vector<std::pair<double, double>> capability_boundary(const Design& d, CapabilityMode mode, int samples) {
  std::vector<std::pair<double, double>> pts;
  if (samples < 2) throw ArgumentError("need at least two boundary samples");
  switch (mode) {
    case CapabilityMode::upf:
    case CapabilityMode::mpt: {
      const double t = max_power_transfer(d, 2).maximum;
      pts = {{-t, t}, {t, -t}};
      break;
    }
    case CapabilityMode::statcom: {
      if (d.is_idealised()) {
        pts = {{0.0, 1.0}, {1.0, 0.0}};
        break;
      }
      auto rects = capacity_pairs(d);
      std::sort(rects.begin(), rects.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
      // Walk the staircase from the q2 axis outward.
      double x = 0.0;
      for (std::size_t k = 0; k < rects.size(); ++k) {
        double h = 0.0;
        for (std::size_t j = k; j < rects.size(); ++j) h = std::max(h, rects[j].second);
        pts.emplace_back(x, h);
        pts.emplace_back(rects[k].first, h);
        x = rects[k].first;
      }
      pts.emplace_back(x, 0.0);
      break;
    }
    case CapabilityMode::pq: {
      for (int k = 0; k < samples; ++k) {
        const double p = -0.5 + static_cast<double>(k) / (samples - 1);
        double q1 = 0.0;
        if (d.is_idealised()) {
          // Q2 = 0: |P| + sqrt(P^2 + Q1^2) <= 1.
          const double r = 1.0 - std::abs(p);
          q1 = std::sqrt(std::max(0.0, r * r - p * p));
        } else {
          for (const auto& [c1, c2] : capacity_pairs(d)) {
            if (c2 >= std::abs(p) && c1 >= std::abs(p)) q1 = std::max(q1, std::sqrt(c1 * c1 - p * p));
          }
        }
        pts.emplace_back(p, q1);
      }
      break;
    }
  }
  return pts;
}

void write_boundary_csv(std::ostream& os, const std::vector<std::pair<double, double>>& points,
                        const std::string& x_name, const std::string& y_name) {
  os << x_name << ',' << y_name << '\n';
  const auto old = os.precision(10);
  for (const auto& [x, y] : points) os << x << ',' << y << '\n';
  os.precision(old);
}

}  // namespace mop
