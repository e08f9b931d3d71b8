#pragma once

#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "mop/capability.hpp"
#include "mop/design.hpp"

namespace mop {

// Area of the union of rectangles [0, w] x [0, h] anchored at the origin.
double staircase_area(std::vector<std::pair<double, double>> rectangles);

// Two-feeder STATCOM volume: four quadrants of the staircase over S+.
double statcom_ccv_staircase(const Design& d, int m = 2);

// Volume of the unit cross-polytope sum|Q| <= 1, i.e. 2^m / m!.
double statcom_ccv_idealised(int m);

// Two-feeder UPF volume: the hyperplane segment |P1| <= MPT, length 2 sqrt(2) MPT.
double upf_ccv_two_feeder(const Design& d);

// Area of the (Q1, Q2) cross-section of the two-feeder PQ chart at real
// transfer P (full plane, all four quadrants).
double pq_cross_section_area(const Design& d, double p);

struct EllipticCcvTerms {
  double r1 = 0.0;
  double r2 = 0.0;
  double r3 = 0.0;
  double ccv = 0.0;
};

// Closed-form PQ volume of a three-converter, two-feeder device whose largest
// converter is half the total rating.
EllipticCcvTerms pq_ccv_elliptic_terms(const Design& d);
double pq_ccv_elliptic(const Design& d);

inline constexpr int kDefaultSimpsonPanels = 1024;

// sqrt(2) times the integral of pq_cross_section_area over P, by composite
// Simpson on each interval between the cross-section's breakpoints.
double pq_ccv_quadrature(const Design& d, int m = 2, int panels = kDefaultSimpsonPanels);

struct CheckedQuadrature {
  double value = 0.0;
  double halving_change = 0.0;  // |value(panels) - value(panels / 2)|
};

CheckedQuadrature pq_ccv_quadrature_checked(const Design& d, int m = 2, int panels = kDefaultSimpsonPanels);

struct Table1Row {
  std::string label;
  int converters = 0;  // 0 for the idealised device
  double mpt = 0.0;
  double upf = 0.0;
  double statcom = 0.0;
  double pq = 0.0;
};

std::vector<Design> table1_designs();
std::vector<Table1Row> table1();

double table1_cell(const Table1Row& row, CapabilityMode mode);

void write_table1_csv(std::ostream& os, const std::vector<Table1Row>& rows);

struct GoldenCell {
  std::string label;
  CapabilityMode mode;
  double value;
  double tolerance;
};

// Reads design,mode,value,tolerance rows.
std::vector<GoldenCell> read_golden_csv(std::istream& is);

struct GoldenMismatch {
  GoldenCell cell;
  double computed;
};

std::vector<GoldenMismatch> compare_with_golden(const std::vector<Table1Row>& rows,
                                                const std::vector<GoldenCell>& golden);

// Plot-ready boundary samples for two-feeder charts (m = 2):
//   statcom: first-quadrant staircase vertices (q1, q2)
//   pq:      upper boundary of the Q2 = 0 slice, (p, q1)
//   upf:     segment end points (p1, p2)
std::vector<std::pair<double, double>> capability_boundary(const Design& d, CapabilityMode mode,
                                                           int samples = 201);

void write_boundary_csv(std::ostream& os, const std::vector<std::pair<double, double>>& points,
                        const std::string& x_name, const std::string& y_name);

}  // namespace mop
