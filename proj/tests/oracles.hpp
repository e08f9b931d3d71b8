#pragma once

// Independent reference computations shared by the unit and acceptance tests.

#include <algorithm>
#include <boost/math/quadrature/tanh_sinh.hpp>
#include <cmath>
#include <limits>
#include <vector>

#include "mop/capability.hpp"
#include "mop/network.hpp"

namespace mop_test {

// Direct double-exponential quadrature of sqrt((theta^2 - x^2)(gamma^2 - x^2)) on [0, gamma].
inline double w_by_quadrature(double theta, double gamma) {
  if (gamma == 0.0) return 0.0;
  boost::math::quadrature::tanh_sinh<double> ts;
  auto f = [=](double x) { return std::sqrt((theta * theta - x * x) * std::max(0.0, gamma * gamma - x * x)); };
  return ts.integrate(f, 0.0, gamma);
}

// Two-feeder model: loss = (a1 - d1)^2 + (a2 - d2)^2 + (b1 - e1)^2, with d the
// delivered real power and e the delivered reactive power (pu).
inline mop::QuadraticLossModel toy_model(double a1, double a2, double b1) {
  mop::QuadraticLossModel m;
  m.q_matrix = Eigen::MatrixXd::Zero(4, 4);
  m.q_matrix(0, 0) = m.q_matrix(1, 1) = m.q_matrix(2, 2) = 1.0;
  m.q_vec = Eigen::VectorXd::Zero(4);
  m.q_vec << -2.0 * a1, -2.0 * a2, -2.0 * b1, 0.0;
  m.c_scalar = a1 * a1 + a2 * a2 + b1 * b1;
  m.base_kva = 1.0;
  return m;
}

// Feeder-2 inflow balancing the dc link, q2 = 0: p1 + p2 = kappa (s1 + |p2|).
inline double balancing_p2(double p1, double s1, double kappa) {
  const double rhs = kappa * s1 - p1;
  return rhs >= 0.0 ? rhs / (1.0 - kappa) : rhs / (1.0 + kappa);
}

// Grid search over (p1, q1) at the given resolution for every capacity vector
// of a toy model (the optimum has q2 = 0 because q2 carries no network term).
inline double grid_oracle(const mop::QuadraticLossModel& model, const std::vector<mop::CapacityVector>& caps,
                          double kappa, double step = 1e-3) {
  double best = std::numeric_limits<double>::infinity();
  for (const auto& c : caps) {
    const int n = static_cast<int>(std::floor(c[0] / step + 1e-9));
    for (int i = -n; i <= n; ++i) {
      for (int j = -n; j <= n; ++j) {
        const double p1 = i * step, q1 = j * step;
        const double s1 = std::hypot(p1, q1);
        if (s1 > c[0]) continue;
        const double p2 = balancing_p2(p1, s1, kappa);
        if (std::abs(p2) > c[1]) continue;
        const double d1 = -p1, d2 = -p2, e1 = -q1;
        const double net = model.q_matrix(0, 0) * d1 * d1 + model.q_matrix(1, 1) * d2 * d2 +
                           model.q_matrix(2, 2) * e1 * e1 + model.q_vec[0] * d1 + model.q_vec[1] * d2 +
                           model.q_vec[2] * e1 + model.c_scalar;
        best = std::min(best, net + kappa * (s1 + std::abs(p2)));
      }
    }
  }
  return best;
}

}  // namespace mop_test
