#pragma once

#include <cmath>
#include <limits>
#include <numbers>

#include "mop/errors.hpp"

namespace mop {

// Complete elliptic integrals K and E at parameter tau (K(tau) integrates
// 1/sqrt(1 - tau sin^2 phi) over [0, pi/2]).
template <class Scalar>
struct EllipticPair {
  Scalar k_complete;
  Scalar e_complete;
  Scalar tau;
};

// Arithmetic-geometric mean evaluation; converges quadratically.
template <class Scalar>
EllipticPair<Scalar> elliptic_ke(Scalar tau) {
  using std::abs;
  using std::sqrt;
  if (!(tau >= Scalar(0)) || !(tau < Scalar(1))) {
    throw DomainError("elliptic parameter must lie in [0, 1)");
  }
  const Scalar pi = std::numbers::pi_v<Scalar>;
  Scalar a = 1;
  Scalar b = sqrt(Scalar(1) - tau);
  Scalar c2 = tau;  // c_n^2
  Scalar weight = Scalar(0.5);
  Scalar sum = weight * c2;
  const Scalar eps = std::numeric_limits<Scalar>::epsilon();
  for (int it = 0; it < 64; ++it) {
    const Scalar a_next = (a + b) / 2;
    const Scalar c = (a - b) / 2;
    b = sqrt(a * b);
    a = a_next;
    c2 = c * c;
    weight *= 2;
    sum += weight * c2;
    if (abs(c) <= eps * a) break;
  }
  const Scalar k = pi / (2 * a);
  return {k, k * (Scalar(1) - sum), tau};
}

// W(theta, gamma) = integral over [0, gamma] of sqrt((theta^2 - x^2)(gamma^2 - x^2)),
// in closed form through K and E at tau = (gamma/theta)^2.
template <class Scalar>
Scalar w_integral(Scalar theta, Scalar gamma) {
  if (!(gamma >= Scalar(0)) || !(theta >= gamma)) {
    throw DomainError("w_integral needs theta >= gamma >= 0");
  }
  if (theta == Scalar(0) || gamma == Scalar(0)) return Scalar(0);
  const Scalar t2 = theta * theta;
  const Scalar g2 = gamma * gamma;
  if (gamma == theta) return 2 * theta * t2 / 3;
  const auto ke = elliptic_ke(g2 / t2);
  return theta * ((t2 + g2) * ke.e_complete - (t2 - g2) * ke.k_complete) / 3;
}

}  // namespace mop
