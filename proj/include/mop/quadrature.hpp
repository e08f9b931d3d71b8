#pragma once

#include <cmath>
#include <utility>

#include "mop/errors.hpp"

namespace mop::quad {

// Composite Simpson rule on [a, b] with an even number of panels.
template <class Scalar, class F>
Scalar simpson(F&& f, Scalar a, Scalar b, int panels) {
  if (panels < 2 || panels % 2 != 0) throw ArgumentError("Simpson's rule needs an even panel count");
  const Scalar h = (b - a) / panels;
  Scalar odd = 0;
  Scalar even = 0;
  for (int k = 1; k < panels; ++k) {
    const Scalar x = a + h * k;
    (k % 2 ? odd : even) += f(x);
  }
  return h / 3 * (f(a) + f(b) + 4 * odd + 2 * even);
}

// Simpson on [a, b] after the substitution x = b - (b - a) u^2, which removes a
// sqrt(b - x) endpoint singularity at the upper limit.
template <class Scalar, class F>
Scalar simpson_upper_sqrt(F&& f, Scalar a, Scalar b, int panels) {
  const Scalar width = b - a;
  auto g = [&](Scalar u) { return f(b - width * u * u) * 2 * width * u; };
  return simpson(g, Scalar(0), Scalar(1), panels);
}

namespace detail {

template <class Scalar, class F>
Scalar adaptive_step(F& f, Scalar a, Scalar b, Scalar fa, Scalar fm, Scalar fb, Scalar whole, Scalar tol, int depth) {
  const Scalar m = (a + b) / 2;
  const Scalar lm = (a + m) / 2;
  const Scalar rm = (m + b) / 2;
  const Scalar flm = f(lm);
  const Scalar frm = f(rm);
  const Scalar left = (m - a) / 6 * (fa + 4 * flm + fm);
  const Scalar right = (b - m) / 6 * (fm + 4 * frm + fb);
  const Scalar delta = left + right - whole;
  using std::abs;
  if (depth <= 0 || abs(delta) <= 15 * tol) return left + right + delta / 15;
  return adaptive_step(f, a, m, fa, flm, fm, left, tol / 2, depth - 1) +
         adaptive_step(f, m, b, fm, frm, fb, right, tol / 2, depth - 1);
}

}  // namespace detail

// Adaptive Simpson with Richardson-corrected leaves.
template <class Scalar, class F>
Scalar adaptive_simpson(F&& f, Scalar a, Scalar b, Scalar tol, int max_depth = 40) {
  if (a == b) return Scalar(0);
  const Scalar fa = f(a);
  const Scalar fb = f(b);
  const Scalar fm = f((a + b) / 2);
  const Scalar whole = (b - a) / 6 * (fa + 4 * fm + fb);
  return detail::adaptive_step(f, a, b, fa, fm, fb, whole, tol, max_depth);
}

}  // namespace mop::quad
