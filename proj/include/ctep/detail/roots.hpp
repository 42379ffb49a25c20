#pragma once

#include <cmath>
#include <utility>

#include <boost/math/tools/roots.hpp>

namespace ctep::detail {

/// Bisection to a bracket of width <= width_tol. f(lo) and f(hi) must differ
/// in sign (or one of them be zero).
template <class F>
std::pair<double, double> bracket_root(F&& f, double lo, double hi, double width_tol) {
  auto done = [width_tol](double a, double b) { return std::abs(b - a) <= width_tol; };
  return boost::math::tools::bisect(f, lo, hi, done);
}

template <class F>
double refine_root(F&& f, double lo, double hi, double width_tol) {
  auto [a, b] = bracket_root(f, lo, hi, width_tol);
  return 0.5 * (a + b);
}

}  // namespace ctep::detail
