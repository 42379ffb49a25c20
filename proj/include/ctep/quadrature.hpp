#pragma once

// Composite Simpson quadrature and finite differences on sampled data over a
// strictly increasing, possibly nonuniform grid.

#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "ctep/error.hpp"

namespace ctep::quad {

namespace detail {

// Integrals over [x0, x1] and [x0, x2] of the parabola through three points.
struct PanelIntegrals {
  double first;
  double both;
};

inline PanelIntegrals parabola(double x0, double x1, double x2, double y0, double y1,
                               double y2) {
  const double h0 = x1 - x0, h1 = x2 - x1, H = h0 + h1;
  const double both = H / 6.0 * ((2.0 - h1 / h0) * y0 + H * H / (h0 * h1) * y1 +
                                 (2.0 - h0 / h1) * y2);
  // Left interval: exact for the quadratic, from its Lagrange weights.
  const double w0 = h0 * (2.0 * h0 + 3.0 * h1) / (6.0 * H);
  const double w1 = h0 * (h0 + 3.0 * h1) / (6.0 * h1);
  const double w2 = -h0 * h0 * h0 / (6.0 * h1 * H);
  return {w0 * y0 + w1 * y1 + w2 * y2, both};
}

// Integral over [x1, x2] of the parabola through (x0, x1, x2).
inline double last_interval(double x0, double x1, double x2, double y0, double y1, double y2) {
  auto p = parabola(x0, x1, x2, y0, y1, y2);
  return p.both - p.first;
}

inline void require_grid(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 3) {
    throw Error(ErrorCode::InvalidField, "quadrature needs at least three matching samples");
  }
  for (std::size_t i = 1; i < x.size(); ++i) {
    if (!(x[i] > x[i - 1])) throw Error(ErrorCode::InvalidField, "grid must be strictly increasing");
  }
}

}  // namespace detail

/// Running integral C[i] = int_{x[0]}^{x[i]} y. Pairs of intervals use
/// Simpson's rule, so C.back() is the composite Simpson value; an odd trailing
/// interval uses the parabola through the last three points.
inline std::vector<double> cumulative_simpson(std::span<const double> x,
                                              std::span<const double> y) {
  detail::require_grid(x, y);
  const std::size_t n = x.size();
  std::vector<double> out(n, 0.0);
  std::size_t i = 0;
  for (; i + 2 < n; i += 2) {
    auto p = detail::parabola(x[i], x[i + 1], x[i + 2], y[i], y[i + 1], y[i + 2]);
    out[i + 1] = out[i] + p.first;
    out[i + 2] = out[i] + p.both;
  }
  if (i + 1 < n) {
    out[i + 1] = out[i] + detail::last_interval(x[i - 1], x[i], x[i + 1], y[i - 1], y[i], y[i + 1]);
  }
  return out;
}

inline double simpson(std::span<const double> x, std::span<const double> y) {
  return cumulative_simpson(x, y).back();
}

struct Estimate {
  double value;
  double error;
};

/// Simpson value with a Richardson error estimate |S_h - S_2h| / 15, where
/// S_2h uses every other sample. Needs at least five samples.
inline Estimate simpson_with_error(std::span<const double> x, std::span<const double> y) {
  const double fine = simpson(x, y);
  std::vector<double> xc, yc;
  for (std::size_t i = 0; i < x.size(); i += 2) {
    xc.push_back(x[i]);
    yc.push_back(y[i]);
  }
  if (xc.back() != x.back()) {
    xc.push_back(x.back());
    yc.push_back(y.back());
  }
  if (xc.size() < 3) return {fine, std::abs(fine)};
  const double coarse = simpson(xc, yc);
  return {fine, std::abs(fine - coarse) / 15.0};
}

/// Second-order derivative on a nonuniform grid: three-point centered
/// differences inside, three-point one-sided formulas at the ends.
inline std::vector<double> derivative(std::span<const double> x, std::span<const double> y) {
  detail::require_grid(x, y);
  const std::size_t n = x.size();
  std::vector<double> dy(n);
  for (std::size_t i = 1; i + 1 < n; ++i) {
    const double h0 = x[i] - x[i - 1], h1 = x[i + 1] - x[i];
    dy[i] = (-h1 / (h0 * (h0 + h1))) * y[i - 1] + ((h1 - h0) / (h0 * h1)) * y[i] +
            (h0 / (h1 * (h0 + h1))) * y[i + 1];
  }
  {
    const double h0 = x[1] - x[0], h1 = x[2] - x[1];
    dy[0] = (-(2.0 * h0 + h1) / (h0 * (h0 + h1))) * y[0] + ((h0 + h1) / (h0 * h1)) * y[1] +
            (-h0 / (h1 * (h0 + h1))) * y[2];
  }
  {
    const double h0 = x[n - 2] - x[n - 3], h1 = x[n - 1] - x[n - 2];
    dy[n - 1] = (h1 / (h0 * (h0 + h1))) * y[n - 3] + (-(h0 + h1) / (h0 * h1)) * y[n - 2] +
                ((2.0 * h1 + h0) / (h1 * (h0 + h1))) * y[n - 1];
  }
  return dy;
}

}  // namespace ctep::quad
