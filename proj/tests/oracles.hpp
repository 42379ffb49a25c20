#pragma once

// Independent reference computations used to freeze expected values. None of
// these share code paths with the library under test.

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <cstdint>
#include <functional>
#include <optional>
#include <random>

namespace oracle {

/// Classical RK4 on s'' + nu s' + k c s = k with fixed step, returning s(t).
inline double rk4_s(double nu, double k, double c, double s0, double ds0, double t,
                    int steps = 20000) {
  const double h = t / steps;
  double s = s0, v = ds0;
  auto acc = [&](double ss, double vv) { return k - nu * vv - k * c * ss; };
  for (int i = 0; i < steps; ++i) {
    const double k1s = v, k1v = acc(s, v);
    const double k2s = v + 0.5 * h * k1v, k2v = acc(s + 0.5 * h * k1s, v + 0.5 * h * k1v);
    const double k3s = v + 0.5 * h * k2v, k3v = acc(s + 0.5 * h * k2s, v + 0.5 * h * k2v);
    const double k4s = v + h * k3v, k4v = acc(s + h * k3s, v + h * k3v);
    s += h / 6.0 * (k1s + 2 * k2s + 2 * k3s + k4s);
    v += h / 6.0 * (k1v + 2 * k2v + 2 * k3v + k4v);
  }
  return s;
}

/// Modal solution of y'' + nu y' + kc y = 0 via complex characteristic roots,
/// y = s - 1/c. Borderline (double root) uses the (a + b t) e^{-nu t/2} form.
struct Modal {
  std::complex<double> r1, r2, c1, c2;
  double a = 0, b = 0, lam = 0, inv_c = 0;
  bool repeated = false;

  Modal(double nu, double k, double c, double s0, double ds0) : inv_c(1.0 / c) {
    const double y0 = s0 - inv_c, v0 = ds0;
    const std::complex<double> disc(nu * nu - 4 * k * c, 0.0);
    if (std::abs(nu * nu - 4 * k * c) <= 1e-14 * nu * nu) {
      repeated = true;
      lam = -nu / 2;
      a = y0;
      b = v0 - lam * y0;
      return;
    }
    const auto root = std::sqrt(disc);
    r1 = (-nu + root) / 2.0;
    r2 = (-nu - root) / 2.0;
    c2 = (v0 - r1 * y0) / (r2 - r1);
    c1 = y0 - c2;
  }
  double s(double t) const {
    if (repeated) return inv_c + (a + b * t) * std::exp(lam * t);
    return inv_c + std::real(c1 * std::exp(r1 * t) + c2 * std::exp(r2 * t));
  }
  double ds(double t) const {
    if (repeated) return (b + lam * (a + b * t)) * std::exp(lam * t);
    return std::real(c1 * r1 * std::exp(r1 * t) + c2 * r2 * std::exp(r2 * t));
  }
};

/// Minimum of s over [0, T] along the same RK4 trajectory (stops at s <= 0).
inline double rk4_min_s(double nu, double k, double c, double s0, double ds0, double T,
                        int steps = 200000) {
  const double h = T / steps;
  double s = s0, v = ds0, m = s0;
  auto acc = [&](double ss, double vv) { return k - nu * vv - k * c * ss; };
  for (int i = 0; i < steps && m > 0.0; ++i) {
    const double k1s = v, k1v = acc(s, v);
    const double k2s = v + 0.5 * h * k1v, k2v = acc(s + 0.5 * h * k1s, v + 0.5 * h * k1v);
    const double k3s = v + 0.5 * h * k2v, k3v = acc(s + 0.5 * h * k2s, v + 0.5 * h * k2v);
    const double k4s = v + h * k3v, k4v = acc(s + h * k3s, v + h * k3v);
    s += h / 6.0 * (k1s + 2 * k2s + 2 * k3s + k4s);
    v += h / 6.0 * (k1v + 2 * k2v + 2 * k3v + k4v);
    m = std::min(m, s);
  }
  return m;
}

/// Inverted curve equation ds/dQ = Q / (sigma_nu Q + K - L s), regular at the
/// origin, integrated by RK4 from Q = 0 to q. Returns s(q).
inline double inverse_curve_s(double sigma_nu, double K, double L, double q, int steps = 4000) {
  auto f = [&](double Q, double s) { return Q / (sigma_nu * Q + K - L * s); };
  const double h = q / steps;
  double Q = 0.0, s = 0.0;
  for (int i = 0; i < steps; ++i) {
    const double a = f(Q, s);
    const double b = f(Q + 0.5 * h, s + 0.5 * h * a);
    const double cc = f(Q + 0.5 * h, s + 0.5 * h * b);
    const double d = f(Q + h, s + h * cc);
    s += h / 6.0 * (a + 2 * b + 2 * cc + d);
    Q += h;
  }
  return s;
}

/// Q at a given s for QQ' = sigma_nu Q + K - L s, found by bisection on the
/// inverted equation. `sign` picks the branch (+1 upper, -1 lower).
inline double curve_value(double sigma_nu, double K, double L, double s_target, double sign,
                          double q_max) {
  double lo = 0.0, hi = sign * q_max;
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (inverse_curve_s(sigma_nu, K, L, mid) < s_target) lo = mid; else hi = mid;
  }
  return 0.5 * (lo + hi);
}

/// First local minimum of a sampled function on (0, T], refined by bisection
/// on its derivative.
inline std::optional<double> first_minimum(const std::function<double(double)>& ds, double T,
                                           int n = 200000) {
  double prev = ds(0.0);
  const double h = T / n;
  for (int i = 1; i <= n; ++i) {
    const double t = i * h;
    const double cur = ds(t);
    if (prev < 0.0 && cur >= 0.0) {
      double lo = t - h, hi = t;
      for (int it = 0; it < 100; ++it) {
        const double m = 0.5 * (lo + hi);
        if (ds(m) < 0.0) lo = m; else hi = m;
      }
      return 0.5 * (lo + hi);
    }
    prev = cur;
  }
  return std::nullopt;
}

/// Deterministic generator for hand-rolled property tests.
class Gen {
public:
  explicit Gen(std::uint64_t seed) : rng_(seed) {}
  double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng_); }
  double log_uniform(double lo, double hi) {
    return std::exp(uniform(std::log(lo), std::log(hi)));
  }
  int integer(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng_); }
  std::mt19937_64& engine() { return rng_; }

private:
  std::mt19937_64 rng_;
};

}  // namespace oracle
