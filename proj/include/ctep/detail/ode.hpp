#pragma once

// Adaptive Dormand-Prince 5(4) stepping with dense output, on fixed-size
// states. Thin layer over Boost.odeint that reports failures as ctep::Error.

#include <array>
#include <cmath>
#include <cstddef>
#include <utility>

#include <boost/numeric/odeint.hpp>

#include "ctep/error.hpp"

namespace ctep::detail {

template <std::size_t N>
using State = std::array<double, N>;

template <std::size_t N>
class DenseIntegrator {
  using Base = boost::numeric::odeint::runge_kutta_dopri5<State<N>>;
  using Stepper =
      typename boost::numeric::odeint::result_of::make_dense_output<Base>::type;

public:
  struct Settings {
    double abs_tol = 1e-12;
    double rel_tol = 1e-10;
    double initial_dt = 1e-3;
    double min_dt = 1e-15;  // relative to max(1, |t|)
  };

  DenseIntegrator(double t0, const State<N>& y0, Settings cfg)
      : cfg_(cfg),
        stepper_(boost::numeric::odeint::make_dense_output(cfg.abs_tol, cfg.rel_tol, Base())) {
    stepper_.initialize(y0, t0, cfg.initial_dt);
  }

  /// Advances one accepted step. Returns the covered interval [t_prev, t_now].
  template <class Rhs>
  std::pair<double, double> step(Rhs&& rhs) {
    try {
      auto span = stepper_.do_step(rhs);
      if (std::abs(span.second - span.first) < cfg_.min_dt * std::max(1.0, std::abs(span.second))) {
        throw Error(ErrorCode::StepFailure, "adaptive step underflow");
      }
      return span;
    } catch (const boost::numeric::odeint::odeint_error& e) {
      throw Error(ErrorCode::StepFailure, e.what());
    }
  }

  /// Dense-output state anywhere inside the last accepted step.
  State<N> at(double t) const {
    State<N> y{};
    stepper_.calc_state(t, y);
    return y;
  }

  const State<N>& state() const { return stepper_.current_state(); }
  const State<N>& previous_state() const { return stepper_.previous_state(); }
  double time() const { return stepper_.current_time(); }
  double previous_time() const { return stepper_.previous_time(); }
  double dt() const { return stepper_.current_time_step(); }

  /// Shrinks the next step so that it does not pass `t_limit`.
  void limit_next_step(double t_limit) {
    const double remaining = t_limit - time();
    if (remaining > 0.0 && dt() > remaining) {
      stepper_.initialize(stepper_.current_state(), time(), remaining);
    }
  }

private:
  Settings cfg_;
  Stepper stepper_;
};

}  // namespace ctep::detail
