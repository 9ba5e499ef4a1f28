#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <limits>

#include <fmt/format.h>

#include "pulsir/errors.hpp"

namespace pulsir {

template <std::size_t N>
using Vec = std::array<double, N>;

struct StepControl {
  double rel_tol = 1e-9;
  double abs_tol = 1e-11;
  double max_step = 0.5;
  double min_step = 1e-13;
};

struct StepStats {
  std::size_t accepted = 0;
  std::size_t rejected = 0;
};

/// Dormand-Prince 5(4) embedded pair with FSAL, local extrapolation and a standard
/// I-controller. `advance` always lands exactly on the requested stop time; the step
/// suggestion carried in `h` survives a shortened final step, so segmenting an
/// integration at fixed event times does not collapse the step size.
template <std::size_t N>
class DormandPrince {
 public:
  explicit DormandPrince(StepControl ctl) : ctl_(ctl) {}

  const StepControl& control() const { return ctl_; }
  const StepStats& stats() const { return stats_; }

  /// Integrates y from t to t_stop (either direction). `fix` runs after every accepted
  /// step and may project the state (e.g. clamp roundoff undershoot). Throws NumericError
  /// on step-size underflow or a non-finite state; `y` and `t` then hold the last good values.
  template <class Rhs, class Fix>
  void advance(Rhs&& rhs, Vec<N>& y, double& t, double t_stop, double& h, Fix&& fix) {
    if (t == t_stop) return;
    const double dir = t_stop > t ? 1.0 : -1.0;
    const double max_step = std::min(ctl_.max_step, std::abs(t_stop - t));
    if (!(h > 0.0) || !std::isfinite(h)) h = std::min(max_step, initial_step(rhs, y, t, dir));
    h = std::min(h, ctl_.max_step);

    Vec<N> k1;
    rhs(t, y, k1);
    while (dir * (t_stop - t) > 0.0) {
      double step = h;
      bool lands = false;
      const double remaining = std::abs(t_stop - t);
      if (step >= remaining * (1.0 - 1e-12)) {
        step = remaining;
        lands = true;
      }
      if (step < ctl_.min_step && !lands) {
        throw NumericError(fmt::format("step size underflow at t = {:.17g} (h = {:.3g})", t, step));
      }

      Vec<N> y_new;
      Vec<N> k7;
      const double err = attempt(rhs, y, t, dir * step, k1, y_new, k7);
      if (!std::isfinite(err)) {
        ++stats_.rejected;
        h = 0.25 * step;
        if (h < ctl_.min_step) throw NumericError(fmt::format("non-finite state near t = {:.17g}", t));
        continue;
      }
      const double factor = err == 0.0 ? 5.0 : std::clamp(0.9 * std::pow(err, -0.2), 0.2, 5.0);
      if (err <= 1.0) {
        ++stats_.accepted;
        y = y_new;
        t = lands ? t_stop : t + dir * step;
        const double next = std::min(step * factor, ctl_.max_step);
        h = lands ? std::max(h, next) : next;
        if (fix(y)) {
          rhs(t, y, k1);
        } else {
          k1 = k7;
        }
      } else {
        ++stats_.rejected;
        h = step * std::max(factor, 0.1);
      }
    }
  }

  template <class Rhs>
  void advance(Rhs&& rhs, Vec<N>& y, double& t, double t_stop, double& h) {
    advance(rhs, y, t, t_stop, h, [](Vec<N>&) { return false; });
  }

 private:
  template <class Rhs>
  double initial_step(Rhs& rhs, const Vec<N>& y, double t, double dir) const {
    Vec<N> f0;
    rhs(t, y, f0);
    double d0 = 0.0;
    double d1 = 0.0;
    for (std::size_t i = 0; i < N; ++i) {
      const double sc = ctl_.abs_tol + ctl_.rel_tol * std::abs(y[i]);
      d0 += (y[i] / sc) * (y[i] / sc);
      d1 += (f0[i] / sc) * (f0[i] / sc);
    }
    d0 = std::sqrt(d0 / N);
    d1 = std::sqrt(d1 / N);
    double h0 = (d0 < 1e-5 || d1 < 1e-5) ? 1e-6 : 0.01 * d0 / d1;
    Vec<N> y1;
    for (std::size_t i = 0; i < N; ++i) y1[i] = y[i] + dir * h0 * f0[i];
    Vec<N> f1;
    rhs(t + dir * h0, y1, f1);
    double d2 = 0.0;
    for (std::size_t i = 0; i < N; ++i) {
      const double sc = ctl_.abs_tol + ctl_.rel_tol * std::abs(y[i]);
      d2 += ((f1[i] - f0[i]) / sc) * ((f1[i] - f0[i]) / sc);
    }
    d2 = std::sqrt(d2 / N) / h0;
    const double dmax = std::max(d1, d2);
    const double h1 = dmax <= 1e-15 ? std::max(1e-6, h0 * 1e-3) : std::pow(0.01 / dmax, 0.2);
    return std::min(100.0 * h0, h1);
  }

  // One trial step of signed size hs. Returns the scaled RMS error estimate.
  template <class Rhs>
  double attempt(Rhs& rhs, const Vec<N>& y, double t, double hs, const Vec<N>& k1, Vec<N>& y_new,
                 Vec<N>& k7) const {
    constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
    constexpr double a21 = 1.0 / 5;
    constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
    constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
    constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561, a54 = -212.0 / 729;
    constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                     a65 = -5103.0 / 18656;
    constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192, b5 = -2187.0 / 6784,
                     b6 = 11.0 / 84;
    constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920, e5 = -17253.0 / 339200,
                     e6 = 22.0 / 525, e7 = -1.0 / 40;

    Vec<N> k2, k3, k4, k5, k6, tmp;
    for (std::size_t i = 0; i < N; ++i) tmp[i] = y[i] + hs * a21 * k1[i];
    rhs(t + c2 * hs, tmp, k2);
    for (std::size_t i = 0; i < N; ++i) tmp[i] = y[i] + hs * (a31 * k1[i] + a32 * k2[i]);
    rhs(t + c3 * hs, tmp, k3);
    for (std::size_t i = 0; i < N; ++i) tmp[i] = y[i] + hs * (a41 * k1[i] + a42 * k2[i] + a43 * k3[i]);
    rhs(t + c4 * hs, tmp, k4);
    for (std::size_t i = 0; i < N; ++i) {
      tmp[i] = y[i] + hs * (a51 * k1[i] + a52 * k2[i] + a53 * k3[i] + a54 * k4[i]);
    }
    rhs(t + c5 * hs, tmp, k5);
    for (std::size_t i = 0; i < N; ++i) {
      tmp[i] = y[i] + hs * (a61 * k1[i] + a62 * k2[i] + a63 * k3[i] + a64 * k4[i] + a65 * k5[i]);
    }
    rhs(t + hs, tmp, k6);
    for (std::size_t i = 0; i < N; ++i) {
      y_new[i] = y[i] + hs * (b1 * k1[i] + b3 * k3[i] + b4 * k4[i] + b5 * k5[i] + b6 * k6[i]);
    }
    rhs(t + hs, y_new, k7);

    double acc = 0.0;
    for (std::size_t i = 0; i < N; ++i) {
      const double e = hs * (e1 * k1[i] + e3 * k3[i] + e4 * k4[i] + e5 * k5[i] + e6 * k6[i] + e7 * k7[i]);
      const double sc = ctl_.abs_tol + ctl_.rel_tol * std::max(std::abs(y[i]), std::abs(y_new[i]));
      if (!std::isfinite(y_new[i])) return std::numeric_limits<double>::infinity();
      acc += (e / sc) * (e / sc);
    }
    return std::sqrt(acc / N);
  }

  StepControl ctl_;
  StepStats stats_;
};

}  // namespace pulsir
