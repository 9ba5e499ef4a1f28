#pragma once

#include <cmath>
#include <cstddef>

namespace pulsir {

struct QuadratureOptions {
  double abs_tol = 1e-10;
  /// Maximum number of interval bisections along any branch.
  int max_depth = 40;
  /// Uniform panels the interval is split into before adaptation starts.
  int initial_panels = 16;
};

struct QuadratureResult {
  double value = 0.0;
  double error_estimate = 0.0;
  std::size_t evaluations = 0;
  /// False when some branch hit max_depth before meeting its share of the tolerance.
  bool converged = true;
};

namespace detail {

template <class F>
double simpson_recurse(F& f, double a, double b, double fa, double fm, double fb, double whole, double tol,
                       int depth, QuadratureResult& out) {
  const double m = 0.5 * (a + b);
  const double lm = 0.5 * (a + m);
  const double rm = 0.5 * (m + b);
  const double flm = f(lm);
  const double frm = f(rm);
  out.evaluations += 2;
  const double h = b - a;
  const double left = h / 12.0 * (fa + 4.0 * flm + fm);
  const double right = h / 12.0 * (fm + 4.0 * frm + fb);
  const double delta = left + right - whole;
  if (std::abs(delta) <= 15.0 * tol) {
    out.error_estimate += std::abs(delta) / 15.0;
    return left + right + delta / 15.0;
  }
  if (depth <= 0) {
    out.converged = false;
    out.error_estimate += std::abs(delta) / 15.0;
    return left + right + delta / 15.0;
  }
  return simpson_recurse(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1, out) +
         simpson_recurse(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1, out);
}

}  // namespace detail

/// Adaptive Simpson quadrature with Richardson correction.
template <class F>
QuadratureResult adaptive_simpson(F&& f, double a, double b, const QuadratureOptions& opts = {}) {
  QuadratureResult out;
  const int panels = opts.initial_panels > 0 ? opts.initial_panels : 1;
  const double width = (b - a) / panels;
  const double panel_tol = opts.abs_tol / panels;
  double fa = f(a);
  out.evaluations = 1;
  for (int k = 0; k < panels; ++k) {
    const double lo = a + k * width;
    const double hi = (k + 1 == panels) ? b : a + (k + 1) * width;
    const double mid = 0.5 * (lo + hi);
    const double fm = f(mid);
    const double fb = f(hi);
    out.evaluations += 2;
    const double whole = (hi - lo) / 6.0 * (fa + 4.0 * fm + fb);
    out.value += detail::simpson_recurse(f, lo, hi, fa, fm, fb, whole, panel_tol, opts.max_depth, out);
    fa = fb;
  }
  return out;
}

}  // namespace pulsir
