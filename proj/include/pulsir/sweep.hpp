#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "pulsir/analysis.hpp"

namespace pulsir {

/// n evenly spaced values from lo to hi inclusive.
std::vector<double> linspace(double lo, double hi, std::size_t n);

struct SweepGrid {
  std::vector<double> T_values;
  std::vector<double> p_values;
  /// Per-cell horizon in pulse periods.
  double horizon_periods = 3000.0;
  double tol = 1e-6;
  State initial{0.5, 0.4, 0.0, 0.0};
  IntegratorConfig config;
  /// Cells with |p - p_i(T)| below this are excluded from the agreement statistic.
  double boundary_band = 0.02;

  void validate() const;
};

struct SweepCell {
  double T = 0.0;
  double p = 0.0;
  Regime analytic = Regime::Undetermined;
  Regime empirical = Regime::Undetermined;
  double lyapunov = 0.0;  // NaN unless probed
  double residual = 0.0;
  bool boundary = false;
  std::string error;  // non-empty when the cell failed

  bool agrees() const { return error.empty() && analytic == empirical; }
};

struct SweepResult {
  /// Row-major: T outer, p inner.
  std::vector<SweepCell> cells;
  std::size_t n_T = 0;
  std::size_t n_p = 0;
  std::size_t failures = 0;

  const SweepCell& at(std::size_t iT, std::size_t ip) const { return cells[iT * n_p + ip]; }
  std::vector<const SweepCell*> discrepancies() const;
  std::size_t interior_cells() const;
  /// Fraction of non-boundary cells whose labels agree; NaN when there are none.
  double agreement() const;
};

/// Analytic curves sampled on the T axis of a grid, for overlaying on the label matrix.
struct CurveRow {
  double T = 0.0;
  double p1 = 0.0;
  double p2 = 0.0;  // NaN when A <= S_c
};

std::vector<CurveRow> curve_overlay(const ModelParams& base, const std::vector<double>& T_values);

/// Empirical vs analytic labels on the (T, p) plane. Cells run in parallel with OpenMP;
/// jobs = 0 keeps the runtime default. Per-cell failures are recorded in the cell.
SweepResult sweep_bifurcation_plane(const ModelParams& base, const SweepGrid& grid, int jobs = 0);

/// Single-threaded reference with identical per-cell work.
SweepResult sweep_bifurcation_plane_serial(const ModelParams& base, const SweepGrid& grid);

/// One cell of the sweep; exposed for tests.
SweepCell evaluate_cell(const ModelParams& base, const SweepGrid& grid, double T, double p);

}  // namespace pulsir
