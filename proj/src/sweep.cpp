#include "pulsir/sweep.hpp"

#include <cmath>
#include <limits>

#include <fmt/format.h>
#ifdef _OPENMP
#include <omp.h>
#endif

namespace pulsir {

std::vector<double> linspace(double lo, double hi, std::size_t n) {
  if (n == 0) return {};
  if (n == 1) return {lo};
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    out[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n - 1);
  }
  out.back() = hi;
  return out;
}

void SweepGrid::validate() const {
  if (T_values.empty() || p_values.empty()) throw DomainError("sweep axes must be nonempty");
  for (std::size_t i = 0; i < T_values.size(); ++i) {
    if (!(T_values[i] > 0.0)) throw DomainError("sweep T values must be positive");
    if (i > 0 && !(T_values[i] > T_values[i - 1])) throw DomainError("sweep T values must be strictly increasing");
  }
  for (std::size_t i = 0; i < p_values.size(); ++i) {
    if (!(p_values[i] >= 0.0 && p_values[i] <= 1.0)) throw DomainError("sweep p values must lie in [0, 1]");
    if (i > 0 && !(p_values[i] > p_values[i - 1])) throw DomainError("sweep p values must be strictly increasing");
  }
  if (!(horizon_periods >= 50.0)) throw DomainError("sweep horizon must cover at least 50 periods");
  if (!(boundary_band >= 0.0)) throw DomainError("boundary band must be nonnegative");
  config.validate();
}

std::vector<const SweepCell*> SweepResult::discrepancies() const {
  std::vector<const SweepCell*> out;
  for (const SweepCell& c : cells) {
    if (!c.agrees()) out.push_back(&c);
  }
  return out;
}

std::size_t SweepResult::interior_cells() const {
  std::size_t n = 0;
  for (const SweepCell& c : cells) n += c.boundary ? 0 : 1;
  return n;
}

double SweepResult::agreement() const {
  std::size_t total = 0;
  std::size_t good = 0;
  for (const SweepCell& c : cells) {
    if (c.boundary) continue;
    ++total;
    good += c.agrees() ? 1 : 0;
  }
  return total == 0 ? std::numeric_limits<double>::quiet_NaN() : static_cast<double>(good) / total;
}

std::vector<CurveRow> curve_overlay(const ModelParams& base, const std::vector<double>& T_values) {
  const double S_c = base.critical_susceptible();
  std::vector<CurveRow> rows;
  rows.reserve(T_values.size());
  for (double T : T_values) {
    CurveRow r;
    r.T = T;
    r.p1 = p1_curve(base.A, T);
    r.p2 = base.A > S_c ? p2_curve(base.A, S_c, T) : std::numeric_limits<double>::quiet_NaN();
    rows.push_back(r);
  }
  return rows;
}

SweepCell evaluate_cell(const ModelParams& base, const SweepGrid& grid, double T, double p) {
  SweepCell cell;
  cell.T = T;
  cell.p = p;
  cell.lyapunov = std::numeric_limits<double>::quiet_NaN();
  cell.residual = std::numeric_limits<double>::quiet_NaN();
  ModelParams params = base;
  params.T = T;
  params.p = p;
  try {
    const double S_c = params.critical_susceptible();
    const double p1 = p1_curve(params.A, T);
    double gap = std::abs(p - p1);
    if (params.A > S_c) gap = std::min(gap, std::abs(p - p2_curve(params.A, S_c, T)));
    cell.boundary = gap < grid.boundary_band;
    cell.analytic = params.gamma == 0.0 ? classify_analytic(params) : Regime::Undetermined;

    ClassifyOptions opts;
    opts.horizon = grid.horizon_periods * T;
    opts.tol = grid.tol;
    const OmegaLimitReport report = classify_empirical(params, grid.config, grid.initial, opts);
    cell.empirical = report.label;
    cell.residual = report.strobe_residual;
    if (report.lyapunov) cell.lyapunov = *report.lyapunov;
  } catch (const std::exception& e) {
    cell.error = e.what();
  }
  return cell;
}

namespace {

SweepResult prepare(const ModelParams& base, const SweepGrid& grid) {
  base.validate();
  grid.validate();
  SweepResult result;
  result.n_T = grid.T_values.size();
  result.n_p = grid.p_values.size();
  result.cells.resize(result.n_T * result.n_p);
  return result;
}

void count_failures(SweepResult& result) {
  result.failures = 0;
  for (const SweepCell& c : result.cells) result.failures += c.error.empty() ? 0 : 1;
}

}  // namespace

SweepResult sweep_bifurcation_plane(const ModelParams& base, const SweepGrid& grid, int jobs) {
  SweepResult result = prepare(base, grid);
  const auto n = static_cast<std::ptrdiff_t>(result.cells.size());
  const std::size_t n_p = result.n_p;
#ifdef _OPENMP
  const int threads = jobs > 0 ? jobs : omp_get_max_threads();
#pragma omp parallel for schedule(dynamic, 1) num_threads(threads)
#else
  (void)jobs;
#endif
  for (std::ptrdiff_t k = 0; k < n; ++k) {
    const auto idx = static_cast<std::size_t>(k);
    result.cells[idx] = evaluate_cell(base, grid, grid.T_values[idx / n_p], grid.p_values[idx % n_p]);
  }
  count_failures(result);
  return result;
}

SweepResult sweep_bifurcation_plane_serial(const ModelParams& base, const SweepGrid& grid) {
  SweepResult result = prepare(base, grid);
  for (std::size_t i = 0; i < result.n_T; ++i) {
    for (std::size_t j = 0; j < result.n_p; ++j) {
      result.cells[i * result.n_p + j] = evaluate_cell(base, grid, grid.T_values[i], grid.p_values[j]);
    }
  }
  count_failures(result);
  return result;
}

}  // namespace pulsir
