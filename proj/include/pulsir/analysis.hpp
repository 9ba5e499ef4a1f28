#pragma once

#include <cstddef>
#include <optional>
#include <vector>

#include "pulsir/closedform.hpp"
#include "pulsir/integrator.hpp"
#include "pulsir/model.hpp"

namespace pulsir {

/// Empirical omega-limit classification of one initial condition.
///
/// Residuals are computed from the post-jump stroboscopic samples only:
///  - strobe_residual: max over the final `window` consecutive pairs of max(|dS|, |dI|);
///  - target_distance: max over the same window of the sup-distance to the candidate limit
///    (origin, (x1*, 0), or the endemic equilibrium) that produced the label, NaN otherwise;
///  - min_I_tail / max_I_tail: extremes of I over the window.
/// The endemic-periodic label also needs the geometric tail d_last * rho / (1 - rho) below tol,
/// rho = (d_last / d_first)^(1/(window-1)) from the first and last step sizes, and the
/// extrapolated I limit above tol. A slowly decaying I therefore never qualifies.
struct OmegaLimitReport {
  Regime label = Regime::Undetermined;
  std::vector<Point2> terminal_strobe;
  double strobe_residual = 0.0;
  double target_distance = 0.0;
  double min_I_tail = 0.0;
  double max_I_tail = 0.0;
  std::optional<double> lyapunov;
  double horizon_used = 0.0;
  std::size_t pulses = 0;
};

struct ClassifyOptions {
  /// Upper bound on integration time; classification stops at the first pulse where a
  /// label is established. Must be at least 50 T.
  double horizon = 0.0;
  double tol = 1e-6;
  std::size_t window = 50;
  /// Positive-exponent threshold for the Chaotic label (only probed when non-convergent).
  double chaos_threshold = 0.02;
  bool probe_lyapunov = true;
};

OmegaLimitReport classify_empirical(const ModelParams& params, const IntegratorConfig& config,
                                    const State& initial, const ClassifyOptions& options);

/// Convenience overload with default window and chaos threshold.
OmegaLimitReport classify_empirical(const ModelParams& params, const IntegratorConfig& config,
                                    const State& initial, double horizon, double tol);

struct EndemicOrbitOptions {
  double tol = 1e-9;
  std::size_t max_newton = 50;
  std::size_t damped_iterations = 5;
  double damping = 0.5;
  /// Largest step in p used while continuing from the unvaccinated equilibrium.
  double continuation_step = 0.05;
  double sample_dt = 0.01;
};

struct EndemicOrbit {
  Point2 fixed_point;        // post-jump state at t = 0 (mod T)
  double residual = 0.0;     // sup-norm of P(x) - x
  std::size_t iterations = 0;
  double mean_S = 0.0;       // (1/T) int_0^T S dt along the orbit
  Matrix2 strobe_jacobian{}; // DP at the fixed point
  std::vector<State> samples;  // one period, post-jump start to pre-jump end
};

/// Fixed point of the stroboscopic map P = jump o flow_T in region 4, found by continuation
/// in p from the unvaccinated endemic equilibrium. At each continuation step a few damped
/// fixed-point iterations precede Newton steps that use the variational Jacobian of P.
/// ExistenceError unless gamma = 0, A > S_c and 0 <= p < p2(T); NumericError when Newton
/// stalls above the tolerance.
EndemicOrbit find_endemic_orbit(const ModelParams& params, const IntegratorConfig& config,
                                const EndemicOrbitOptions& options = {});

struct LyapunovOptions {
  double horizon = 0.0;
  /// Zero selects one pulse period.
  double renorm_every = 0.0;
  double transient_fraction = 0.2;
  double theta0 = 0.0;
};

struct LyapunovEstimate {
  double exponent = 0.0;
  /// Running average of the exponent after the transient, one entry per renormalization.
  std::vector<double> times;
  std::vector<double> running;
  std::size_t reseeds = 0;
};

/// Largest Lyapunov exponent of the (possibly seasonal) impulsive flow, from the averaged
/// log-stretch of a renormalized tangent vector. Requires horizon >= 500 T.
LyapunovEstimate lyapunov_max(const ModelParams& params, const IntegratorConfig& config, const State& initial,
                              const LyapunovOptions& options);

struct SectionPoint {
  double t = 0.0;
  double S = 0.0;
  double I = 0.0;
};

/// Crossings of theta = theta_star in the increasing direction, linearly interpolated between
/// consecutive samples. Pairs of samples straddling a pulse are never interpolated across.
std::vector<SectionPoint> poincare_section(const Trajectory& trajectory, double theta_star);

/// Number of clusters when points closer than `radius` are chained together.
std::size_t count_clusters(const std::vector<SectionPoint>& points, double radius);

/// Mean Euclidean distance from each point to its nearest neighbour in (S, I).
double mean_nearest_neighbor(const std::vector<SectionPoint>& points);

struct PermanenceBounds {
  double c1 = 0.0;  // min S
  double c2 = 0.0;  // min I
  double C1 = 0.0;  // max S
  double C2 = 0.0;  // max I
  std::size_t pulses_in_tail = 0;
  /// The tail covers at least 100 pulses.
  bool sufficient = false;
};

/// Empirical bounds over the last `tail_fraction` of the trajectory's time span.
PermanenceBounds permanence_check(const Trajectory& trajectory, double tail_fraction);

}  // namespace pulsir
