#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <vector>

#include "pulsir/closedform.hpp"
#include "pulsir/errors.hpp"
#include "pulsir/model.hpp"
#include "pulsir/ode.hpp"

namespace pulsir {

struct IntegratorConfig {
  double rel_tol = 1e-9;
  double abs_tol = 1e-11;
  /// Upper bound on the step; the effective bound is min(max_step, T/4).
  double max_step = 0.5;
  /// Spacing of stored interior samples. Infinity stores only the initial, final and
  /// impulse samples.
  double dense_output_dt = 0.1;
  /// Roundoff undershoot below zero tolerated (and clamped) per component.
  double clamp_band = 1e-8;
  std::size_t max_clamp_events = 1000;

  void validate() const;
  StepControl step_control(double T) const;
};

enum class SampleKind : std::uint8_t { Interior = 0, PreJump = 1, PostJump = 2 };

/// Time-ordered samples of the impulsive flow. Every pulse contributes two samples with the
/// same time: the left limit X(nT^-) and the post-jump value X(nT).
struct Trajectory {
  std::vector<State> samples;
  std::vector<SampleKind> kinds;
  /// Index of the pre-jump sample of each pulse; the post-jump sample follows it.
  std::vector<std::size_t> impulse_indices;
  /// Post-jump states at the pulse instants (the stroboscopic samples).
  std::vector<State> strobe;
  /// Seasonal phase in [0, tau) per sample; empty unless produced by integrate_suspended.
  std::vector<double> theta;
  ModelParams params;
  std::size_t clamp_events = 0;
  StepStats steps;

  bool suspended() const { return !theta.empty(); }
  const State& back() const { return samples.back(); }
};

/// Integration failure carrying the last state that was computed successfully.
class IntegrationError : public NumericError {
 public:
  IntegrationError(const std::string& what, State last_good) : NumericError(what), last_good_(last_good) {}
  const State& last_good() const { return last_good_; }

 private:
  State last_good_;
};

/// Integrates the full (S, I, R) system from `initial` to `t_end`. Pulses occur at every
/// t = nT with initial.t < nT <= t_end; each segment is integrated up to exactly nT and
/// the jump is applied there.
Trajectory integrate(const ModelParams& params, const IntegratorConfig& config, const State& initial,
                     double t_end);

/// Same flow with the seasonal phase carried as a third coordinate,
/// theta(t) = theta0 + omega t (mod tau). Pulses leave theta unchanged.
Trajectory integrate_suspended(const ModelParams& params, const IntegratorConfig& config,
                               const State& initial, double theta0, double t_end);

/// Row-major 2x2 matrix.
using Matrix2 = std::array<double, 4>;

inline constexpr Matrix2 kIdentity2{1.0, 0.0, 0.0, 1.0};

struct TangentState {
  State base;
  Matrix2 matrix = kIdentity2;
};

/// Propagates a base point together with the fundamental matrix of the (S, I) variational
/// equations to t_end, applying the jump Jacobian diag(1 - p, 1) at each pulse.
TangentState propagate_tangent(const ModelParams& params, const IntegratorConfig& config,
                               const TangentState& initial, double t_end, double theta0 = 0.0);

struct MonodromyResult {
  Matrix2 matrix{};
  FloquetPair pair;
  double base_drift = 0.0;  // |X(T) - X(0)| of the integrated base orbit
};

/// Monodromy matrix of the origin or of the disease-free orbit (S~, 0) obtained by
/// integrating the variational equations over one period and applying the jump.
/// The matrix is upper triangular (I = 0 is invariant), so the multipliers are its diagonal.
/// With gamma > 0 the forcing is taken with phase 0 at the start of the period.
MonodromyResult monodromy_numeric_full(const ModelParams& params, const IntegratorConfig& config,
                                       Orbit orbit = Orbit::DiseaseFreePeriodic);

FloquetPair monodromy_numeric(const ModelParams& params, const IntegratorConfig& config,
                              Orbit orbit = Orbit::DiseaseFreePeriodic);

/// Stroboscopic (time-T, post-jump) map of (S, I) and its Jacobian, starting at time t0.
struct StrobeStep {
  Point2 image;
  Matrix2 jacobian{};
};

StrobeStep stroboscopic_step(const ModelParams& params, const IntegratorConfig& config, Point2 x,
                             double t0 = 0.0, double theta0 = 0.0);

struct LogStretch {
  double t = 0.0;
  double increment = 0.0;  // log of the tangent-vector norm growth since the last renormalization
};

struct TangentRun {
  State final_state;
  std::array<double, 2> final_vector{};
  std::vector<LogStretch> increments;
  std::size_t reseeds = 0;
};

/// Evolves a tangent vector in (S, I) along the (possibly seasonal) flow, multiplying by
/// diag(1 - p, 1) at pulses and renormalizing every `renorm_every` time units. A collapsed
/// tangent vector is reseeded with (1, 1)/sqrt(2) and counted.
TangentRun integrate_with_tangent(const ModelParams& params, const IntegratorConfig& config,
                                  const State& initial, double theta0, double t_end, double renorm_every,
                                  std::array<double, 2> initial_vector = {1.0, 0.0});

}  // namespace pulsir
