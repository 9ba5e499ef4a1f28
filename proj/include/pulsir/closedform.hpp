#pragma once

#include <optional>
#include <string_view>

#include "pulsir/model.hpp"
#include "pulsir/quadrature.hpp"

namespace pulsir {

/// Asymptotic regime of the unforced model in the (T, p) plane, plus the two bifurcation
/// curves and the labels only an empirical analysis can produce.
enum class Regime {
  FullCoverage,           // p = 1, everything collapses onto (0, 0)
  TrivialDiseaseFree,     // p1(T) < p < 1, omega-limit (0, 0)
  NontrivialDiseaseFree,  // p2(T) < p < p1(T), omega-limit (S~, 0)
  EndemicPeriodic,        // 0 < p < p2(T), permanent, endemic T-periodic orbit
  EndemicEquilibrium,     // p = 0, endemic equilibrium
  SaddleNodeBoundary,     // p = p1(T)
  TranscriticalBoundary,  // p = p2(T)
  Chaotic,
  Undetermined,
};

std::string_view to_string(Regime r);
/// Inverse of to_string; throws DomainError on unknown names.
Regime regime_from_string(std::string_view name);
/// 1..5 for the five open regions, 0 otherwise.
int region_number(Regime r);

/// S(t0 + dt) for the logistic flow S' = S(A - S) started at S0 in [0, A].
double logistic_between_pulses(double A, double S0, double dt);

/// Stroboscopic map of S on the disease-free manifold:
/// F_S(x) = A x (1 - p) e^{AT} / (x (e^{AT} - 1) + A).
double strobe_S(const ModelParams& params, double x);

struct StrobeFixedPoints {
  double x1 = 0.0;   // A (1 - p e^{AT} / (e^{AT} - 1)), negative when p > p1(T)
  double x2 = 0.0;   // always 0
  bool physical = false;  // x1 > 0
};

StrobeFixedPoints fixed_points_S(const ModelParams& params);

/// Disease-free T-periodic orbit S~(t), with S~(nT) = x1*. Independent of beta0 and gamma.
/// Throws ExistenceError when p >= p1(T).
double disease_free_periodic_S(const ModelParams& params, double t);

/// Exact integral of S~ over one period: ln(1 - p) + AT.
double disease_free_integral(const ModelParams& params);

/// Per-period growth factor of I for a given integral of S over the period:
/// exp(beta0 * integral - (sigma + g) T).
double strobe_I_growth_factor(const ModelParams& params, double S_integral);

double p1_curve(double A, double T);
double p2_curve(double A, double S_c, double T);
/// Inverse of p1_curve: |ln(1 - p)| / A.
double T1_curve(double A, double p);
/// Inverse of p2_curve: |ln(1 - p)| / (A - S_c).
double T2_curve(double A, double S_c, double p);

struct Thresholds {
  double S_c = 0.0;
  double R0 = 0.0;
  double p1 = 0.0;  // at params.T
  double T1 = 0.0;  // at params.p
  /// Unavailable when A <= S_c (equivalently R0 <= 1).
  std::optional<double> p2;
  std::optional<double> T2;
};

Thresholds thresholds(const ModelParams& params);

/// R_p = R0 (ln(1 - p) / (AT) + 1). Returns -infinity at p = 1.
double reproduction_number_Rp(const ModelParams& params);

/// 1 - exp(-[(A - S_c) T + gamma * int_0^T Psi(omega t) S~(t) dt]).
/// Throws ExistenceError unless A > S_c and p < p1(T); NumericError if quadrature fails.
double p2_seasonal(const ModelParams& params, const QuadratureOptions& opts = {});

/// gamma * int_0^T Psi(omega t) S~(t) dt, the seasonal correction inside p2_seasonal.
QuadratureResult seasonal_correction(const ModelParams& params, const QuadratureOptions& opts = {});

enum class Orbit { Origin, DiseaseFreePeriodic };

std::string_view to_string(Orbit o);

/// Floquet multipliers of a T-periodic orbit: lambda1 along S, lambda2 along I.
struct FloquetPair {
  double lambda1 = 0.0;
  double lambda2 = 0.0;
  Orbit orbit = Orbit::Origin;

  bool stable() const { return lambda1 < 1.0 && lambda2 < 1.0; }
};

/// Origin: ((1-p) e^{AT}, e^{-(sigma+g)T}).
/// Disease-free periodic: ((1-p) exp(AT - 2 int S~), exp(beta0 int S~ - (sigma+g) T)).
/// With gamma > 0 the I exponent gains beta0 * gamma * int Psi(omega t) S~ dt over one period
/// starting at phase 0.
FloquetPair floquet_analytic(const ModelParams& params, Orbit orbit);

/// Analytic regime per the five-region diagram. Requires gamma = 0 (DomainError otherwise).
/// Values of p within 1e-12 of p1 or p2 are reported as the corresponding boundary.
/// With A <= S_c there is no endemic region: 0 <= p < p1(T) is disease-free.
Regime classify_analytic(const ModelParams& params);

struct Point2 {
  double S = 0.0;
  double I = 0.0;
};

/// Endemic equilibrium of the unvaccinated, unforced model:
/// ((sigma+g)/beta0, (A beta0 - (sigma+g)) / beta0^2). ExistenceError when R0 <= 1.
Point2 endemic_equilibrium(const ModelParams& params);

}  // namespace pulsir
