#include "pulsir/closedform.hpp"

#include <array>
#include <cmath>
#include <limits>
#include <utility>

#include <fmt/format.h>

#include "pulsir/errors.hpp"

namespace pulsir {

namespace {

constexpr double kBoundaryTol = 1e-12;

constexpr std::array<std::pair<Regime, std::string_view>, 9> kRegimeNames{{
    {Regime::FullCoverage, "full_coverage"},
    {Regime::TrivialDiseaseFree, "trivial_disease_free"},
    {Regime::NontrivialDiseaseFree, "nontrivial_disease_free"},
    {Regime::EndemicPeriodic, "endemic_periodic"},
    {Regime::EndemicEquilibrium, "endemic_equilibrium"},
    {Regime::SaddleNodeBoundary, "saddle_node_boundary"},
    {Regime::TranscriticalBoundary, "transcritical_boundary"},
    {Regime::Chaotic, "chaotic"},
    {Regime::Undetermined, "undetermined"},
}};

void require_orbit_exists(const ModelParams& params) {
  const double p1 = p1_curve(params.A, params.T);
  if (!(params.p < p1)) {
    throw ExistenceError(fmt::format(
        "disease-free periodic orbit requires p < p1(T) = {:.17g} (got p = {:.17g})", p1, params.p));
  }
}

}  // namespace

std::string_view to_string(Regime r) {
  for (const auto& [regime, name] : kRegimeNames) {
    if (regime == r) return name;
  }
  return "undetermined";
}

Regime regime_from_string(std::string_view name) {
  for (const auto& [regime, n] : kRegimeNames) {
    if (n == name) return regime;
  }
  throw DomainError(fmt::format("unknown regime label '{}'", name));
}

int region_number(Regime r) {
  switch (r) {
    case Regime::FullCoverage: return 1;
    case Regime::TrivialDiseaseFree: return 2;
    case Regime::NontrivialDiseaseFree: return 3;
    case Regime::EndemicPeriodic: return 4;
    case Regime::EndemicEquilibrium: return 5;
    default: return 0;
  }
}

std::string_view to_string(Orbit o) {
  return o == Orbit::Origin ? "origin" : "disease_free_periodic";
}

double logistic_between_pulses(double A, double S0, double dt) {
  if (!(S0 >= 0.0 && S0 <= A)) {
    throw DomainError(fmt::format("logistic_between_pulses: S0 = {:.17g} outside [0, A]", S0));
  }
  if (!(dt >= 0.0)) throw DomainError("logistic_between_pulses: dt must be nonnegative");
  if (S0 == 0.0) return 0.0;
  return A * S0 / (S0 + (A - S0) * std::exp(-A * dt));
}

double strobe_S(const ModelParams& params, double x) {
  if (x == 0.0) return 0.0;
  // Same map with numerator and denominator scaled by e^{-AT}; avoids overflow for large AT.
  const double decay = std::exp(-params.A * params.T);
  return params.A * x * (1.0 - params.p) / (x * (1.0 - decay) + params.A * decay);
}

StrobeFixedPoints fixed_points_S(const ModelParams& params) {
  // p e^{AT} / (e^{AT} - 1) = p / (1 - e^{-AT})
  const double x1 = params.A * (1.0 - params.p / -std::expm1(-params.A * params.T));
  return {x1, 0.0, x1 > 0.0};
}

double disease_free_periodic_S(const ModelParams& params, double t) {
  require_orbit_exists(params);
  const double A = params.A;
  const double T = params.T;
  double phase = std::fmod(t, T);
  if (phase < 0.0) phase += T;
  // A[(1-p) - e^{-AT}] / ((1-p) - e^{-AT} + p e^{-A phase}), the orbit formula divided by e^{AT}.
  const double num = (1.0 - params.p) - std::exp(-A * T);
  return A * num / (num + params.p * std::exp(-A * phase));
}

double disease_free_integral(const ModelParams& params) {
  return std::log1p(-params.p) + params.A * params.T;
}

double strobe_I_growth_factor(const ModelParams& params, double S_integral) {
  return std::exp(params.beta0 * S_integral - params.removal_rate() * params.T);
}

double p1_curve(double A, double T) { return -std::expm1(-A * T); }

double p2_curve(double A, double S_c, double T) { return -std::expm1(-(A - S_c) * T); }

double T1_curve(double A, double p) { return std::abs(std::log1p(-p)) / A; }

double T2_curve(double A, double S_c, double p) { return std::abs(std::log1p(-p)) / (A - S_c); }

Thresholds thresholds(const ModelParams& params) {
  params.validate();
  Thresholds out;
  out.S_c = params.critical_susceptible();
  out.R0 = params.basic_reproduction_number();
  out.p1 = p1_curve(params.A, params.T);
  out.T1 = params.p < 1.0 ? T1_curve(params.A, params.p) : std::numeric_limits<double>::infinity();
  if (params.A > out.S_c) {
    out.p2 = p2_curve(params.A, out.S_c, params.T);
    out.T2 = params.p < 1.0 ? T2_curve(params.A, out.S_c, params.p) : std::numeric_limits<double>::infinity();
  }
  return out;
}

double reproduction_number_Rp(const ModelParams& params) {
  if (params.p >= 1.0) return -std::numeric_limits<double>::infinity();
  return params.basic_reproduction_number() * (std::log1p(-params.p) / (params.A * params.T) + 1.0);
}

QuadratureResult seasonal_correction(const ModelParams& params, const QuadratureOptions& opts) {
  require_orbit_exists(params);
  if (params.gamma == 0.0) return {};
  auto integrand = [&](double t) {
    return params.psi(params.omega * t) * disease_free_periodic_S(params, t);
  };
  // The orbit restarts at every multiple of T, so the upper end is approached from the left.
  QuadratureResult r = adaptive_simpson(integrand, 0.0, std::nextafter(params.T, 0.0), opts);
  r.value *= params.gamma;
  r.error_estimate *= params.gamma;
  return r;
}

double p2_seasonal(const ModelParams& params, const QuadratureOptions& opts) {
  params.validate();
  const double S_c = params.critical_susceptible();
  if (!(params.A > S_c)) {
    throw ExistenceError("p2_seasonal requires A > S_c (R0 > 1)");
  }
  const QuadratureResult corr = seasonal_correction(params, opts);
  if (!corr.converged) {
    throw NumericError(fmt::format(
        "p2_seasonal: quadrature did not converge (estimate {:.17g}, error {:.3g}, {} evaluations)",
        corr.value, corr.error_estimate, corr.evaluations));
  }
  return -std::expm1(-((params.A - S_c) * params.T + corr.value));
}

FloquetPair floquet_analytic(const ModelParams& params, Orbit orbit) {
  params.validate();
  const double A = params.A;
  const double T = params.T;
  if (orbit == Orbit::Origin) {
    return {(1.0 - params.p) * std::exp(A * T), std::exp(-params.removal_rate() * T), orbit};
  }
  require_orbit_exists(params);
  const double integral = disease_free_integral(params);
  // With forcing, beta0 * gamma * int Psi S~ joins the I exponent; lambda1 does not see beta.
  const double weighted = params.gamma == 0.0 ? integral : integral + seasonal_correction(params).value;
  return {(1.0 - params.p) * std::exp(A * T - 2.0 * integral), strobe_I_growth_factor(params, weighted),
          orbit};
}

Regime classify_analytic(const ModelParams& params) {
  params.validate();
  if (params.gamma != 0.0) {
    throw DomainError("classify_analytic applies to the unforced model only (gamma = 0)");
  }
  const double p = params.p;
  if (p == 1.0) return Regime::FullCoverage;
  const double p1 = p1_curve(params.A, params.T);
  if (std::abs(p - p1) <= kBoundaryTol) return Regime::SaddleNodeBoundary;
  if (p > p1) return Regime::TrivialDiseaseFree;

  const double S_c = params.critical_susceptible();
  if (params.A < S_c) return Regime::NontrivialDiseaseFree;
  if (params.A == S_c) return Regime::TranscriticalBoundary;
  if (p == 0.0) return Regime::EndemicEquilibrium;
  const double p2 = p2_curve(params.A, S_c, params.T);
  if (std::abs(p - p2) <= kBoundaryTol) return Regime::TranscriticalBoundary;
  return p > p2 ? Regime::NontrivialDiseaseFree : Regime::EndemicPeriodic;
}

Point2 endemic_equilibrium(const ModelParams& params) {
  const double r = params.removal_rate();
  if (!(params.A * params.beta0 > r)) {
    throw ExistenceError("endemic equilibrium requires R0 > 1");
  }
  return {r / params.beta0, (params.A * params.beta0 - r) / (params.beta0 * params.beta0)};
}

}  // namespace pulsir
