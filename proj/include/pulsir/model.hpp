#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace pulsir {

/// Periodic seasonal shape Psi entering beta(t) = beta0 * (1 + gamma * Psi(omega t)).
///
/// The default is the raised cosine Psi(u) = 1 + cos(u) with period 2*pi: strictly
/// positive away from u = pi (where it touches 0) and with exactly two nondegenerate
/// critical points per period. A tabulated shape is linearly interpolated between
/// knots and must be strictly positive with at least one interior maximum and minimum.
class Forcing {
 public:
  enum class Shape { CosineRaised, Tabulated };

  static Forcing cosine_raised();
  /// `knots` starts at 0 and ends at the period tau; the first and last values must agree.
  static Forcing tabulated(std::vector<double> knots, std::vector<double> values);
  /// Two columns per line (u, Psi(u)), separated by commas or whitespace; '#' starts a comment.
  static Forcing load(const std::filesystem::path& path);

  double operator()(double u) const;
  double period() const { return tau_; }
  Shape shape() const { return shape_; }
  std::string describe() const;

  const std::vector<double>& knots() const { return knots_; }
  const std::vector<double>& values() const { return values_; }

 private:
  Shape shape_ = Shape::CosineRaised;
  double tau_ = 0.0;
  std::vector<double> knots_;
  std::vector<double> values_;
};

/// Rate constants, pulse schedule and seasonal settings of one model instance.
///
/// `sigma` is the combined removal rate mu + d of infectious individuals and is the only
/// death rate the (S, I) dynamics see. `mu` is used by the R equation alone; when unset it
/// defaults to `sigma` (no disease-induced death).
struct ModelParams {
  double A = 1.0;
  double beta0 = 1.0;
  double sigma = 0.0;
  double g = 0.0;
  std::optional<double> mu;
  double p = 0.0;
  double T = 1.0;
  double gamma = 0.0;
  double omega = 1.0;
  Forcing psi = Forcing::cosine_raised();

  /// Throws DomainError on any violated range constraint.
  void validate() const;

  double natural_death() const { return mu.value_or(sigma); }
  double removal_rate() const { return sigma + g; }
  /// S_c = (sigma + g) / beta0.
  double critical_susceptible() const { return removal_rate() / beta0; }
  /// R0 = A beta0 / (sigma + g).
  double basic_reproduction_number() const { return A * beta0 / removal_rate(); }
  /// Upper bound on S + I inside the positively invariant region.
  double trapping_bound() const { return A * (removal_rate() + A) / removal_rate(); }
};

/// A point of the flow.
struct State {
  double S = 0.0;
  double I = 0.0;
  double R = 0.0;
  double t = 0.0;
};

struct Rates {
  double dS = 0.0;
  double dI = 0.0;
  double dR = 0.0;
};

/// beta0 * (1 + gamma * Psi(phase0 + omega t)).
double beta_gamma(const ModelParams& params, double t, double phase0 = 0.0);

/// Right-hand side of the full (S, I, R) system between pulses.
Rates vector_field(const ModelParams& params, const State& s, double phase0 = 0.0);

/// Pulse map at t = nT: a fraction p of S moves to R.
State apply_impulse(const ModelParams& params, const State& s);

/// Initial state with R chosen so that S + I + R = 1. Only an initial normalization; the
/// flow itself does not conserve the total.
State normalized_initial(double S0, double I0, double t0 = 0.0);

/// Containment in {0 <= S <= A, 0 <= S + I <= A(sigma+g+A)/(sigma+g)}, up to `tol`.
bool in_trapping_region(const ModelParams& params, const State& s, double tol = 1e-9);

}  // namespace pulsir
