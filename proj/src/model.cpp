#include "pulsir/model.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>

#include <fmt/format.h>

#include "pulsir/errors.hpp"

namespace pulsir {

namespace {

void require(bool ok, const std::string& what) {
  if (!ok) throw DomainError(what);
}

bool finite(double x) { return std::isfinite(x); }

}  // namespace

Forcing Forcing::cosine_raised() {
  Forcing f;
  f.shape_ = Shape::CosineRaised;
  f.tau_ = 2.0 * std::numbers::pi;
  return f;
}

Forcing Forcing::tabulated(std::vector<double> knots, std::vector<double> values) {
  require(knots.size() == values.size(), "tabulated forcing: knot/value count mismatch");
  require(knots.size() >= 3, "tabulated forcing: need at least 3 knots");
  require(knots.front() == 0.0, "tabulated forcing: first knot must be 0");
  for (std::size_t i = 1; i < knots.size(); ++i) {
    require(finite(knots[i]) && knots[i] > knots[i - 1],
            "tabulated forcing: knots must be finite and strictly increasing");
  }
  for (double v : values) {
    require(finite(v) && v > 0.0, "tabulated forcing: values must be finite and strictly positive");
  }
  require(std::abs(values.front() - values.back()) <= 1e-12 * std::max(1.0, std::abs(values.front())),
          "tabulated forcing: first and last values must agree (periodic table)");

  // Count slope sign changes around the closed table; a periodic shape with a maximum and
  // a minimum has at least two.
  std::vector<double> slopes;
  for (std::size_t i = 1; i < values.size(); ++i) {
    const double d = values[i] - values[i - 1];
    if (d != 0.0) slopes.push_back(d);
  }
  int sign_changes = 0;
  for (std::size_t i = 0; i < slopes.size(); ++i) {
    const double a = slopes[i];
    const double b = slopes[(i + 1) % slopes.size()];
    if ((a > 0.0) != (b > 0.0)) ++sign_changes;
  }
  require(sign_changes >= 2, "tabulated forcing: shape needs at least two critical points per period");

  Forcing f;
  f.shape_ = Shape::Tabulated;
  f.tau_ = knots.back();
  f.knots_ = std::move(knots);
  f.values_ = std::move(values);
  return f;
}

Forcing Forcing::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DomainError(fmt::format("cannot open forcing table '{}'", path.string()));
  std::vector<double> knots;
  std::vector<double> values;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    std::replace(line.begin(), line.end(), ',', ' ');
    std::istringstream fields(line);
    double u = 0.0;
    double v = 0.0;
    if (!(fields >> u)) continue;
    if (!(fields >> v)) {
      throw DomainError(fmt::format("{}:{}: expected two columns", path.string(), lineno));
    }
    knots.push_back(u);
    values.push_back(v);
  }
  return tabulated(std::move(knots), std::move(values));
}

double Forcing::operator()(double u) const {
  if (shape_ == Shape::CosineRaised) return 1.0 + std::cos(u);
  double x = std::fmod(u, tau_);
  if (x < 0.0) x += tau_;
  auto it = std::upper_bound(knots_.begin(), knots_.end(), x);
  if (it == knots_.end()) return values_.back();
  const auto hi = static_cast<std::size_t>(it - knots_.begin());
  const std::size_t lo = hi - 1;
  const double w = (x - knots_[lo]) / (knots_[hi] - knots_[lo]);
  return values_[lo] + w * (values_[hi] - values_[lo]);
}

std::string Forcing::describe() const {
  if (shape_ == Shape::CosineRaised) return "cos1";
  return fmt::format("tabulated[{} knots, tau={:.17g}]", knots_.size(), tau_);
}

void ModelParams::validate() const {
  require(finite(A) && A > 0.0 && A <= 1.0, "A must lie in (0, 1]");
  require(finite(beta0) && beta0 > 0.0, "beta0 must be positive");
  require(finite(sigma) && sigma >= 0.0, "sigma must be nonnegative");
  require(finite(g) && g >= 0.0, "g must be nonnegative");
  require(removal_rate() > 0.0, "sigma + g must be positive (S_c would vanish)");
  if (mu) require(finite(*mu) && *mu >= 0.0, "mu must be nonnegative");
  require(finite(p) && p >= 0.0 && p <= 1.0, "p must lie in [0, 1]");
  require(finite(T) && T > 0.0, "T must be positive");
  require(finite(gamma) && gamma >= 0.0, "gamma must be nonnegative");
  require(finite(omega) && omega > 0.0, "omega must be positive");
}

double beta_gamma(const ModelParams& params, double t, double phase0) {
  if (params.gamma == 0.0) return params.beta0;
  return params.beta0 * (1.0 + params.gamma * params.psi(phase0 + params.omega * t));
}

Rates vector_field(const ModelParams& params, const State& s, double phase0) {
  if (!finite(s.S) || !finite(s.I) || !finite(s.R) || !finite(s.t)) {
    throw DomainError("vector_field: non-finite state");
  }
  const double beta = beta_gamma(params, s.t, phase0);
  const double infection = beta * s.I * s.S;
  return {s.S * (params.A - s.S) - infection, infection - params.removal_rate() * s.I,
          params.g * s.I - params.natural_death() * s.R};
}

State apply_impulse(const ModelParams& params, const State& s) {
  const double vaccinated = params.p * s.S;
  return {s.S - vaccinated, s.I, s.R + vaccinated, s.t};
}

State normalized_initial(double S0, double I0, double t0) {
  if (!(S0 >= 0.0 && I0 >= 0.0 && S0 + I0 <= 1.0)) {
    throw DomainError("normalized_initial: need S0, I0 >= 0 and S0 + I0 <= 1");
  }
  return {S0, I0, 1.0 - S0 - I0, t0};
}

bool in_trapping_region(const ModelParams& params, const State& s, double tol) {
  return s.S >= -tol && s.I >= -tol && s.S <= params.A + tol &&
         s.S + s.I <= params.trapping_bound() + tol;
}

}  // namespace pulsir
