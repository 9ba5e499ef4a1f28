#include "pulsir/integrator.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <fmt/format.h>

namespace pulsir {

namespace {

/// First pulse instant strictly after t.
double next_impulse_after(double t, double T) {
  double k = std::floor(t / T);
  double next = (k + 1.0) * T;
  while (next <= t) {
    k += 1.0;
    next = (k + 1.0) * T;
  }
  return next;
}

double wrap_phase(double theta, double tau) {
  double x = std::fmod(theta, tau);
  if (x < 0.0) x += tau;
  return x;
}

/// Clamps roundoff undershoot of the leading `count` components.
template <std::size_t N>
class UndershootClamp {
 public:
  UndershootClamp(const IntegratorConfig& config, std::size_t count, std::size_t& events)
      : band_(config.clamp_band), limit_(config.max_clamp_events), count_(count), events_(events) {}

  bool operator()(Vec<N>& y) {
    bool changed = false;
    for (std::size_t i = 0; i < count_; ++i) {
      if (y[i] >= 0.0) continue;
      if (y[i] < -band_) {
        throw NumericError(fmt::format("component {} went negative ({:.3g}) beyond the clamp band", i, y[i]));
      }
      y[i] = 0.0;
      changed = true;
      if (++events_ > limit_) {
        throw NumericError(fmt::format("more than {} negative-undershoot clamps; aborting", limit_));
      }
    }
    return changed;
  }

 private:
  double band_;
  std::size_t limit_;
  std::size_t count_;
  std::size_t& events_;
};

void require_forward(const State& initial, double t_end) {
  if (!(t_end > initial.t) || !std::isfinite(t_end)) {
    throw DomainError(fmt::format("t_end ({:.17g}) must be finite and exceed the initial time ({:.17g})", t_end,
                                  initial.t));
  }
  if (!std::isfinite(initial.S) || !std::isfinite(initial.I) || !std::isfinite(initial.R)) {
    throw DomainError("non-finite initial state");
  }
}

// (S, I) Jacobian of the vector field at time t.
Matrix2 jacobian(const ModelParams& params, double S, double I, double beta) {
  return {params.A - 2.0 * S - beta * I, -beta * S, beta * I, beta * S - params.removal_rate()};
}

Trajectory run_impulsive(const ModelParams& params, const IntegratorConfig& config, const State& initial,
                         double theta0, double t_end, bool record_theta) {
  params.validate();
  config.validate();
  require_forward(initial, t_end);

  Trajectory traj;
  traj.params = params;
  const double tau = params.psi.period();

  auto push = [&](const State& s, SampleKind kind) {
    traj.samples.push_back(s);
    traj.kinds.push_back(kind);
    if (record_theta) traj.theta.push_back(wrap_phase(theta0 + params.omega * s.t, tau));
  };

  auto rhs = [&](double t, const Vec<3>& y, Vec<3>& dy) {
    const double beta = beta_gamma(params, t, theta0);
    const double infection = beta * y[1] * y[0];
    dy[0] = y[0] * (params.A - y[0]) - infection;
    dy[1] = infection - params.removal_rate() * y[1];
    dy[2] = params.g * y[1] - params.natural_death() * y[2];
  };

  DormandPrince<3> stepper(config.step_control(params.T));
  UndershootClamp<3> clamp(config, 2, traj.clamp_events);
  Vec<3> y{initial.S, initial.I, initial.R};
  double t = initial.t;
  double h = 0.0;
  push(initial, SampleKind::Interior);

  const double dt = config.dense_output_dt;
  const bool dense = std::isfinite(dt);
  std::size_t sample_k = 1;
  auto sample_time = [&](std::size_t k) {
    return dense ? initial.t + static_cast<double>(k) * dt : std::numeric_limits<double>::infinity();
  };

  while (t < t_end) {
    const double impulse = next_impulse_after(t, params.T);
    while (sample_time(sample_k) <= t) ++sample_k;
    const double sample = sample_time(sample_k);
    const double stop = std::min({impulse, sample, t_end});
    try {
      stepper.advance(rhs, y, t, stop, h, clamp);
    } catch (const NumericError& e) {
      traj.steps = stepper.stats();
      throw IntegrationError(e.what(), State{y[0], y[1], y[2], t});
    }
    State s{y[0], y[1], y[2], stop};
    if (stop == impulse) {
      push(s, SampleKind::PreJump);
      traj.impulse_indices.push_back(traj.samples.size() - 1);
      s = apply_impulse(params, s);
      y = {s.S, s.I, s.R};
      push(s, SampleKind::PostJump);
      traj.strobe.push_back(s);
      if (sample == impulse) ++sample_k;
    } else {
      push(s, SampleKind::Interior);
      if (stop == sample) ++sample_k;
    }
  }
  traj.steps = stepper.stats();
  return traj;
}

}  // namespace

void IntegratorConfig::validate() const {
  if (!(rel_tol > 0.0 && rel_tol <= 1e-2) || !(abs_tol > 0.0 && abs_tol <= 1e-2)) {
    throw DomainError("integrator tolerances must lie in (0, 1e-2]");
  }
  if (!(max_step > 0.0)) throw DomainError("max_step must be positive");
  if (!(dense_output_dt > 0.0)) throw DomainError("dense_output_dt must be positive (or infinity)");
  if (!(clamp_band >= 0.0)) throw DomainError("clamp_band must be nonnegative");
}

StepControl IntegratorConfig::step_control(double T) const {
  StepControl ctl;
  ctl.rel_tol = rel_tol;
  ctl.abs_tol = abs_tol;
  ctl.max_step = std::min(max_step, 0.25 * T);
  return ctl;
}

Trajectory integrate(const ModelParams& params, const IntegratorConfig& config, const State& initial,
                     double t_end) {
  return run_impulsive(params, config, initial, 0.0, t_end, false);
}

Trajectory integrate_suspended(const ModelParams& params, const IntegratorConfig& config,
                               const State& initial, double theta0, double t_end) {
  return run_impulsive(params, config, initial, theta0, t_end, true);
}

TangentState propagate_tangent(const ModelParams& params, const IntegratorConfig& config,
                               const TangentState& initial, double t_end, double theta0) {
  params.validate();
  config.validate();
  require_forward(initial.base, t_end);

  auto rhs = [&](double t, const Vec<6>& y, Vec<6>& dy) {
    const double beta = beta_gamma(params, t, theta0);
    const double infection = beta * y[1] * y[0];
    dy[0] = y[0] * (params.A - y[0]) - infection;
    dy[1] = infection - params.removal_rate() * y[1];
    const Matrix2 J = jacobian(params, y[0], y[1], beta);
    dy[2] = J[0] * y[2] + J[1] * y[4];
    dy[3] = J[0] * y[3] + J[1] * y[5];
    dy[4] = J[2] * y[2] + J[3] * y[4];
    dy[5] = J[2] * y[3] + J[3] * y[5];
  };

  DormandPrince<6> stepper(config.step_control(params.T));
  std::size_t clamps = 0;
  UndershootClamp<6> clamp(config, 2, clamps);
  const Matrix2& m = initial.matrix;
  Vec<6> y{initial.base.S, initial.base.I, m[0], m[1], m[2], m[3]};
  double t = initial.base.t;
  double h = 0.0;
  while (t < t_end) {
    const double impulse = next_impulse_after(t, params.T);
    const double stop = std::min(impulse, t_end);
    stepper.advance(rhs, y, t, stop, h, clamp);
    if (stop == impulse) {
      y[0] *= 1.0 - params.p;
      y[2] *= 1.0 - params.p;
      y[3] *= 1.0 - params.p;
    }
  }
  // R decouples from (S, I) and is not propagated here.
  return {State{y[0], y[1], initial.base.R, t}, Matrix2{y[2], y[3], y[4], y[5]}};
}

MonodromyResult monodromy_numeric_full(const ModelParams& params, const IntegratorConfig& config, Orbit orbit) {
  params.validate();
  State base{0.0, 0.0, 0.0, 0.0};
  if (orbit == Orbit::DiseaseFreePeriodic) {
    const StrobeFixedPoints fp = fixed_points_S(params);
    if (!fp.physical) {
      throw ExistenceError(fmt::format("disease-free periodic orbit requires p < p1(T) = {:.17g}",
                                       p1_curve(params.A, params.T)));
    }
    base.S = fp.x1;
  }
  const TangentState end = propagate_tangent(params, config, TangentState{base, kIdentity2}, params.T);
  MonodromyResult out;
  out.matrix = end.matrix;
  out.pair = FloquetPair{end.matrix[0], end.matrix[3], orbit};
  out.base_drift = std::hypot(end.base.S - base.S, end.base.I - base.I);
  return out;
}

FloquetPair monodromy_numeric(const ModelParams& params, const IntegratorConfig& config, Orbit orbit) {
  return monodromy_numeric_full(params, config, orbit).pair;
}

StrobeStep stroboscopic_step(const ModelParams& params, const IntegratorConfig& config, Point2 x, double t0,
                             double theta0) {
  const TangentState end =
      propagate_tangent(params, config, TangentState{State{x.S, x.I, 0.0, t0}, kIdentity2}, t0 + params.T, theta0);
  return {Point2{end.base.S, end.base.I}, end.matrix};
}

TangentRun integrate_with_tangent(const ModelParams& params, const IntegratorConfig& config,
                                  const State& initial, double theta0, double t_end, double renorm_every,
                                  std::array<double, 2> initial_vector) {
  params.validate();
  config.validate();
  require_forward(initial, t_end);
  if (!(renorm_every > 0.0)) throw DomainError("renorm_every must be positive");

  // Layout: S, I, R, v_S, v_I.
  auto field = [&](double t, const Vec<5>& y, Vec<5>& dy) {
    const double beta = beta_gamma(params, t, theta0);
    const double infection = beta * y[1] * y[0];
    dy[0] = y[0] * (params.A - y[0]) - infection;
    dy[1] = infection - params.removal_rate() * y[1];
    dy[2] = params.g * y[1] - params.natural_death() * y[2];
    const Matrix2 J = jacobian(params, y[0], y[1], beta);
    dy[3] = J[0] * y[3] + J[1] * y[4];
    dy[4] = J[2] * y[3] + J[3] * y[4];
  };

  TangentRun run;
  DormandPrince<5> stepper(config.step_control(params.T));
  std::size_t clamps = 0;
  UndershootClamp<5> clamp(config, 2, clamps);

  double norm0 = std::hypot(initial_vector[0], initial_vector[1]);
  if (!(norm0 > 0.0) || !std::isfinite(norm0)) {
    initial_vector = {1.0, 0.0};
    norm0 = 1.0;
  }
  Vec<5> y{initial.S, initial.I, initial.R, initial_vector[0] / norm0, initial_vector[1] / norm0};
  double t = initial.t;
  double h = 0.0;
  std::size_t renorm_k = 1;
  auto renorm_time = [&](std::size_t k) { return initial.t + static_cast<double>(k) * renorm_every; };

  auto renormalize = [&](double at) {
    const double norm = std::hypot(y[3], y[4]);
    if (!(norm > 1e-300) || !std::isfinite(norm)) {
      y[3] = y[4] = 1.0 / std::sqrt(2.0);
      ++run.reseeds;
      return;
    }
    run.increments.push_back({at, std::log(norm)});
    y[3] /= norm;
    y[4] /= norm;
  };

  while (t < t_end) {
    const double impulse = next_impulse_after(t, params.T);
    while (renorm_time(renorm_k) <= t) ++renorm_k;
    const double renorm = renorm_time(renorm_k);
    const double stop = std::min({impulse, renorm, t_end});
    try {
      stepper.advance(field, y, t, stop, h, clamp);
    } catch (const NumericError& e) {
      throw IntegrationError(e.what(), State{y[0], y[1], y[2], t});
    }
    if (stop == impulse) {
      y[2] += params.p * y[0];
      y[0] *= 1.0 - params.p;
      y[3] *= 1.0 - params.p;
    }
    if (stop == renorm || stop == t_end) {
      renormalize(stop);
      if (stop == renorm) ++renorm_k;
    }
  }
  run.final_state = State{y[0], y[1], y[2], t};
  run.final_vector = {y[3], y[4]};
  return run;
}

}  // namespace pulsir
