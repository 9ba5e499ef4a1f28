#include "pulsir/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <numeric>

#include <fmt/format.h>

namespace pulsir {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double sup_dist(Point2 a, Point2 b) { return std::max(std::abs(a.S - b.S), std::abs(a.I - b.I)); }

struct WindowStats {
  double residual = 0.0;
  double max_S = 0.0;
  double max_I = 0.0;
  double min_I = kInf;
  double tail = kInf;         // projected distance still to travel
  double projected_I = 0.0;   // extrapolated limit of I
};

WindowStats window_stats(const std::deque<Point2>& pts) {
  WindowStats w;
  for (std::size_t k = 0; k < pts.size(); ++k) {
    w.max_S = std::max(w.max_S, pts[k].S);
    w.max_I = std::max(w.max_I, pts[k].I);
    w.min_I = std::min(w.min_I, pts[k].I);
    if (k > 0) w.residual = std::max(w.residual, sup_dist(pts[k], pts[k - 1]));
  }
  const std::size_t n = pts.size();
  if (n >= 3) {
    const double d_first = sup_dist(pts[1], pts[0]);
    const double d_last = sup_dist(pts[n - 1], pts[n - 2]);
    if (d_last == 0.0) {
      w.tail = 0.0;
      w.projected_I = pts[n - 1].I;
    } else if (d_first > 0.0) {
      const double rho = std::pow(d_last / d_first, 1.0 / static_cast<double>(n - 2));
      if (rho < 1.0) {
        const double gain = rho / (1.0 - rho);
        w.tail = d_last * gain;
        w.projected_I = pts[n - 1].I + (pts[n - 1].I - pts[n - 2].I) * gain;
      }
    }
  }
  return w;
}

double max_distance_to(const std::deque<Point2>& pts, Point2 target) {
  double d = 0.0;
  for (const Point2& x : pts) d = std::max(d, sup_dist(x, target));
  return d;
}

Point2 solve_2x2(const Matrix2& m, Point2 rhs) {
  const double det = m[0] * m[3] - m[1] * m[2];
  if (!(std::abs(det) > 1e-300)) throw NumericError("singular Newton matrix (multiplier equal to 1)");
  return {(m[3] * rhs.S - m[1] * rhs.I) / det, (-m[2] * rhs.S + m[0] * rhs.I) / det};
}

Point2 strobe_map(const ModelParams& params, const IntegratorConfig& config, Point2 x) {
  return stroboscopic_step(params, config, x).image;
}

// Solves P(x) = x for the current p starting from `x`.
Point2 newton_fixed_point(const ModelParams& params, const IntegratorConfig& config, Point2 x,
                          const EndemicOrbitOptions& opts, std::size_t& iterations, double& residual) {
  for (std::size_t i = 0; i < opts.damped_iterations; ++i) {
    const Point2 y = strobe_map(params, config, x);
    x = {x.S + opts.damping * (y.S - x.S), x.I + opts.damping * (y.I - x.I)};
    ++iterations;
  }
  for (std::size_t i = 0; i < opts.max_newton; ++i) {
    const StrobeStep step = stroboscopic_step(params, config, x);
    const Point2 r{step.image.S - x.S, step.image.I - x.I};
    residual = std::max(std::abs(r.S), std::abs(r.I));
    if (residual <= opts.tol) return x;
    const Matrix2 m{step.jacobian[0] - 1.0, step.jacobian[1], step.jacobian[2], step.jacobian[3] - 1.0};
    const Point2 delta = solve_2x2(m, Point2{-r.S, -r.I});
    double lambda = 1.0;
    bool accepted = false;
    while (lambda >= 1.0 / 1024.0) {
      const Point2 trial{x.S + lambda * delta.S, x.I + lambda * delta.I};
      if (trial.S > 0.0 && trial.I > 0.0) {
        const Point2 img = strobe_map(params, config, trial);
        const double res = std::max(std::abs(img.S - trial.S), std::abs(img.I - trial.I));
        if (res < residual) {
          x = trial;
          accepted = true;
          break;
        }
      }
      lambda *= 0.5;
    }
    ++iterations;
    if (!accepted) break;
  }
  const Point2 y = strobe_map(params, config, x);
  residual = sup_dist(y, x);
  return x;
}

// (1/T) int_0^T S dt along the orbit through x, integrated alongside the flow.
double orbit_mean_S(const ModelParams& params, const IntegratorConfig& config, Point2 x) {
  auto rhs = [&](double, const Vec<3>& y, Vec<3>& dy) {
    const double infection = params.beta0 * y[1] * y[0];
    dy[0] = y[0] * (params.A - y[0]) - infection;
    dy[1] = infection - params.removal_rate() * y[1];
    dy[2] = y[0];
  };
  DormandPrince<3> stepper(config.step_control(params.T));
  Vec<3> y{x.S, x.I, 0.0};
  double t = 0.0;
  double h = 0.0;
  stepper.advance(rhs, y, t, params.T, h);
  return y[2] / params.T;
}

}  // namespace

OmegaLimitReport classify_empirical(const ModelParams& params, const IntegratorConfig& config,
                                    const State& initial, const ClassifyOptions& options) {
  params.validate();
  config.validate();
  if (!(options.horizon >= 50.0 * params.T)) {
    throw DomainError(fmt::format("classification horizon must be at least 50 T = {:.6g}", 50.0 * params.T));
  }
  if (!(options.tol > 0.0 && options.tol <= 1e-2)) throw DomainError("classification tol must lie in (0, 1e-2]");
  if (options.window < 1) throw DomainError("classification window must be positive");

  IntegratorConfig cfg = config;
  cfg.dense_output_dt = kInf;

  const StrobeFixedPoints fp = fixed_points_S(params);
  std::optional<Point2> equilibrium;
  if (params.p == 0.0 && params.gamma == 0.0 && params.basic_reproduction_number() > 1.0) {
    equilibrium = endemic_equilibrium(params);
  }

  OmegaLimitReport report;
  std::deque<Point2> window;
  const std::size_t needed = options.window + 1;
  const double T = params.T;
  const double last_pulse = std::floor((initial.t + options.horizon) / T);
  double pulse = std::floor(initial.t / T);
  State s = initial;
  WindowStats stats;

  auto finish = [&](Regime label, double distance) {
    report.label = label;
    report.target_distance = distance;
  };

  bool labelled = false;
  while (!labelled && pulse < last_pulse) {
    const double chunk_end_pulse = std::min(pulse + static_cast<double>(options.window), last_pulse);
    const double t_end = chunk_end_pulse * T;
    if (!(t_end > s.t)) break;
    const Trajectory traj = integrate(params, cfg, s, t_end);
    for (const State& x : traj.strobe) {
      window.push_back({x.S, x.I});
      if (window.size() > needed) window.pop_front();
    }
    report.pulses += traj.strobe.size();
    s = traj.back();
    pulse = chunk_end_pulse;
    if (window.size() < needed) continue;

    stats = window_stats(window);
    const double origin_distance = std::max(stats.max_S, stats.max_I);
    if (origin_distance < options.tol) {
      finish(params.p == 1.0 ? Regime::FullCoverage : Regime::TrivialDiseaseFree, origin_distance);
      labelled = true;
    } else if (fp.physical && stats.max_I < options.tol &&
               max_distance_to(window, Point2{fp.x1, 0.0}) < options.tol) {
      finish(Regime::NontrivialDiseaseFree, max_distance_to(window, Point2{fp.x1, 0.0}));
      labelled = true;
    } else if (equilibrium && max_distance_to(window, *equilibrium) < options.tol) {
      finish(Regime::EndemicEquilibrium, max_distance_to(window, *equilibrium));
      labelled = true;
    } else if (params.p > 0.0 && stats.residual <= options.tol && stats.tail <= options.tol &&
               stats.min_I > options.tol && stats.projected_I > options.tol) {
      finish(Regime::EndemicPeriodic, std::numeric_limits<double>::quiet_NaN());
      labelled = true;
    }
  }

  report.strobe_residual = stats.residual;
  report.min_I_tail = window.empty() ? 0.0 : stats.min_I;
  report.max_I_tail = stats.max_I;
  report.terminal_strobe.assign(window.begin(), window.end());
  report.horizon_used = s.t - initial.t;

  if (!labelled) {
    report.label = Regime::Undetermined;
    report.target_distance = std::numeric_limits<double>::quiet_NaN();
    if (options.probe_lyapunov && stats.residual > options.tol) {
      LyapunovOptions lo;
      lo.horizon = std::max(500.0 * T, 0.5 * options.horizon);
      const double le = lyapunov_max(params, config, s, lo).exponent;
      report.lyapunov = le;
      if (le > options.chaos_threshold) report.label = Regime::Chaotic;
    }
  }
  return report;
}

OmegaLimitReport classify_empirical(const ModelParams& params, const IntegratorConfig& config,
                                    const State& initial, double horizon, double tol) {
  ClassifyOptions options;
  options.horizon = horizon;
  options.tol = tol;
  return classify_empirical(params, config, initial, options);
}

EndemicOrbit find_endemic_orbit(const ModelParams& params, const IntegratorConfig& config,
                                const EndemicOrbitOptions& options) {
  params.validate();
  config.validate();
  if (params.gamma != 0.0) throw DomainError("find_endemic_orbit applies to the unforced model (gamma = 0)");
  const double S_c = params.critical_susceptible();
  if (!(params.A > S_c)) throw ExistenceError("no endemic orbit: A <= S_c (R0 <= 1)");
  const double p2 = p2_curve(params.A, S_c, params.T);
  if (!(params.p < p2)) {
    throw ExistenceError(
        fmt::format("no endemic orbit: p = {:.17g} is not below p2(T) = {:.17g}", params.p, p2));
  }

  EndemicOrbit orbit;
  Point2 x = endemic_equilibrium(params);
  double residual = 0.0;
  if (params.p > 0.0) {
    const auto steps =
        static_cast<std::size_t>(std::ceil(params.p / std::max(options.continuation_step, 1e-6)));
    for (std::size_t k = 1; k <= steps; ++k) {
      ModelParams stage = params;
      stage.p = k == steps ? params.p : params.p * static_cast<double>(k) / static_cast<double>(steps);
      x = newton_fixed_point(stage, config, x, options, orbit.iterations, residual);
    }
  }
  const StrobeStep step = stroboscopic_step(params, config, x);
  residual = sup_dist(step.image, x);
  if (!(residual <= options.tol)) {
    throw NumericError(fmt::format("endemic orbit search stalled: residual {:.3g} after {} iterations", residual,
                                   orbit.iterations));
  }
  orbit.fixed_point = x;
  orbit.residual = residual;
  orbit.strobe_jacobian = step.jacobian;
  orbit.mean_S = orbit_mean_S(params, config, x);

  IntegratorConfig cfg = config;
  cfg.dense_output_dt = options.sample_dt;
  const Trajectory traj = integrate(params, cfg, State{x.S, x.I, 0.0, 0.0}, params.T);
  orbit.samples.assign(traj.samples.begin(), traj.samples.end() - 1);  // drop the post-jump end row
  return orbit;
}

LyapunovEstimate lyapunov_max(const ModelParams& params, const IntegratorConfig& config, const State& initial,
                              const LyapunovOptions& options) {
  params.validate();
  if (!(options.horizon >= 500.0 * params.T * (1.0 - 1e-12))) {
    throw DomainError(fmt::format("Lyapunov horizon must be at least 500 T = {:.6g}", 500.0 * params.T));
  }
  if (!(options.transient_fraction >= 0.0 && options.transient_fraction < 1.0)) {
    throw DomainError("transient_fraction must lie in [0, 1)");
  }
  const double renorm = options.renorm_every > 0.0 ? options.renorm_every : params.T;
  const double t_end = initial.t + options.horizon;
  const TangentRun run = integrate_with_tangent(params, config, initial, options.theta0, t_end, renorm);

  const double discard_until = initial.t + options.transient_fraction * options.horizon;
  double start = initial.t;
  for (const LogStretch& inc : run.increments) {
    if (inc.t <= discard_until) start = inc.t;
  }
  LyapunovEstimate est;
  est.reseeds = run.reseeds;
  double sum = 0.0;
  for (const LogStretch& inc : run.increments) {
    if (inc.t <= start) continue;
    sum += inc.increment;
    est.times.push_back(inc.t);
    est.running.push_back(sum / (inc.t - start));
  }
  est.exponent = est.running.empty() ? std::numeric_limits<double>::quiet_NaN() : est.running.back();
  return est;
}

std::vector<SectionPoint> poincare_section(const Trajectory& trajectory, double theta_star) {
  if (!trajectory.suspended()) throw DomainError("poincare_section needs a trajectory with a phase coordinate");
  const double tau = trajectory.params.psi.period();
  if (!(theta_star >= 0.0 && theta_star < tau)) throw DomainError("theta_star must lie in [0, tau)");
  const double omega = trajectory.params.omega;
  const auto& xs = trajectory.samples;
  std::vector<SectionPoint> out;
  for (std::size_t i = 0; i + 1 < xs.size(); ++i) {
    if (trajectory.kinds[i] == SampleKind::PreJump) continue;
    const double dt = xs[i + 1].t - xs[i].t;
    if (!(dt > 0.0)) continue;
    const double phi0 = trajectory.theta[i];
    const double phi1 = phi0 + omega * dt;
    double c = theta_star + tau * std::ceil((phi0 - theta_star) / tau);
    if (c <= phi0) c += tau;
    for (; c <= phi1; c += tau) {
      const double w = (c - phi0) / (phi1 - phi0);
      out.push_back({xs[i].t + w * dt, xs[i].S + w * (xs[i + 1].S - xs[i].S),
                     xs[i].I + w * (xs[i + 1].I - xs[i].I)});
    }
  }
  return out;
}

std::size_t count_clusters(const std::vector<SectionPoint>& points, double radius) {
  const std::size_t n = points.size();
  std::vector<std::size_t> parent(n);
  std::iota(parent.begin(), parent.end(), std::size_t{0});
  auto find = [&](std::size_t i) {
    while (parent[i] != i) i = parent[i] = parent[parent[i]];
    return i;
  };
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      if (std::hypot(points[i].S - points[j].S, points[i].I - points[j].I) < radius) {
        parent[find(i)] = find(j);
      }
    }
  }
  std::size_t clusters = 0;
  for (std::size_t i = 0; i < n; ++i) clusters += find(i) == i ? 1 : 0;
  return clusters;
}

double mean_nearest_neighbor(const std::vector<SectionPoint>& points) {
  if (points.size() < 2) return std::numeric_limits<double>::quiet_NaN();
  double total = 0.0;
  for (std::size_t i = 0; i < points.size(); ++i) {
    double best = kInf;
    for (std::size_t j = 0; j < points.size(); ++j) {
      if (i == j) continue;
      best = std::min(best, std::hypot(points[i].S - points[j].S, points[i].I - points[j].I));
    }
    total += best;
  }
  return total / static_cast<double>(points.size());
}

PermanenceBounds permanence_check(const Trajectory& trajectory, double tail_fraction) {
  if (!(tail_fraction > 0.0 && tail_fraction <= 1.0)) throw DomainError("tail_fraction must lie in (0, 1]");
  PermanenceBounds b;
  if (trajectory.samples.empty()) return b;
  const double t0 = trajectory.samples.front().t;
  const double t1 = trajectory.samples.back().t;
  const double from = t1 - tail_fraction * (t1 - t0);
  b.c1 = b.c2 = kInf;
  b.C1 = b.C2 = -kInf;
  for (const State& s : trajectory.samples) {
    if (s.t < from) continue;
    b.c1 = std::min(b.c1, s.S);
    b.c2 = std::min(b.c2, s.I);
    b.C1 = std::max(b.C1, s.S);
    b.C2 = std::max(b.C2, s.I);
  }
  for (std::size_t idx : trajectory.impulse_indices) {
    if (trajectory.samples[idx].t >= from) ++b.pulses_in_tail;
  }
  b.sufficient = b.pulses_in_tail >= 100;
  return b;
}

}  // namespace pulsir
