#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "oracles.hpp"
#include "pulsir/analysis.hpp"
#include "pulsir/sweep.hpp"

using namespace pulsir;

namespace {

ModelParams rates(double T = 4.0, double p = 0.3) {
  ModelParams m;
  m.A = 1.0;
  m.beta0 = 0.9;
  m.sigma = 0.2;
  m.g = 0.5;
  m.T = T;
  m.p = p;
  return m;
}

ModelParams seasonal_case(double gamma) {
  ModelParams m;
  m.A = 1.0;
  m.T = 4.0;
  m.beta0 = 2.0;
  m.omega = 6.0;
  m.sigma = 0.2;
  m.g = 0.5;
  m.p = 0.4;
  m.gamma = gamma;
  return m;
}

const State kStart{0.5, 0.4, 0.0, 0.0};

}  // namespace

TEST_CASE("five scenarios") {
  IntegratorConfig cfg;
  const double horizon = 3000.0 * 4.0;
  CHECK(classify_empirical(rates(4.0, 1.0), cfg, kStart, horizon, 1e-6).label == Regime::FullCoverage);
  CHECK(classify_empirical(rates(4.0, 0.99), cfg, kStart, horizon, 1e-6).label == Regime::TrivialDiseaseFree);
  CHECK(classify_empirical(rates(4.0, 0.7), cfg, kStart, horizon, 1e-6).label == Regime::NontrivialDiseaseFree);
  const OmegaLimitReport four = classify_empirical(rates(4.0, 0.3), cfg, kStart, horizon, 1e-6);
  CHECK(four.label == Regime::EndemicPeriodic);
  CHECK(four.strobe_residual <= 1e-6);
  CHECK(four.min_I_tail > 0.1);
  CHECK(four.terminal_strobe.size() == 51);
  CHECK(classify_empirical(rates(4.0, 0.0), cfg, kStart, horizon, 1e-6).label == Regime::EndemicEquilibrium);
}

TEST_CASE("slow disease-free case") {
  ModelParams m;
  m.A = 1.0;
  m.beta0 = 0.2;
  m.sigma = 0.05;
  m.g = 0.02;
  m.T = 1.0;
  m.omega = 0.1;
  m.p = 0.5;
  const OmegaLimitReport r = classify_empirical(m, IntegratorConfig{}, kStart, 5000.0, 1e-6);
  CHECK(r.label == Regime::NontrivialDiseaseFree);
  CHECK(r.target_distance < 1e-6);
}

TEST_CASE("classification preconditions") {
  IntegratorConfig cfg;
  CHECK_THROWS_AS(classify_empirical(rates(), cfg, kStart, 10.0, 1e-6), DomainError);
  CHECK_THROWS_AS(classify_empirical(rates(), cfg, kStart, 400.0, 0.1), DomainError);
}

TEST_CASE("a horizon that is too short leaves the label open") {
  ClassifyOptions o;
  o.horizon = 50.0 * 4.0;
  o.probe_lyapunov = false;
  // close to p2 the disease fades far too slowly for 50 pulses
  const OmegaLimitReport r = classify_empirical(rates(4.0, 0.6), IntegratorConfig{}, kStart, o);
  CHECK(r.label == Regime::Undetermined);
  CHECK_FALSE(r.lyapunov.has_value());
}

TEST_CASE("empirical and analytic labels agree on random cells") {
  std::mt19937_64 rng(41);
  IntegratorConfig cfg;
  for (int k = 0; k < 25; ++k) {
    const oracle::RandomCase c = oracle::draw_case(rng, 0.02);
    ModelParams m;
    m.A = c.A;
    m.beta0 = c.beta0;
    m.sigma = c.sigma;
    m.g = c.g;
    m.T = c.T;
    m.p = c.p;
    const OmegaLimitReport r = classify_empirical(m, cfg, kStart, 5000.0 * m.T, 1e-6);
    CHECK_MESSAGE(r.label == classify_analytic(m), "A=", m.A, " beta0=", m.beta0, " sigma=", m.sigma,
                  " g=", m.g, " T=", m.T, " p=", m.p);
  }
}

TEST_CASE("strobe labels agree with the dense trajectory") {
  IntegratorConfig cfg;
  cfg.dense_output_dt = 0.05;
  for (double p : {0.99, 0.7, 0.3}) {
    const ModelParams m = rates(4.0, p);
    const OmegaLimitReport r = classify_empirical(m, IntegratorConfig{}, kStart, 12000.0, 1e-6);
    const Trajectory tr = integrate(m, cfg, kStart, 1600.0);
    double maxI = 0.0;
    double minI = INFINITY;
    for (const State& s : tr.samples) {
      if (s.t < 1400.0) continue;
      maxI = std::max(maxI, s.I);
      minI = std::min(minI, s.I);
    }
    // left limits at the pulses, not the post-jump strobe
    double drift = 0.0;
    const auto& idx = tr.impulse_indices;
    for (std::size_t k = idx.size() - 50; k < idx.size(); ++k) {
      const State& a = tr.samples[idx[k]];
      const State& b = tr.samples[idx[k - 1]];
      drift = std::max({drift, std::abs(a.S - b.S), std::abs(a.I - b.I)});
    }
    if (r.label == Regime::EndemicPeriodic) {
      CHECK(minI > 1e-6);
      CHECK(drift < 1e-6);
    } else {
      CHECK(maxI < 1e-6);
    }
  }
}

TEST_CASE("endemic orbit") {
  IntegratorConfig cfg;
  const ModelParams m = rates(4.0, 0.3);
  const EndemicOrbit o = find_endemic_orbit(m, cfg);
  CHECK(o.residual <= 1e-9);
  CHECK(std::abs(o.mean_S - m.critical_susceptible()) <= 1e-6);
  CHECK(o.samples.front().t == 0.0);
  CHECK(o.samples.back().t == 4.0);
  // the period closes through the jump
  CHECK(std::abs((1 - m.p) * o.samples.back().S - o.fixed_point.S) < 1e-9);
  CHECK(std::abs(o.samples.back().I - o.fixed_point.I) < 1e-9);
  // trapezoid mean of the samples is an independent check of the neutrality
  double acc = 0.0;
  for (std::size_t i = 1; i < o.samples.size(); ++i) {
    acc += 0.5 * (o.samples[i].S + o.samples[i - 1].S) * (o.samples[i].t - o.samples[i - 1].t);
  }
  CHECK(std::abs(acc / 4.0 - m.critical_susceptible()) < 1e-4);

  const EndemicOrbit near = find_endemic_orbit(rates(4.0, 1e-7), cfg);
  CHECK(std::abs(near.fixed_point.S - 0.777778) < 1e-5);
  CHECK(std::abs(near.fixed_point.I - 0.246914) < 1e-5);

  const EndemicOrbit zero = find_endemic_orbit(rates(4.0, 0.0), cfg);
  CHECK(std::abs(zero.fixed_point.S - 0.7 / 0.9) < 1e-12);

  CHECK_THROWS_AS(find_endemic_orbit(rates(4.0, 0.7), cfg), ExistenceError);
  ModelParams forced = m;
  forced.gamma = 0.2;
  CHECK_THROWS_AS(find_endemic_orbit(forced, cfg), DomainError);
}

TEST_CASE("endemic orbits are neutral across the region") {
  std::mt19937_64 rng(8);
  IntegratorConfig cfg;
  int located = 0;
  for (int k = 0; k < 60 && located < 12; ++k) {
    const oracle::RandomCase c = oracle::draw_case(rng, 0.02);
    ModelParams m;
    m.A = c.A;
    m.beta0 = c.beta0;
    m.sigma = c.sigma;
    m.g = c.g;
    m.T = c.T;
    m.p = c.p;
    if (classify_analytic(m) != Regime::EndemicPeriodic) continue;
    const EndemicOrbit o = find_endemic_orbit(m, cfg);
    CHECK(std::abs(o.mean_S - m.critical_susceptible()) <= 1e-6);
    ++located;
  }
  CHECK(located >= 5);
}

TEST_CASE("Lyapunov exponent") {
  IntegratorConfig cfg;
  SUBCASE("stable disease-free orbit is negative") {
    const ModelParams m = rates(4.0, 0.8);
    LyapunovOptions o;
    o.horizon = 2000.0;
    const LyapunovEstimate e = lyapunov_max(m, cfg, kStart, o);
    CHECK(e.exponent < 0.0);
    CHECK(e.exponent == doctest::Approx(std::log(0.52283) / 4.0).epsilon(0.02));
    CHECK(e.running.size() == e.times.size());
    CHECK(e.times.front() > 400.0);
  }
  SUBCASE("regular seasonal regime") {
    LyapunovOptions o;
    o.horizon = 4000.0;
    const LyapunovEstimate e = lyapunov_max(seasonal_case(0.5), cfg, State{0.4074, 0.2645, 0.0, 0.0}, o);
    CHECK(e.exponent <= 0.0);
  }
  SUBCASE("horizon too short") {
    LyapunovOptions o;
    o.horizon = 100.0;
    CHECK_THROWS_AS(lyapunov_max(rates(), cfg, kStart, o), DomainError);
  }
}

TEST_CASE("Poincare sections") {
  IntegratorConfig cfg;
  cfg.dense_output_dt = 0.02;
  SUBCASE("locked forcing gives a few points") {
    ModelParams m = rates(4.0, 0.3);
    m.gamma = 0.3;
    m.omega = 2.0 * std::numbers::pi / 4.0;  // one forcing cycle per pulse
    const Trajectory tr = integrate_suspended(m, cfg, kStart, 0.0, 2000.0);
    std::vector<SectionPoint> pts = poincare_section(tr, 2.0);
    CHECK(std::abs(static_cast<double>(pts.size()) - 500.0) <= 1.0);
    pts.erase(pts.begin(), pts.begin() + 250);
    CHECK(count_clusters(pts, 1e-3) <= 2);
  }
  SUBCASE("incommensurate phases fill a curve") {
    ModelParams m = rates(4.0, 0.3);
    m.omega = 1.0;  // 2 pi / omega is irrational relative to T
    const Trajectory a = integrate_suspended(m, cfg, kStart, 0.0, 2000.0);
    const Trajectory b = integrate_suspended(m, cfg, kStart, 0.0, 8000.0);
    const auto pa = poincare_section(a, 2.0);
    const auto pb = poincare_section(b, 2.0);
    // point counts scale with the horizon
    CHECK(static_cast<double>(pb.size()) / pa.size() == doctest::Approx(4.0).epsilon(0.01));
    std::vector<SectionPoint> ta(pa.begin() + pa.size() / 2, pa.end());
    std::vector<SectionPoint> tb(pb.begin() + pb.size() / 2, pb.end());
    CHECK(mean_nearest_neighbor(tb) < 0.5 * mean_nearest_neighbor(ta));
    CHECK(count_clusters(tb, 1e-4) > 100);
  }
  SUBCASE("section needs the phase") {
    const Trajectory tr = integrate(rates(), cfg, kStart, 20.0);
    CHECK_THROWS_AS(poincare_section(tr, 2.0), DomainError);
  }
}

TEST_CASE("forcing near 4.89 sits on a neutral torus") {
  LyapunovOptions o;
  o.horizon = 8000.0;
  const LyapunovEstimate e = lyapunov_max(seasonal_case(4.89), IntegratorConfig{}, State{0.4074, 0.2645, 0.0, 0.0}, o);
  CHECK(std::abs(e.exponent) < 0.01);
}

TEST_CASE("permanence bounds") {
  IntegratorConfig cfg;
  SUBCASE("endemic region is permanent") {
    const ModelParams m = rates(4.0, 0.3);
    const PermanenceBounds a = permanence_check(integrate(m, cfg, kStart, 800.0), 0.5);
    const PermanenceBounds b = permanence_check(integrate(m, cfg, kStart, 1600.0), 0.5);
    CHECK(a.sufficient);
    CHECK(a.c1 > 0.0);
    CHECK(a.c2 > 0.0);
    CHECK(std::abs(b.c2 - a.c2) < 0.1 * a.c2);
    CHECK(std::abs(b.c1 - a.c1) < 0.1 * a.c1);
  }
  SUBCASE("disease-free band loses I") {
    const ModelParams m = rates(4.0, 0.7);
    const PermanenceBounds a = permanence_check(integrate(m, cfg, kStart, 800.0), 0.5);
    const PermanenceBounds b = permanence_check(integrate(m, cfg, kStart, 1600.0), 0.5);
    CHECK(b.c2 < 1e-3 * a.c2);
  }
  SUBCASE("origin loses S") {
    const ModelParams m = rates(4.0, 0.99);
    const PermanenceBounds a = permanence_check(integrate(m, cfg, kStart, 800.0), 0.5);
    CHECK(a.c1 < 1e-10);
    CHECK(a.C1 < 1e-10);
  }
  SUBCASE("short tails are flagged") {
    const PermanenceBounds a = permanence_check(integrate(rates(), cfg, kStart, 40.0), 0.5);
    CHECK_FALSE(a.sufficient);
  }
}

TEST_CASE("sweep cells") {
  SweepGrid g;
  g.T_values = {4.0};
  g.p_values = {0.0};
  CHECK(sweep_bifurcation_plane(rates(), g).at(0, 0).empirical == Regime::EndemicEquilibrium);
  g.p_values = {1.0};
  CHECK(sweep_bifurcation_plane(rates(), g).at(0, 0).empirical == Regime::FullCoverage);

  g.p_values = {0.5, 0.4};
  CHECK_THROWS_AS(sweep_bifurcation_plane(rates(), g), DomainError);
}

TEST_CASE("parallel sweep matches the serial reference") {
  SweepGrid g;
  g.T_values = linspace(0.5, 8.0, 6);
  g.p_values = linspace(0.02, 0.98, 7);
  const SweepResult par = sweep_bifurcation_plane(rates(), g, 4);
  const SweepResult ser = sweep_bifurcation_plane_serial(rates(), g);
  REQUIRE(par.cells.size() == ser.cells.size());
  for (std::size_t i = 0; i < par.cells.size(); ++i) {
    CHECK(par.cells[i].empirical == ser.cells[i].empirical);
    CHECK(par.cells[i].analytic == ser.cells[i].analytic);
    CHECK((par.cells[i].residual == ser.cells[i].residual ||
           (std::isnan(par.cells[i].residual) && std::isnan(ser.cells[i].residual))));
  }
  CHECK(par.agreement() == 1.0);
  CHECK(par.failures == 0);
}

TEST_CASE("curve overlay") {
  const auto rows = curve_overlay(rates(), {1.0, 4.0});
  CHECK(rows[1].p1 == doctest::Approx(0.981684).epsilon(1e-6));
  CHECK(rows[1].p2 == doctest::Approx(0.588888).epsilon(1e-6));
  ModelParams low = rates();
  low.beta0 = 0.5;
  CHECK(std::isnan(curve_overlay(low, {1.0})[0].p2));
}

TEST_CASE("linspace") {
  const auto v = linspace(0.0, 1.0, 5);
  CHECK(v.size() == 5);
  CHECK(v[2] == 0.5);
  CHECK(v.back() == 1.0);
  CHECK(linspace(2.0, 3.0, 1) == std::vector<double>{2.0});
}
