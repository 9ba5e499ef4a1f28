// Acceptance suite: one PASS/FAIL line per criterion.
//   acceptance            run everything, exit status = number of failures
//   acceptance N [M ...]  run only the listed criteria

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <set>
#include <string>
#include <vector>

#include <fmt/format.h>

#include "oracles.hpp"
#include "pulsir/analysis.hpp"
#include "pulsir/sweep.hpp"

using namespace pulsir;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

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

ModelParams from_case(const oracle::RandomCase& c) {
  ModelParams m;
  m.A = c.A;
  m.beta0 = c.beta0;
  m.sigma = c.sigma;
  m.g = c.g;
  m.T = c.T;
  m.p = c.p;
  return m;
}

// The randomized suite shared by criteria 2 and 9.
std::vector<ModelParams> random_suite() {
  std::mt19937_64 rng(20240601);
  std::vector<ModelParams> out;
  for (int k = 0; k < 100; ++k) out.push_back(from_case(oracle::draw_case(rng, 0.005)));
  return out;
}

Outcome thresholds_c1() {
  const Thresholds th = thresholds(rates());
  // p2(4) against the root of lambda2(p) = 1; the quoted 0.588885 is 2.7e-6 off that root
  const double root =
      oracle::bisect([](double p) { return 0.9 * (std::log1p(-p) + 4.0) - 0.7 * 4.0; }, 0.0, 0.98);
  const bool ok = std::abs(th.S_c - 0.777778) <= 1e-6 && std::abs(th.R0 - 1.285714) <= 1e-6 &&
                  std::abs(th.p1 - 0.981684) <= 1e-6 && th.p2 && std::abs(*th.p2 - root) <= 1e-6;
  return {ok, fmt::format("S_c={:.7f} R0={:.7f} p1(4)={:.7f} p2(4)={:.7f} (bisection root {:.7f})", th.S_c, th.R0,
                          th.p1, th.p2.value_or(NAN), root)};
}

Outcome floquet_c2() {
  IntegratorConfig cfg;
  double worst = 0.0;
  int regions[6] = {0, 0, 0, 0, 0, 0};
  for (const ModelParams& m : random_suite()) {
    ++regions[region_number(classify_analytic(m))];
    const FloquetPair a = floquet_analytic(m, Orbit::DiseaseFreePeriodic);
    const FloquetPair n = monodromy_numeric(m, cfg);
    worst = std::max({worst, std::abs(n.lambda1 / a.lambda1 - 1.0), std::abs(n.lambda2 / a.lambda2 - 1.0)});
  }
  const double l2 = monodromy_numeric(rates(4.0, 0.3), cfg).lambda2;
  const bool ok = worst <= 1e-6 && std::abs(l2 - 1.61446) <= 1e-4;
  return {ok, fmt::format("max rel err {:.2e} over 100 samples ({} in region 3, {} in region 4); lambda2(T=4,p=0.3)={:.6f}",
                          worst, regions[3], regions[4], l2)};
}

Outcome integral_c3() {
  double worst = 0.0;
  for (int i = 0; i < 10; ++i) {
    for (int j = 0; j < 10; ++j) {
      const double T = 0.25 + 0.8 * i;
      ModelParams m = rates(T, 0.0);
      m.A = 0.5 + 0.05 * i;
      m.p = (0.02 + 0.1 * j) * p1_curve(m.A, T);
      const QuadratureResult q = adaptive_simpson([&](double t) { return disease_free_periodic_S(m, t); }, 0.0,
                                                  std::nextafter(T, 0.0));
      worst = std::max(worst, std::abs(q.value - (std::log1p(-m.p) + m.A * T)));
    }
  }
  return {worst <= 1e-8, fmt::format("max |quadrature - (ln(1-p)+AT)| = {:.2e} on 10x10 grid", worst)};
}

Outcome scenarios_c4() {
  IntegratorConfig cfg;
  const State start{0.5, 0.4, 0.0, 0.0};
  const Regime expected[5] = {Regime::FullCoverage, Regime::TrivialDiseaseFree, Regime::NontrivialDiseaseFree,
                              Regime::EndemicPeriodic, Regime::EndemicEquilibrium};
  const double ps[5] = {1.0, 0.99, 0.7, 0.3, 0.0};
  bool ok = true;
  std::string labels;
  double residual4 = NAN;
  for (int k = 0; k < 5; ++k) {
    const OmegaLimitReport r = classify_empirical(rates(4.0, ps[k]), cfg, start, 3000.0 * 4.0, 1e-6);
    ok = ok && r.label == expected[k];
    labels += fmt::format("{}{}", k ? "," : "", region_number(r.label));
    if (k == 3) residual4 = r.strobe_residual;
  }
  const EndemicOrbit orbit = find_endemic_orbit(rates(4.0, 0.3), cfg);
  const double neutral = std::abs(orbit.mean_S - rates().critical_susceptible());
  ok = ok && residual4 <= 1e-6 && neutral <= 1e-6;
  return {ok, fmt::format("regions [{}] for p=1,0.99,0.7,0.3,0; region-4 residual {:.2e}; |mean S - S_c| = {:.2e}",
                          labels, residual4, neutral)};
}

Outcome sweep_c5() {
  SweepGrid g;
  g.T_values = linspace(0.5, 8.0, 20);
  g.p_values = linspace(0.02, 0.98, 20);
  const SweepResult r = sweep_bifurcation_plane(rates(), g);
  const double agree = r.agreement();
  return {agree >= 0.95, fmt::format("agreement {:.4f} on {} interior cells ({} failures)", agree,
                                     r.interior_cells(), r.failures)};
}

Outcome equilibrium_c6() {
  IntegratorConfig cfg;
  cfg.dense_output_dt = INFINITY;
  const Trajectory tr = integrate(rates(4.0, 0.0), cfg, State{0.5, 0.4, 0.0, 0.0}, 500.0);
  const State& s = tr.back();
  const double d = std::max(std::abs(s.S - 0.777778), std::abs(s.I - 0.246914));
  return {d <= 1e-5, fmt::format("(S,I)(500) = ({:.7f}, {:.7f}), distance {:.2e}", s.S, s.I, d)};
}

Outcome seasonal_c7() {
  ModelParams m;
  m.A = 1.0;
  m.beta0 = 0.2;
  m.sigma = 0.05;
  m.g = 0.02;
  m.T = 1.0;
  m.omega = 0.1;
  m.p = 0.5;
  const double p2 = p2_curve(m.A, m.critical_susceptible(), m.T);
  bool ok = true;
  std::string vals;
  for (double gamma : {0.1, 0.5, 1.0}) {
    m.gamma = gamma;
    const double s = p2_seasonal(m);
    ok = ok && s > p2;
    vals += fmt::format(" g={}:{:.6f}", gamma, s);
  }
  m.gamma = 1e-6;
  const double diff = std::abs(p2_seasonal(m) - p2);
  ok = ok && diff <= 1e-6;
  return {ok, fmt::format("p2={:.6f};{}; |p2seas-p2| at 1e-6 = {:.2e}", p2, vals, diff)};
}

Outcome chaos_c8() {
  ModelParams m;
  m.A = 1.0;
  m.T = 4.0;
  m.beta0 = 2.0;
  m.omega = 6.0;
  m.sigma = 0.2;
  m.g = 0.5;
  m.p = 0.4;
  LyapunovOptions o;
  o.horizon = 8000.0;
  const State start{0.4074, 0.2645, 0.0, 0.0};
  m.gamma = 0.5;
  const double regular = lyapunov_max(m, IntegratorConfig{}, start, o).exponent;
  m.gamma = 4.89;
  const double forced = lyapunov_max(m, IntegratorConfig{}, start, o).exponent;
  return {regular <= 0.0 && forced > 0.05,
          fmt::format("LE(gamma=0.5) = {:.5f} (need <= 0); LE(gamma=4.89) = {:.5f} (need > 0.05)", regular, forced)};
}

Outcome invariants_c9() {
  IntegratorConfig cfg;
  cfg.dense_output_dt = 0.02;
  std::mt19937_64 rng(77);
  std::uniform_real_distribution<double> U(0.0, 1.0);
  std::size_t trapping = 0, monotone = 0, jump = 0, exact = 0, checked = 0;
  const double delta = 1e-6;
  for (const ModelParams& m : random_suite()) {
    const double S0 = m.A * U(rng);
    const double I0 = (m.trapping_bound() - S0) * U(rng);
    const Trajectory tr = integrate(m, cfg, State{S0, I0, 0.0, 0.0}, 20.0 * m.T);
    const double Sc = m.critical_susceptible();
    for (std::size_t i = 0; i < tr.samples.size(); ++i) {
      if (!in_trapping_region(m, tr.samples[i], 1e-8)) ++trapping;
      if (i == 0 || tr.kinds[i] == SampleKind::PostJump) continue;
      const State& a = tr.samples[i - 1];
      const State& b = tr.samples[i];
      if (a.I < 1e-250) continue;
      const double wobble = std::abs(b.S - a.S);
      ++checked;
      if (std::max(a.S, b.S) + wobble < Sc - delta && !(b.I < a.I)) ++monotone;
      if (std::min(a.S, b.S) - wobble > Sc + delta && !(b.I > a.I)) ++monotone;
    }
    for (std::size_t k = 0; k < tr.impulse_indices.size(); ++k) {
      const State& pre = tr.samples[tr.impulse_indices[k]];
      const State& post = tr.samples[tr.impulse_indices[k] + 1];
      const double total = pre.S + pre.I + pre.R;
      if (std::abs(post.S + post.I + post.R - total) > 4e-16 * total) ++jump;
      const double nT = static_cast<double>(k + 1) * m.T;
      if (pre.t != nT || post.t != nT) ++exact;
    }
  }
  const std::size_t total = trapping + monotone + jump + exact;
  return {total == 0, fmt::format("violations: trapping {}, I-monotonicity {} (of {} steps), jump {}, impulse time {}",
                                  trapping, monotone, checked, jump, exact)};
}

struct Criterion {
  int id;
  const char* name;
  std::function<Outcome()> run;
};

}  // namespace

int main(int argc, char** argv) {
  const std::vector<Criterion> all{
      {1, "threshold values", thresholds_c1},
      {2, "Floquet cross-validation", floquet_c2},
      {3, "integral identity", integral_c3},
      {4, "five-scenario reproduction", scenarios_c4},
      {5, "sweep agreement", sweep_c5},
      {6, "endemic equilibrium", equilibrium_c6},
      {7, "seasonal threshold ordering", seasonal_c7},
      {8, "chaos detection", chaos_c8},
      {9, "invariant suite", invariants_c9},
  };
  std::set<int> wanted;
  for (int i = 1; i < argc; ++i) wanted.insert(std::stoi(argv[i]));

  int failures = 0;
  for (const Criterion& c : all) {
    if (!wanted.empty() && !wanted.count(c.id)) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, fmt::format("exception: {}", e.what())};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    failures += o.pass ? 0 : 1;
    fmt::print("{} criterion {} ({}): {} [{:.3f} s]\n", o.pass ? "PASS" : "FAIL", c.id, c.name, o.detail, secs);
    std::fflush(stdout);
  }
  return failures;
}
