#include "pulsir/cli.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <random>
#include <sstream>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "pulsir/analysis.hpp"
#include "pulsir/io.hpp"
#include "pulsir/sweep.hpp"

namespace pulsir {

namespace {

namespace fs = std::filesystem;

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Common {
  std::optional<double> A, beta0, sigma, g, mu, d, p, T, gamma, omega;
  std::string psi = "cos1";
  std::optional<double> s0, i0, r0, theta0, t_end;
  double rel_tol = 1e-9;
  double abs_tol = 1e-11;
  std::string out;
  std::string format;
  std::uint64_t seed = 0;
  int jobs = 0;
};

void add_common(CLI::App* cmd, Common& c) {
  cmd->add_option("--A", c.A, "logistic growth rate / carrying capacity (default 1)");
  cmd->add_option("--beta0", c.beta0, "mean transmission rate (default 0.9)");
  cmd->add_option("--sigma", c.sigma, "removal rate mu + d of infectives (default 0.2)");
  cmd->add_option("--g", c.g, "recovery rate (default 0.5)");
  cmd->add_option("--mu", c.mu, "natural death rate; with --d sets sigma = mu + d");
  cmd->add_option("--d", c.d, "disease-induced death rate (needs --mu)");
  cmd->add_option("--p", c.p, "vaccinated fraction per pulse (default 0.3)");
  cmd->add_option("--T", c.T, "pulse period (default 4)");
  cmd->add_option("--gamma", c.gamma, "seasonal amplitude (default 0)");
  cmd->add_option("--omega", c.omega, "seasonal angular frequency (default 1)");
  cmd->add_option("--psi", c.psi, "seasonal shape: cos1 or file:PATH");
  cmd->add_option("--s0", c.s0, "initial S (default 0.5)");
  cmd->add_option("--i0", c.i0, "initial I (default 0.4)");
  cmd->add_option("--r0", c.r0, "initial R (default 0)");
  cmd->add_option("--theta0", c.theta0, "initial seasonal phase (default 0)");
  cmd->add_option("--t-end", c.t_end, "final time");
  cmd->add_option("--rel-tol", c.rel_tol, "integrator relative tolerance");
  cmd->add_option("--abs-tol", c.abs_tol, "integrator absolute tolerance");
  cmd->add_option("--out", c.out, "output path (stdout when omitted)");
  cmd->add_option("--format", c.format, "csv or json")->check(CLI::IsMember({"csv", "json"}));
  cmd->add_option("--seed", c.seed, "seed for sampled initial conditions");
  cmd->add_option("--jobs", c.jobs, "worker threads for sweeps (0 = runtime default)");
}

ModelParams build_params(const Common& c) {
  ModelParams m;
  m.A = c.A.value_or(1.0);
  m.beta0 = c.beta0.value_or(0.9);
  m.g = c.g.value_or(0.5);
  m.p = c.p.value_or(0.3);
  m.T = c.T.value_or(4.0);
  m.gamma = c.gamma.value_or(0.0);
  m.omega = c.omega.value_or(1.0);
  m.sigma = c.sigma.value_or(0.2);
  if (c.d && !c.mu) throw UsageError("--d requires --mu");
  if (c.mu) m.mu = *c.mu;
  if (c.mu && c.d) {
    const double derived = *c.mu + *c.d;
    if (c.sigma && *c.sigma != derived) {
      throw UsageError(fmt::format("--sigma {} conflicts with --mu + --d = {}", *c.sigma, derived));
    }
    m.sigma = derived;
  }
  if (c.psi == "cos1") {
    m.psi = Forcing::cosine_raised();
  } else if (c.psi.rfind("file:", 0) == 0) {
    m.psi = Forcing::load(c.psi.substr(5));
  } else {
    throw UsageError(fmt::format("--psi must be cos1 or file:PATH (got '{}')", c.psi));
  }
  m.validate();
  return m;
}

IntegratorConfig build_config(const Common& c) {
  IntegratorConfig cfg;
  cfg.rel_tol = c.rel_tol;
  cfg.abs_tol = c.abs_tol;
  cfg.validate();
  return cfg;
}

State build_initial(const Common& c) {
  return State{c.s0.value_or(0.5), c.i0.value_or(0.4), c.r0.value_or(0.0), 0.0};
}

/// Where a command's primary text goes, plus any side files, and the manifest.
class Sink {
 public:
  Sink(const Common& c, std::ostream& out, std::vector<std::string> command, json params, json config)
      : out_path_(c.out), out_(out), command_(std::move(command)), params_(std::move(params)),
        config_(std::move(config)), start_(std::chrono::steady_clock::now()) {}

  void primary(const std::string& text) {
    if (out_path_.empty()) {
      out_ << text;
      return;
    }
    write_file(out_path_, text);
  }

  /// Side file next to the primary output; only written when --out is set.
  bool side(const std::string& suffix, const std::string& text) {
    if (out_path_.empty()) return false;
    write_file(out_path_ + suffix, text);
    return true;
  }

  void finish() {
    if (out_path_.empty()) return;
    RunManifest m;
    m.tool = std::string(kToolName);
    m.version = std::string(kToolVersion);
    m.command = command_;
    m.params = params_;
    m.config = config_;
    m.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    for (const std::string& path : written_) {
      m.outputs.push_back({path, sha256_file(path), fs::file_size(path)});
    }
    std::ofstream f(manifest_path_for(out_path_));
    f << to_json(m).dump(2) << '\n';
  }

 private:
  void write_file(const std::string& path, const std::string& text) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw UsageError(fmt::format("cannot open {} for writing", path));
    f << text;
    f.close();
    written_.push_back(path);
  }

  std::string out_path_;
  std::ostream& out_;
  std::vector<std::string> command_;
  json params_;
  json config_;
  std::chrono::steady_clock::time_point start_;
  std::vector<std::string> written_;
};

std::string json_text(const json& j) { return j.dump(2) + "\n"; }

void require_json(const Common& c) {
  if (!c.format.empty() && c.format != "json") throw UsageError("this command only writes JSON reports");
}

json state_json(const State& s) { return {{"t", s.t}, {"S", s.S}, {"I", s.I}, {"R", s.R}}; }

json number_or_null(double x) { return std::isfinite(x) ? json(x) : json(nullptr); }

// ---- simulate ---------------------------------------------------------------------------

struct SimulateArgs {
  double dt = 0.1;
};

void cmd_simulate(const Common& c, const SimulateArgs& a, Sink& sink) {
  const ModelParams params = build_params(c);
  IntegratorConfig cfg = build_config(c);
  if (!(a.dt > 0.0)) throw UsageError("--dt must be positive");
  cfg.dense_output_dt = a.dt;
  const State init = build_initial(c);
  const double t_end = c.t_end.value_or(400.0);
  const bool suspended = params.gamma != 0.0 || c.theta0.has_value();
  const Trajectory traj = suspended ? integrate_suspended(params, cfg, init, c.theta0.value_or(0.0), t_end)
                                    : integrate(params, cfg, init, t_end);
  std::ostringstream os;
  if (c.format == "json") {
    json rows = json::array();
    for (std::size_t i = 0; i < traj.samples.size(); ++i) {
      json r = state_json(traj.samples[i]);
      if (suspended) r["theta"] = traj.theta[i];
      r["impulse"] = static_cast<int>(traj.kinds[i]);
      rows.push_back(r);
    }
    os << json_text({{"params", to_json(params)}, {"clamp_events", traj.clamp_events}, {"samples", rows}});
  } else {
    write_trajectory_csv(os, traj);
  }
  sink.primary(os.str());
}

// ---- curves -----------------------------------------------------------------------------

struct CurvesArgs {
  double T_min = 0.1;
  double T_max = 10.0;
  std::size_t n = 100;
};

void cmd_curves(const Common& c, const CurvesArgs& a, Sink& sink) {
  const ModelParams base = build_params(c);
  if (!(a.T_min > 0.0 && a.T_max >= a.T_min) || a.n == 0) throw UsageError("need 0 < --T-min <= --T-max, --n >= 1");
  const bool seasonal = base.gamma > 0.0;
  const double S_c = base.critical_susceptible();
  std::vector<CurvesRow> rows;
  for (double T : linspace(a.T_min, a.T_max, a.n)) {
    CurvesRow r;
    r.T = T;
    r.p1 = p1_curve(base.A, T);
    r.p2 = base.A > S_c ? p2_curve(base.A, S_c, T) : std::nan("");
    if (seasonal) {
      ModelParams m = base;
      m.T = T;
      r.p2seas = (base.A > S_c && m.p < r.p1) ? p2_seasonal(m) : std::nan("");
    }
    rows.push_back(r);
  }
  std::ostringstream os;
  if (c.format == "json") {
    json arr = json::array();
    for (const CurvesRow& r : rows) {
      json j{{"T", r.T}, {"p1", r.p1}, {"p2", number_or_null(r.p2)}};
      if (r.p2seas) j["p2seas"] = number_or_null(*r.p2seas);
      arr.push_back(j);
    }
    os << json_text({{"params", to_json(base)}, {"curves", arr}});
  } else {
    write_curves_csv(os, rows);
  }
  sink.primary(os.str());
}

// ---- sweep ------------------------------------------------------------------------------

struct SweepArgs {
  double T_min = 0.5, T_max = 8.0;
  std::size_t nT = 20;
  double p_min = 0.02, p_max = 0.98;
  std::size_t np = 20;
  double horizon_periods = 3000.0;
  double tol = 1e-6;
  double band = 0.02;
};

void cmd_sweep(const Common& c, const SweepArgs& a, Sink& sink, std::ostream& err) {
  const ModelParams base = build_params(c);
  SweepGrid grid;
  grid.T_values = linspace(a.T_min, a.T_max, a.nT);
  grid.p_values = linspace(a.p_min, a.p_max, a.np);
  grid.horizon_periods = a.horizon_periods;
  grid.tol = a.tol;
  grid.boundary_band = a.band;
  grid.initial = build_initial(c);
  grid.config = build_config(c);
  const SweepResult result = sweep_bifurcation_plane(base, grid, c.jobs);

  std::ostringstream os;
  if (c.format == "json") {
    json j = to_json(result);
    j["params"] = to_json(base);
    os << json_text(j);
  } else {
    write_sweep_csv(os, result);
  }
  sink.primary(os.str());
  const json report = discrepancy_report(result);
  if (!sink.side(".discrepancies.json", json_text(report))) {
    err << fmt::format("agreement on interior cells: {} ({} discrepancies, {} failures)\n",
                       format_double(result.agreement()), report["discrepancies"].size(), result.failures);
  }
}

// ---- floquet ----------------------------------------------------------------------------

struct FloquetArgs {
  std::string orbit = "disease_free_periodic";
};

void cmd_floquet(const Common& c, const FloquetArgs& a, Sink& sink) {
  require_json(c);
  const ModelParams params = build_params(c);
  const IntegratorConfig cfg = build_config(c);
  const Orbit orbit = a.orbit == "origin" ? Orbit::Origin : Orbit::DiseaseFreePeriodic;
  const FloquetPair an = floquet_analytic(params, orbit);
  const MonodromyResult num = monodromy_numeric_full(params, cfg, orbit);
  auto rel = [](double x, double ref) { return ref == 0.0 ? std::abs(x) : std::abs(x - ref) / std::abs(ref); };
  json j;
  j["orbit"] = to_string(orbit);
  j["params"] = to_json(params);
  j["analytic"] = {{"lambda1", an.lambda1}, {"lambda2", an.lambda2}, {"stable", an.stable()}};
  j["numeric"] = {{"lambda1", num.pair.lambda1},
                  {"lambda2", num.pair.lambda2},
                  {"stable", num.pair.stable()},
                  {"monodromy", num.matrix},
                  {"base_drift", num.base_drift}};
  j["relative_error"] = {{"lambda1", rel(num.pair.lambda1, an.lambda1)},
                         {"lambda2", rel(num.pair.lambda2, an.lambda2)}};
  if (params.p < 1.0) j["Rp"] = reproduction_number_Rp(params);
  sink.primary(json_text(j));
}

// ---- lyapunov ---------------------------------------------------------------------------

struct LyapunovArgs {
  std::optional<double> horizon;
  double renorm = 0.0;
  double transient = 0.2;
  bool series = false;
};

void cmd_lyapunov(const Common& c, const LyapunovArgs& a, Sink& sink) {
  require_json(c);
  const ModelParams params = build_params(c);
  const IntegratorConfig cfg = build_config(c);
  LyapunovOptions lo;
  lo.horizon = a.horizon.value_or(c.t_end.value_or(1000.0 * params.T));
  lo.renorm_every = a.renorm;
  lo.transient_fraction = a.transient;
  lo.theta0 = c.theta0.value_or(0.0);
  const State init = build_initial(c);
  const LyapunovEstimate est = lyapunov_max(params, cfg, init, lo);
  json j;
  j["params"] = to_json(params);
  j["initial"] = state_json(init);
  j["theta0"] = lo.theta0;
  j["horizon"] = lo.horizon;
  j["renorm_every"] = lo.renorm_every > 0.0 ? lo.renorm_every : params.T;
  j["transient_fraction"] = lo.transient_fraction;
  j["exponent"] = number_or_null(est.exponent);
  j["reseeds"] = est.reseeds;
  if (a.series) j["series"] = {{"t", est.times}, {"running", est.running}};
  sink.primary(json_text(j));
}

// ---- classify ---------------------------------------------------------------------------

struct ClassifyArgs {
  std::optional<double> horizon;
  double tol = 1e-6;
  std::size_t samples = 0;
};

json report_json(const OmegaLimitReport& r) {
  json j;
  j["label"] = to_string(r.label);
  j["region"] = region_number(r.label);
  j["strobe_residual"] = r.strobe_residual;
  j["target_distance"] = number_or_null(r.target_distance);
  j["min_I_tail"] = r.min_I_tail;
  j["max_I_tail"] = r.max_I_tail;
  j["lyapunov"] = r.lyapunov ? number_or_null(*r.lyapunov) : json(nullptr);
  j["horizon_used"] = r.horizon_used;
  j["pulses"] = r.pulses;
  if (!r.terminal_strobe.empty()) {
    j["terminal_strobe"] = {{"S", r.terminal_strobe.back().S}, {"I", r.terminal_strobe.back().I}};
  }
  return j;
}

void cmd_classify(const Common& c, const ClassifyArgs& a, Sink& sink) {
  require_json(c);
  const ModelParams params = build_params(c);
  const IntegratorConfig cfg = build_config(c);
  ClassifyOptions opts;
  opts.horizon = a.horizon.value_or(c.t_end.value_or(3000.0 * params.T));
  opts.tol = a.tol;

  json j;
  j["params"] = to_json(params);
  j["analytic"] = params.gamma == 0.0 ? json(std::string(to_string(classify_analytic(params)))) : json(nullptr);
  if (a.samples == 0) {
    const State init = build_initial(c);
    j["initial"] = state_json(init);
    j["report"] = report_json(classify_empirical(params, cfg, init, opts));
  } else {
    std::mt19937_64 rng(c.seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::map<std::string, std::size_t> counts;
    json list = json::array();
    for (std::size_t k = 0; k < a.samples; ++k) {
      // Inside the trapping region with both compartments positive.
      const double S0 = params.A * (0.01 + 0.99 * unit(rng));
      const double I0 = (params.trapping_bound() - S0) * (0.01 + 0.98 * unit(rng));
      const OmegaLimitReport r = classify_empirical(params, cfg, State{S0, I0, 0.0, 0.0}, opts);
      ++counts[std::string(to_string(r.label))];
      list.push_back({{"S0", S0}, {"I0", I0}, {"label", to_string(r.label)}, {"strobe_residual", r.strobe_residual}});
    }
    j["seed"] = c.seed;
    j["samples"] = list;
    j["counts"] = counts;
    j["consensus"] = counts.size() == 1 ? json(counts.begin()->first) : json("mixed");
  }
  sink.primary(json_text(j));
}

// ---- endemic-orbit ----------------------------------------------------------------------

struct EndemicArgs {
  double tol = 1e-9;
  bool with_samples = false;
};

void cmd_endemic_orbit(const Common& c, const EndemicArgs& a, Sink& sink) {
  require_json(c);
  const ModelParams params = build_params(c);
  const IntegratorConfig cfg = build_config(c);
  EndemicOrbitOptions opts;
  opts.tol = a.tol;
  const EndemicOrbit orbit = find_endemic_orbit(params, cfg, opts);
  const Matrix2& J = orbit.strobe_jacobian;
  const double tr = J[0] + J[3];
  const double det = J[0] * J[3] - J[1] * J[2];
  const double disc = tr * tr - 4.0 * det;
  const double radius =
      disc >= 0.0 ? std::max(std::abs(0.5 * (tr + std::sqrt(disc))), std::abs(0.5 * (tr - std::sqrt(disc))))
                  : std::sqrt(det);
  json j;
  j["params"] = to_json(params);
  j["fixed_point"] = {{"S", orbit.fixed_point.S}, {"I", orbit.fixed_point.I}};
  j["residual"] = orbit.residual;
  j["iterations"] = orbit.iterations;
  j["mean_S"] = orbit.mean_S;
  j["S_c"] = params.critical_susceptible();
  j["neutrality_error"] = std::abs(orbit.mean_S - params.critical_susceptible());
  j["strobe_jacobian"] = J;
  j["spectral_radius"] = radius;
  if (a.with_samples) {
    json rows = json::array();
    for (const State& s : orbit.samples) rows.push_back(state_json(s));
    j["samples"] = rows;
  }
  sink.primary(json_text(j));
}

// ---- rerun ------------------------------------------------------------------------------

int cmd_rerun(const std::string& manifest_file, std::ostream& out, std::ostream& err) {
  std::ifstream in(manifest_file);
  if (!in) throw UsageError(fmt::format("cannot read manifest {}", manifest_file));
  const RunManifest m = manifest_from_json(json::parse(in));
  if (!m.command.empty() && m.command.front() == "rerun") throw UsageError("manifest records a rerun");
  std::ostringstream sub_out, sub_err;
  const int code = run_cli(m.command, sub_out, sub_err);
  if (code != kExitOk) {
    err << sub_err.str();
    return code;
  }
  json outs = json::array();
  bool all = true;
  for (const OutputDigest& o : m.outputs) {
    const std::string actual = fs::exists(o.path) ? sha256_file(o.path) : std::string();
    const bool match = actual == o.sha256;
    all = all && match;
    outs.push_back({{"path", o.path}, {"expected", o.sha256}, {"actual", actual}, {"match", match}});
  }
  out << json_text({{"manifest", manifest_file}, {"reproduced", all}, {"outputs", outs}});
  return all ? kExitOk : kExitNumeric;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Pulse-vaccinated SIR model with seasonal forcing", std::string(kToolName)};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(kToolVersion));

  Common common;
  SimulateArgs sim;
  CurvesArgs curves;
  SweepArgs sweep;
  FloquetArgs floq;
  LyapunovArgs lyap;
  ClassifyArgs cls;
  EndemicArgs endemic;
  std::string manifest_file;

  auto* c_sim = app.add_subcommand("simulate", "integrate one trajectory (CSV t,S,I,R[,theta],impulse)");
  add_common(c_sim, common);
  c_sim->add_option("--dt", sim.dt, "sample spacing (default 0.1)");

  auto* c_curves = app.add_subcommand("curves", "threshold curves p1, p2[, p2seas] on a T grid");
  add_common(c_curves, common);
  c_curves->add_option("--T-min", curves.T_min);
  c_curves->add_option("--T-max", curves.T_max);
  c_curves->add_option("--n", curves.n, "number of T values");

  auto* c_sweep = app.add_subcommand("sweep", "empirical vs analytic labels on a (T, p) grid");
  add_common(c_sweep, common);
  c_sweep->add_option("--T-min", sweep.T_min);
  c_sweep->add_option("--T-max", sweep.T_max);
  c_sweep->add_option("--nT", sweep.nT);
  c_sweep->add_option("--p-min", sweep.p_min);
  c_sweep->add_option("--p-max", sweep.p_max);
  c_sweep->add_option("--np", sweep.np);
  c_sweep->add_option("--horizon-periods", sweep.horizon_periods);
  c_sweep->add_option("--tol", sweep.tol);
  c_sweep->add_option("--band", sweep.band, "boundary band half-width in p");

  auto* c_floq = app.add_subcommand("floquet", "analytic and numeric Floquet multipliers (JSON)");
  add_common(c_floq, common);
  c_floq->add_option("--orbit", floq.orbit)->check(CLI::IsMember({"disease_free_periodic", "origin"}));

  auto* c_lyap = app.add_subcommand("lyapunov", "largest Lyapunov exponent (JSON)");
  add_common(c_lyap, common);
  c_lyap->add_option("--horizon", lyap.horizon, "integration time (default 1000 T, at least 500 T)");
  c_lyap->add_option("--renorm", lyap.renorm, "renormalization interval (0 = T)");
  c_lyap->add_option("--transient", lyap.transient, "fraction of the horizon discarded");
  c_lyap->add_flag("--series", lyap.series, "include the running average");

  auto* c_cls = app.add_subcommand("classify", "empirical omega-limit label (JSON)");
  add_common(c_cls, common);
  c_cls->add_option("--horizon", cls.horizon, "integration time bound (default 3000 T)");
  c_cls->add_option("--tol", cls.tol);
  c_cls->add_option("--samples", cls.samples, "classify N random initial conditions (uses --seed)");

  auto* c_end = app.add_subcommand("endemic-orbit", "locate the endemic T-periodic orbit (JSON)");
  add_common(c_end, common);
  c_end->add_option("--tol", endemic.tol);
  c_end->add_flag("--with-samples", endemic.with_samples);

  auto* c_rerun = app.add_subcommand("rerun", "re-run a manifest and compare output digests");
  c_rerun->add_option("manifest", manifest_file)->required();

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (c_rerun->parsed()) return cmd_rerun(manifest_file, out, err);
    Sink sink(common, out, args, to_json(build_params(common)), to_json(build_config(common)));
    if (c_sim->parsed()) {
      cmd_simulate(common, sim, sink);
    } else if (c_curves->parsed()) {
      cmd_curves(common, curves, sink);
    } else if (c_sweep->parsed()) {
      cmd_sweep(common, sweep, sink, err);
    } else if (c_floq->parsed()) {
      cmd_floquet(common, floq, sink);
    } else if (c_lyap->parsed()) {
      cmd_lyapunov(common, lyap, sink);
    } else if (c_cls->parsed()) {
      cmd_classify(common, cls, sink);
    } else if (c_end->parsed()) {
      cmd_endemic_orbit(common, endemic, sink);
    }
    sink.finish();
    return kExitOk;
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const DomainError& e) {
    err << "invalid input: " << e.what() << '\n';
    return kExitUsage;
  } catch (const ExistenceError& e) {
    err << "invalid input: " << e.what() << '\n';
    return kExitUsage;
  } catch (const IntegrationError& e) {
    const State& s = e.last_good();
    err << "numeric failure: " << e.what() << '\n'
        << fmt::format("last good state: t={} S={} I={} R={}\n", format_double(s.t), format_double(s.S),
                       format_double(s.I), format_double(s.R));
    return kExitNumeric;
  } catch (const NumericError& e) {
    err << "numeric failure: " << e.what() << '\n';
    return kExitNumeric;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  }
}

}  // namespace pulsir
