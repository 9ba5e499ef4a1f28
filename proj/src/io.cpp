#include "pulsir/io.hpp"

#include <array>
#include <cmath>
#include <fstream>
#include <iterator>
#include <stdexcept>

#include <fmt/format.h>
#include <openssl/evp.h>

namespace pulsir {

std::string format_double(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  return fmt::format("{:.17g}", x);
}

namespace {

json number_or_null(double x) { return std::isfinite(x) ? json(x) : json(nullptr); }

}  // namespace

void write_trajectory_csv(std::ostream& os, const Trajectory& traj) {
  const bool theta = traj.suspended();
  os << (theta ? "t,S,I,R,theta,impulse\n" : "t,S,I,R,impulse\n");
  for (std::size_t i = 0; i < traj.samples.size(); ++i) {
    const State& s = traj.samples[i];
    os << format_double(s.t) << ',' << format_double(s.S) << ',' << format_double(s.I) << ','
       << format_double(s.R) << ',';
    if (theta) os << format_double(traj.theta[i]) << ',';
    os << static_cast<int>(traj.kinds[i]) << '\n';
  }
}

void write_sweep_csv(std::ostream& os, const SweepResult& result) {
  os << "T,p,label_analytic,label_empirical,lyapunov,residual\n";
  for (const SweepCell& c : result.cells) {
    os << format_double(c.T) << ',' << format_double(c.p) << ',' << to_string(c.analytic) << ','
       << (c.error.empty() ? std::string(to_string(c.empirical)) : std::string("error")) << ','
       << format_double(c.lyapunov) << ',' << format_double(c.residual) << '\n';
  }
}

void write_curves_csv(std::ostream& os, const std::vector<CurvesRow>& rows) {
  const bool seas = !rows.empty() && rows.front().p2seas.has_value();
  os << (seas ? "T,p1,p2,p2seas\n" : "T,p1,p2\n");
  for (const CurvesRow& r : rows) {
    os << format_double(r.T) << ',' << format_double(r.p1) << ',' << format_double(r.p2);
    if (seas) os << ',' << format_double(r.p2seas.value_or(std::nan("")));
    os << '\n';
  }
}

json to_json(const ModelParams& params) {
  json j;
  j["A"] = params.A;
  j["beta0"] = params.beta0;
  j["sigma"] = params.sigma;
  j["g"] = params.g;
  j["mu"] = params.mu ? json(*params.mu) : json(nullptr);
  j["p"] = params.p;
  j["T"] = params.T;
  j["gamma"] = params.gamma;
  j["omega"] = params.omega;
  j["psi"] = params.psi.describe();
  return j;
}

json to_json(const IntegratorConfig& config) {
  json j;
  j["rel_tol"] = config.rel_tol;
  j["abs_tol"] = config.abs_tol;
  j["max_step"] = config.max_step;
  j["dense_output_dt"] = number_or_null(config.dense_output_dt);
  j["clamp_band"] = config.clamp_band;
  j["max_clamp_events"] = config.max_clamp_events;
  return j;
}

json discrepancy_report(const SweepResult& result) {
  json j;
  j["cells"] = result.cells.size();
  j["interior_cells"] = result.interior_cells();
  j["failures"] = result.failures;
  j["agreement_interior"] = number_or_null(result.agreement());
  json list = json::array();
  for (const SweepCell* c : result.discrepancies()) {
    json d;
    d["T"] = c->T;
    d["p"] = c->p;
    d["label_analytic"] = to_string(c->analytic);
    d["label_empirical"] = c->error.empty() ? std::string(to_string(c->empirical)) : std::string("error");
    d["boundary"] = c->boundary;
    d["residual"] = number_or_null(c->residual);
    d["lyapunov"] = number_or_null(c->lyapunov);
    if (!c->error.empty()) d["error"] = c->error;
    list.push_back(d);
  }
  j["discrepancies"] = list;
  return j;
}

json to_json(const SweepResult& result) {
  json j = discrepancy_report(result);
  json cells = json::array();
  for (const SweepCell& c : result.cells) {
    cells.push_back({{"T", c.T},
                     {"p", c.p},
                     {"label_analytic", to_string(c.analytic)},
                     {"label_empirical", c.error.empty() ? std::string(to_string(c.empirical)) : "error"},
                     {"lyapunov", number_or_null(c.lyapunov)},
                     {"residual", number_or_null(c.residual)},
                     {"boundary", c.boundary}});
  }
  j["grid"] = cells;
  return j;
}

std::string sha256_hex(std::string_view bytes) {
  std::array<unsigned char, EVP_MAX_MD_SIZE> md{};
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), md.data(), &len, EVP_sha256(), nullptr) != 1) {
    throw std::runtime_error("SHA-256 digest failed");
  }
  std::string hex;
  hex.reserve(2 * len);
  for (unsigned int i = 0; i < len; ++i) hex += fmt::format("{:02x}", md[i]);
  return hex;
}

std::string sha256_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error(fmt::format("cannot read {}", path.string()));
  const std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return sha256_hex(bytes);
}

json to_json(const RunManifest& m) {
  json outs = json::array();
  for (const OutputDigest& o : m.outputs) outs.push_back({{"path", o.path}, {"sha256", o.sha256}, {"bytes", o.bytes}});
  return {{"tool", m.tool},     {"version", m.version},           {"command", m.command},
          {"params", m.params}, {"config", m.config},             {"wall_seconds", m.wall_seconds},
          {"outputs", outs}};
}

RunManifest manifest_from_json(const json& j) {
  RunManifest m;
  m.tool = j.at("tool").get<std::string>();
  m.version = j.at("version").get<std::string>();
  m.command = j.at("command").get<std::vector<std::string>>();
  m.params = j.value("params", json::object());
  m.config = j.value("config", json::object());
  m.wall_seconds = j.value("wall_seconds", 0.0);
  for (const json& o : j.at("outputs")) {
    m.outputs.push_back({o.at("path").get<std::string>(), o.at("sha256").get<std::string>(),
                         o.at("bytes").get<std::uintmax_t>()});
  }
  return m;
}

std::filesystem::path manifest_path_for(const std::filesystem::path& output) {
  return std::filesystem::path(output.string() + ".manifest.json");
}

}  // namespace pulsir
