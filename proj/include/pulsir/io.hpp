#pragma once

#include <filesystem>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "pulsir/analysis.hpp"
#include "pulsir/sweep.hpp"

namespace pulsir {

using nlohmann::json;

/// 17 significant digits; "nan", "inf", "-inf" for non-finite values.
std::string format_double(double x);

/// Header `t,S,I,R[,theta],impulse`; impulse is 0 (interior), 1 (pre-jump) or 2 (post-jump).
void write_trajectory_csv(std::ostream& os, const Trajectory& traj);

/// Header `T,p,label_analytic,label_empirical,lyapunov,residual`.
void write_sweep_csv(std::ostream& os, const SweepResult& result);

struct CurvesRow {
  double T = 0.0;
  double p1 = 0.0;
  double p2 = 0.0;
  std::optional<double> p2seas;
};

/// Header `T,p1,p2` plus `,p2seas` when the first row carries it.
void write_curves_csv(std::ostream& os, const std::vector<CurvesRow>& rows);

json to_json(const ModelParams& params);
json to_json(const IntegratorConfig& config);
json to_json(const SweepResult& result);
json discrepancy_report(const SweepResult& result);

std::string sha256_hex(std::string_view bytes);
/// Digest of a file's bytes; throws std::runtime_error if it cannot be read.
std::string sha256_file(const std::filesystem::path& path);

struct OutputDigest {
  std::string path;
  std::string sha256;
  std::uintmax_t bytes = 0;
};

/// Everything needed to re-run a command and check its outputs.
struct RunManifest {
  std::string tool;
  std::string version;
  std::vector<std::string> command;
  json params;
  json config;
  double wall_seconds = 0.0;
  std::vector<OutputDigest> outputs;
};

json to_json(const RunManifest& manifest);
RunManifest manifest_from_json(const json& j);

/// `<output>.manifest.json`
std::filesystem::path manifest_path_for(const std::filesystem::path& output);

}  // namespace pulsir
