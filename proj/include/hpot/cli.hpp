// Run configuration, verification scenarios, and report emission (CSV, JSON,
// SVG) behind the hpotential command-line tool.
#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "hpot/verify.hpp"

namespace hpot::cli {

/// Invalid configuration; maps to exit code 2.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr int kExitPass = 0;
inline constexpr int kExitFail = 1;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitNumerical = 3;

inline constexpr int kMinMeshRes = 8;
inline constexpr int kMinSurfRes = 8;

struct RunConfig {
  int n = 2;
  double a = 0.5;
  double b = 0.5;
  SurfaceKind surface = SurfaceKind::GaugeSphere;
  double radius = 1.0;
  /// Reference volume resolution: radial = m1 = mesh_res, m2 = 2 mesh_res.
  int mesh_res = 16;
  /// Reference surface resolution: m1 = surf_res, m2 = 2 surf_res.
  int surf_res = 32;
  /// First excision radius relative to the surface scale; 0 selects 0.2.
  double delta0 = 0.0;
  int pv_levels = 5;
  std::uint64_t seed = 20240611;
  int probes = 16;
  /// Boundary probes for the order-two boundary condition (expensive).
  int higher_probes = 4;
  int m = 1;
  /// Check id for the study subcommand.
  std::string check = "annihilation";
  std::string out = ".";

  VolumeResolution mesh_resolution() const { return {mesh_res, mesh_res, 2 * mesh_res}; }
  SurfaceResolution surface_resolution() const { return {surf_res, 2 * surf_res}; }
  PvConfig pv() const;
  LayerConfig layer() const;
  Surface make_surface() const;
  /// Validated parameters with c_{a,b} filled in.
  KernelParams params() const;
};

/// Applies one key=value setting; throws ConfigError naming the key.
void set_option(RunConfig& cfg, const std::string& key, const std::string& value);

/// Flat key=value text ('#' comments, blank lines ignored); errors carry the
/// line number.
RunConfig parse_config_text(const std::string& text, RunConfig base = {});
RunConfig parse_config_file(const std::filesystem::path& path, RunConfig base = {});

/// Checks every invariant; throws ConfigError naming the violated rule.
void validate(const RunConfig& cfg);

/// Flat key/value echo of the configuration, as written to the manifest.
std::map<std::string, std::string> describe(const RunConfig& cfg);

// ---------------------------------------------------------------------------

inline const std::vector<std::string>& subcommands() {
  static const std::vector<std::string> k{"verify-kernel", "verify-newton", "verify-jumps",
                                          "verify-bc",     "verify-higher", "profile-half-residue",
                                          "study"};
  return k;
}

inline const std::vector<std::string>& study_checks() {
  static const std::vector<std::string> k{"annihilation", "gauss",        "jumps",
                                          "bc-first",     "roundtrip-m1", "roundtrip-m2"};
  return k;
}

struct ScenarioResult {
  std::vector<ResidualReport> reports;
  std::vector<ConvergenceTable> tables;
  std::vector<std::string> diagnostics;
  /// Extra CSV artifact (file name, content), e.g. the half-residue profile.
  std::vector<std::pair<std::string, std::string>> extra_files;
  bool numerical_failure = false;

  bool all_pass() const;
  int exit_code() const;
};

/// Runs one subcommand. NumericalError is caught and recorded (exit 3); other
/// exceptions propagate.
ScenarioResult run_scenario(const RunConfig& cfg, const std::string& subcommand);

/// Refinement study for one registered check.
ConvergenceTable convergence_study(const RunConfig& cfg, const std::string& check);

// ---------------------------------------------------------------------------
// Emission

inline constexpr const char* kCsvHeader =
    "check_id,probe_x,probe_y,probe_t,residual_re,residual_im,normalization,error_estimate,pass";

/// 17 significant digits, shortest exact form not attempted.
std::string format_double(double v);

std::string results_csv(const std::vector<ResidualReport>& reports);

/// One parsed results.csv data row.
struct CsvRow {
  std::string check_id;
  double probe_x = 0, probe_y = 0, probe_t = 0;
  double residual_re = 0, residual_im = 0;
  double normalization = 0, error_estimate = 0;
  bool pass = false;
};
std::vector<CsvRow> parse_results_csv(const std::string& text);

std::string tables_csv(const std::vector<ConvergenceTable>& tables);

/// log10 |residual| against refinement index as a single polyline.
std::string convergence_svg(const ConvergenceTable& table);

std::string reports_json(const std::vector<ResidualReport>& reports);

struct ManifestInfo {
  std::string subcommand;
  std::string started;
  std::string finished;
  int exit_code = 0;
};
std::string manifest_json(const RunConfig& cfg, const ScenarioResult& result,
                          const ManifestInfo& info);

/// Writes through a temporary file and a rename; throws std::runtime_error
/// naming the path on failure.
void write_atomic(const std::filesystem::path& path, const std::string& content);

/// Writes manifest.json, results.csv, tables.csv, plot.svg (when a table
/// exists) and any extra files into cfg.out.
void write_artifacts(const RunConfig& cfg, const ScenarioResult& result, const ManifestInfo& info);

/// Full command-line entry point (flag parsing, run, artifacts); returns the
/// exit code.
int cli_main(int argc, const char* const* argv);

std::string version();

}  // namespace hpot::cli
