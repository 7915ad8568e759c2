#include <unistd.h>

#include <cmath>
#include <fstream>
#include <random>
#include <sstream>

#include "doctest.h"
#include "hpot/cli.hpp"
#include "json.hpp"

using namespace hpot;
using namespace hpot::cli;

namespace {

std::filesystem::path scratch_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() /
             ("hpot_unit_" + std::to_string(::getpid()) + "_" + name);
  std::filesystem::remove_all(dir);
  return dir;
}

int run(std::vector<std::string> args) {
  args.insert(args.begin(), "hpotential");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  return cli_main(static_cast<int>(argv.size()), argv.data());
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

std::string config_error(const std::string& text) {
  try {
    validate(parse_config_text(text));
  } catch (const ConfigError& e) {
    return e.what();
  }
  return "";
}

ResidualReport sample_report(double scale) {
  ResidualReport r;
  r.check_id = "sample";
  r.probe = GroupPoint::xyt(0.1 * scale, -1.0 / 3.0, 1e-300);
  r.residual = Complex(std::sqrt(2.0) * scale, -std::numbers::pi);
  r.normalization = 6.283185307179586;
  r.error_estimate = 1.0 / 7.0;
  r.tolerance = 1.0;
  return r;
}

}  // namespace

TEST_CASE("defaults and valid flags") {
  RunConfig cfg;
  CHECK_NOTHROW(validate(cfg));
  CHECK(cfg.a == 0.5);
  CHECK(cfg.surface == SurfaceKind::GaugeSphere);
  CHECK(std::abs(cfg.params().c() - Complex(-2 * std::numbers::pi, 0)) < 1e-8);
  set_option(cfg, "a", "0.3");
  set_option(cfg, "b", "0.7");
  set_option(cfg, "mesh_res", "12");
  CHECK_NOTHROW(validate(cfg));
  CHECK(cfg.mesh_res == 12);
}

TEST_CASE("config file syntax") {
  const RunConfig cfg = parse_config_text("# comment\n a = 0.3 \n\nb=0.7 # trailing\nsurface = euclidean\n");
  CHECK(cfg.a == 0.3);
  CHECK(cfg.surface == SurfaceKind::EuclideanSphere);
  CHECK(config_error("a = 0.5\nfoo = 1\n").find("line 2") == 0);
  CHECK(config_error("a 0.5\n").find("line 1") == 0);
}

TEST_CASE("validation names the violated rule") {
  CHECK(config_error("a = 2\nb = -1\n").find("excluded parameter set") != std::string::npos);
  CHECK(config_error("a = 0.3\nb = 0.6\n").find("a + b") != std::string::npos);
  CHECK(config_error("mesh-res = 4\n").find("mesh-res") != std::string::npos);
  CHECK(config_error("surf-res = 2\n").find("surf-res") != std::string::npos);
  CHECK(config_error("n = 3\n").find("n must be 2") != std::string::npos);
  CHECK(config_error("m = 3\n").find("m must be") != std::string::npos);
}

TEST_CASE("malformed configs are always config errors") {
  const std::vector<std::string> keys{"n", "a", "b", "surface", "radius", "mesh-res", "surf-res",
                                      "delta0", "pv-levels", "seed", "probes", "higher-probes",
                                      "m", "check", "bogus"};
  const std::vector<std::string> values{"", "x", "1e999", "-1", "0", "nan", "1.5.2", "3x",
                                        "9999999999", "gauge ", "-0.0"};
  std::mt19937_64 rng(42);
  int rejected = 0;
  for (int trial = 0; trial < 400; ++trial) {
    const std::string text = keys[rng() % keys.size()] + " = " + values[rng() % values.size()] + "\n";
    try {
      validate(parse_config_text(text));
    } catch (const ConfigError&) {
      ++rejected;
      continue;
    }
    // Anything accepted must satisfy every invariant.
    CHECK_NOTHROW(validate(parse_config_text(text)));
  }
  CHECK(rejected > 200);
}

TEST_CASE("exit code contract") {
  const auto out = scratch_dir("exit");
  CHECK(run({"bogus-subcommand", "--out", out.string()}) == kExitConfig);
  CHECK(run({"verify-kernel", "--a", "2", "--b", "-1", "--out", out.string()}) == kExitConfig);
  CHECK(run({"verify-kernel", "--a", "0.3", "--b", "0.6", "--out", out.string()}) == kExitConfig);
  CHECK(run({"verify-kernel", "--no-such-flag", "1"}) == kExitConfig);
  CHECK(run({"verify-kernel", "--config", (out / "missing.cfg").string()}) == kExitConfig);
  CHECK_FALSE(std::filesystem::exists(out / "results.csv"));

  // An excision schedule too coarse to converge is a numerical failure.
  CHECK(run({"profile-half-residue", "--delta0", "0.9", "--pv-levels", "3", "--out", out.string()}) ==
        kExitNumerical);
  const auto manifest = nlohmann::json::parse(slurp(out / "manifest.json"));
  CHECK(manifest["summary"]["numerical_failure"] == true);
  CHECK(manifest["diagnostics"][0].get<std::string>().rfind("pv-not-converged", 0) == 0);
  std::filesystem::remove_all(out);

  ScenarioResult r;
  CHECK(r.exit_code() == kExitPass);
  ResidualReport bad = sample_report(1.0);
  bad.tolerance = 0.0;
  r.reports.push_back(bad);
  CHECK(r.exit_code() == kExitFail);
  r.numerical_failure = true;
  CHECK(r.exit_code() == kExitNumerical);
}

TEST_CASE("verify-kernel writes its artifacts") {
  const auto out = scratch_dir("kernel");
  REQUIRE(run({"verify-kernel", "--out", out.string()}) == kExitPass);
  const auto rows = parse_results_csv(slurp(out / "results.csv"));
  bool homogeneity = false, annihilation = false;
  for (const auto& row : rows) {
    homogeneity = homogeneity || row.check_id == "homogeneity";
    annihilation = annihilation || row.check_id.rfind("annihilation", 0) == 0;
    CHECK(row.pass);
  }
  CHECK(homogeneity);
  CHECK(annihilation);
  const auto manifest = nlohmann::json::parse(slurp(out / "manifest.json"));
  CHECK(manifest["subcommand"] == "verify-kernel");
  CHECK(manifest["exit_code"] == 0);
  CHECK(manifest["config"]["a"] == "0.5");
  CHECK(manifest["summary"]["all_pass"] == true);
  CHECK_FALSE(std::filesystem::exists(out / "results.csv.tmp"));
  std::filesystem::remove_all(out);
}

TEST_CASE("results CSV round trip") {
  std::vector<ResidualReport> reports{sample_report(1.0), sample_report(-3.0)};
  reports[1].residual = Complex(std::numeric_limits<double>::infinity(), 0.0);
  const std::string text = results_csv(reports);
  const auto rows = parse_results_csv(text);
  REQUIRE(rows.size() == 2);
  for (std::size_t k = 0; k < rows.size(); ++k) {
    const auto& r = reports[k];
    CHECK(rows[k].check_id == r.check_id);
    CHECK(rows[k].probe_x == r.probe.x());
    CHECK(rows[k].probe_y == r.probe.y());
    CHECK(rows[k].probe_t == r.probe.t());
    CHECK(rows[k].residual_re == r.residual.real());
    CHECK(rows[k].residual_im == r.residual.imag());
    CHECK(rows[k].normalization == r.normalization);
    CHECK(rows[k].error_estimate == r.error_estimate);
    CHECK(rows[k].pass == r.pass());
  }
  std::istringstream lines(results_csv({sample_report(1.0)}));
  std::string line;
  int count = 0;
  while (std::getline(lines, line)) ++count;
  CHECK(count == 2);
  CHECK_THROWS(parse_results_csv("wrong,header\n"));
  CHECK_THROWS(parse_results_csv(std::string(kCsvHeader) + "\nid,1,2\n"));
  ResidualReport comma = sample_report(1.0);
  comma.check_id = "a,b";
  CHECK_THROWS(results_csv({comma}));
}

TEST_CASE("JSON mirrors report fields") {
  const auto j = nlohmann::json::parse(reports_json({sample_report(1.0)}));
  REQUIRE(j.size() == 1);
  CHECK(j[0]["check_id"] == "sample");
  CHECK(j[0]["residual"][0].get<double>() == std::sqrt(2.0));
  CHECK(j[0]["normalization"].get<double>() == 6.283185307179586);
  CHECK(j[0]["pass"] == true);
}

TEST_CASE("convergence plot has one polyline") {
  ConvergenceTable t;
  t.check_id = "demo";
  t.add(8, 0.1);
  t.add(16, 0.02);
  t.add(32, 0.004);
  const std::string svg = convergence_svg(t);
  std::size_t count = 0;
  for (std::size_t pos = svg.find("<polyline"); pos != std::string::npos; pos = svg.find("<polyline", pos + 1))
    ++count;
  CHECK(count == 1);
  const auto begin = svg.find("points=\"") + 8;
  const std::string pts = svg.substr(begin, svg.find('"', begin) - begin);
  std::istringstream in(pts);
  std::string vertex;
  int vertices = 0;
  while (in >> vertex) ++vertices;
  CHECK(vertices == 3);
  CHECK(svg.find("refinement index") != std::string::npos);
  CHECK(svg.find("log10 |residual|") != std::string::npos);
  CHECK_THROWS(convergence_svg(ConvergenceTable{}));
}

TEST_CASE("emission is deterministic and IO errors name the path") {
  const std::vector<ResidualReport> reports{sample_report(1.0), sample_report(2.0)};
  CHECK(results_csv(reports) == results_csv(reports));
  CHECK(format_double(0.1) == "0.10000000000000001");
  CHECK(format_double(std::nan("")) == "nan");
  try {
    write_atomic("/nonexistent-dir/for/sure/file.csv", "x");
    FAIL("expected an IO error");
  } catch (const std::runtime_error& e) {
    CHECK(std::string(e.what()).find("/nonexistent-dir/for/sure/file.csv") != std::string::npos);
  }
}
