#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "hpot/cli.hpp"

namespace hpot::cli {

namespace {

std::string trim(const std::string& s) {
  const auto lo = s.find_first_not_of(" \t\r");
  if (lo == std::string::npos) return "";
  const auto hi = s.find_last_not_of(" \t\r");
  return s.substr(lo, hi - lo + 1);
}

double to_double(const std::string& key, const std::string& v) {
  std::size_t used = 0;
  double x = 0.0;
  try {
    x = std::stod(v, &used);
  } catch (const std::exception&) {
    throw ConfigError("option '" + key + "': expected a number, got '" + v + "'");
  }
  if (used != v.size() || !std::isfinite(x))
    throw ConfigError("option '" + key + "': expected a finite number, got '" + v + "'");
  return x;
}

long long to_integer(const std::string& key, const std::string& v) {
  long long x = 0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), x);
  if (ec != std::errc() || ptr != v.data() + v.size())
    throw ConfigError("option '" + key + "': expected an integer, got '" + v + "'");
  return x;
}

int to_int(const std::string& key, const std::string& v) {
  const long long x = to_integer(key, v);
  if (x < -1000000 || x > 1000000) throw ConfigError("option '" + key + "': value out of range");
  return static_cast<int>(x);
}

}  // namespace

PvConfig RunConfig::pv() const {
  PvConfig p;
  p.delta0 = delta0 * radius;
  p.levels = pv_levels;
  return p;
}

LayerConfig RunConfig::layer() const {
  LayerConfig l;
  l.res = surface_resolution();
  return l;
}

Surface RunConfig::make_surface() const { return Surface::make(surface, radius); }

KernelParams RunConfig::params() const {
  validate(*this);
  const KernelParams p = KernelParams::make(n, a, b);
  return p.with_c(c_ab_reference(p).value);
}

void set_option(RunConfig& cfg, const std::string& raw_key, const std::string& raw_value) {
  std::string key = trim(raw_key);
  for (char& ch : key)
    if (ch == '_') ch = '-';
  const std::string v = trim(raw_value);
  if (key == "n") {
    cfg.n = to_int(key, v);
  } else if (key == "a") {
    cfg.a = to_double(key, v);
  } else if (key == "b") {
    cfg.b = to_double(key, v);
  } else if (key == "surface") {
    if (v == "gauge")
      cfg.surface = SurfaceKind::GaugeSphere;
    else if (v == "euclidean")
      cfg.surface = SurfaceKind::EuclideanSphere;
    else
      throw ConfigError("option 'surface': expected gauge or euclidean, got '" + v + "'");
  } else if (key == "radius") {
    cfg.radius = to_double(key, v);
  } else if (key == "mesh-res") {
    cfg.mesh_res = to_int(key, v);
  } else if (key == "surf-res") {
    cfg.surf_res = to_int(key, v);
  } else if (key == "delta0") {
    cfg.delta0 = to_double(key, v);
  } else if (key == "pv-levels") {
    cfg.pv_levels = to_int(key, v);
  } else if (key == "seed") {
    const long long s = to_integer(key, v);
    if (s < 0) throw ConfigError("option 'seed': must be non-negative");
    cfg.seed = static_cast<std::uint64_t>(s);
  } else if (key == "probes") {
    cfg.probes = to_int(key, v);
  } else if (key == "higher-probes") {
    cfg.higher_probes = to_int(key, v);
  } else if (key == "m") {
    cfg.m = to_int(key, v);
  } else if (key == "check") {
    cfg.check = v;
  } else if (key == "out") {
    if (v.empty()) throw ConfigError("option 'out': empty path");
    cfg.out = v;
  } else {
    throw ConfigError("unknown option '" + key + "'");
  }
}

RunConfig parse_config_text(const std::string& text, RunConfig base) {
  std::istringstream in(text);
  std::string line;
  int number = 0;
  while (std::getline(in, line)) {
    ++number;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("line " + std::to_string(number) + ": expected key = value");
    try {
      set_option(base, line.substr(0, eq), line.substr(eq + 1));
    } catch (const ConfigError& e) {
      throw ConfigError("line " + std::to_string(number) + ": " + e.what());
    }
  }
  return base;
}

RunConfig parse_config_file(const std::filesystem::path& path, RunConfig base) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file '" + path.string() + "'");
  std::ostringstream os;
  os << in.rdbuf();
  try {
    return parse_config_text(os.str(), std::move(base));
  } catch (const ConfigError& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

void validate(const RunConfig& cfg) {
  if (cfg.n != 2) throw ConfigError("n must be 2 (only H_1 is supported)");
  try {
    KernelParams::make(cfg.n, cfg.a, cfg.b);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  if (!(cfg.radius > 0.0)) throw ConfigError("radius must be positive");
  if (cfg.mesh_res < kMinMeshRes)
    throw ConfigError("mesh-res must be at least " + std::to_string(kMinMeshRes));
  if (cfg.surf_res < kMinSurfRes)
    throw ConfigError("surf-res must be at least " + std::to_string(kMinSurfRes));
  if (cfg.delta0 < 0.0 || cfg.delta0 >= 1.0) throw ConfigError("delta0 must lie in [0, 1)");
  if (cfg.pv_levels < 3 || cfg.pv_levels > 12) throw ConfigError("pv-levels must lie in [3, 12]");
  if (cfg.probes < 1 || cfg.probes > 256) throw ConfigError("probes must lie in [1, 256]");
  if (cfg.higher_probes < 1 || cfg.higher_probes > cfg.probes)
    throw ConfigError("higher-probes must lie in [1, probes]");
  if (cfg.m != 1 && cfg.m != 2) throw ConfigError("m must be 1 or 2");
  bool known = false;
  for (const auto& c : study_checks()) known = known || c == cfg.check;
  if (!known) throw ConfigError("unknown study check '" + cfg.check + "'");
}

std::map<std::string, std::string> describe(const RunConfig& cfg) {
  return {{"n", std::to_string(cfg.n)},
          {"a", format_double(cfg.a)},
          {"b", format_double(cfg.b)},
          {"surface", cfg.surface == SurfaceKind::GaugeSphere ? "gauge" : "euclidean"},
          {"radius", format_double(cfg.radius)},
          {"mesh-res", std::to_string(cfg.mesh_res)},
          {"surf-res", std::to_string(cfg.surf_res)},
          {"delta0", format_double(cfg.delta0)},
          {"pv-levels", std::to_string(cfg.pv_levels)},
          {"seed", std::to_string(cfg.seed)},
          {"probes", std::to_string(cfg.probes)},
          {"higher-probes", std::to_string(cfg.higher_probes)},
          {"m", std::to_string(cfg.m)},
          {"check", cfg.check},
          {"out", cfg.out}};
}

}  // namespace hpot::cli
