#include <chrono>
#include <ctime>
#include <iostream>
#include <optional>

#include "CLI11.hpp"
#include "hpot/cli.hpp"

namespace hpot::cli {

namespace {

std::string utc_now() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::string summary_line(const ScenarioResult& r, int code) {
  int passed = 0;
  for (const auto& rep : r.reports) passed += rep.pass() ? 1 : 0;
  return std::to_string(passed) + "/" + std::to_string(r.reports.size()) + " reports pass, exit " +
         std::to_string(code);
}

}  // namespace

int cli_main(int argc, const char* const* argv) {
  CLI::App app{"Potential theory for the Kohn Laplacian on the Heisenberg group H_1", "hpotential"};
  app.set_version_flag("--version", version());

  std::string subcommand;
  std::string config_path;
  // Option values stay as text and go through set_option, so flags and
  // config files share one parser and one set of messages.
  std::vector<std::pair<std::string, std::optional<std::string>>> flags = {
      {"n", {}},          {"a", {}},        {"b", {}},     {"surface", {}}, {"radius", {}},
      {"mesh-res", {}},   {"surf-res", {}}, {"delta0", {}}, {"pv-levels", {}}, {"seed", {}},
      {"probes", {}},     {"higher-probes", {}}, {"m", {}}, {"check", {}},  {"out", {}}};

  std::string names;
  for (const auto& s : subcommands()) names += (names.empty() ? "" : ", ") + s;
  app.add_option("subcommand", subcommand, "one of: " + names)->required();
  app.add_option("--config", config_path, "flat key = value file; flags override it");
  for (auto& [key, value] : flags) app.add_option("--" + key, value, "see README");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConfig;
  }

  RunConfig cfg;
  try {
    bool known = false;
    for (const auto& s : subcommands()) known = known || s == subcommand;
    if (!known) throw ConfigError("unknown subcommand '" + subcommand + "' (expected " + names + ")");
    if (!config_path.empty()) cfg = parse_config_file(config_path);
    for (const auto& [key, value] : flags) {
      if (!value) continue;
      try {
        set_option(cfg, key, *value);
      } catch (const ConfigError& e) {
        throw ConfigError(std::string("--") + key + ": " + e.what());
      }
    }
    validate(cfg);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  }

  ManifestInfo info;
  info.subcommand = subcommand;
  info.started = utc_now();
  ScenarioResult result;
  try {
    result = run_scenario(cfg, subcommand);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  }
  info.finished = utc_now();
  info.exit_code = result.exit_code();
  try {
    write_artifacts(cfg, result, info);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitFail;
  }
  for (const auto& d : result.diagnostics) std::cerr << "diagnostic: " << d << "\n";
  std::cout << subcommand << ": " << summary_line(result, info.exit_code) << "\n";
  return info.exit_code;
}

}  // namespace hpot::cli
