// One pass/fail line per acceptance criterion. Scenarios run in process;
// the determinism criterion runs the command-line tool twice.
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>
#include <unistd.h>

#include "hpot/cli.hpp"

using namespace hpot;
using namespace hpot::cli;

namespace {

using Filter = std::function<bool(const std::string&)>;

bool starts(const std::string& id, const std::string& prefix) { return id.rfind(prefix, 0) == 0; }

Filter any_of(std::vector<std::string> prefixes) {
  return [prefixes](const std::string& id) {
    for (const auto& p : prefixes)
      if (starts(id, p)) return true;
    return false;
  };
}

struct Criterion {
  int number;
  std::string title;
  int checked = 0;
  bool ok = true;
  std::vector<std::string> notes;

  void add(const ScenarioResult& r, const std::string& label, const Filter& keep) {
    if (r.numerical_failure) {
      ok = false;
      for (const auto& d : r.diagnostics) notes.push_back(label + ": " + d);
    }
    for (const auto& rep : r.reports) {
      if (!keep(rep.check_id)) continue;
      ++checked;
      if (!rep.pass()) {
        ok = false;
        std::ostringstream os;
        os << label << ": " << rep.check_id << " relative " << rep.relative() << " > " << rep.tolerance;
        notes.push_back(os.str());
      }
    }
  }

  bool print() const {
    const bool pass = ok && checked > 0;
    std::cout << "criterion " << number << ": " << (pass ? "PASS" : "FAIL") << "  " << title << " ("
              << checked << " checks)\n";
    for (const auto& n : notes) std::cout << "    " << n << "\n";
    return pass;
  }
};

ScenarioResult timed(const RunConfig& cfg, const std::string& sub) {
  std::cout << "running " << sub << " (a=" << cfg.a << ", b=" << cfg.b << ")" << std::endl;
  return run_scenario(cfg, sub);
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

}  // namespace

int main() {
  RunConfig half;
  RunConfig skew;
  skew.a = 0.3;
  skew.b = 0.7;

  const ScenarioResult kernel_half = timed(half, "verify-kernel");
  const ScenarioResult kernel_skew = timed(skew, "verify-kernel");
  const ScenarioResult jumps = timed(half, "verify-jumps");
  const ScenarioResult bc = timed(half, "verify-bc");
  const ScenarioResult newton = timed(half, "verify-newton");
  const ScenarioResult higher = timed(half, "verify-higher");

  std::vector<Criterion> cs;
  cs.push_back({1, "group law, left invariance, commutator and frame identity"});
  cs.back().add(kernel_half, "a=b=1/2", any_of({"group-law", "frame-identity", "left-invariance", "commutator"}));

  cs.push_back({2, "kernel homogeneity and annihilation for (1/2,1/2) and (0.3,0.7)"});
  cs.back().add(kernel_half, "a=b=1/2", any_of({"homogeneity", "annihilation"}));
  cs.back().add(kernel_skew, "a=0.3", any_of({"homogeneity", "annihilation"}));

  cs.push_back({3, "Gauss identity across surfaces and points, exterior points"});
  cs.back().add(kernel_half, "a=b=1/2", any_of({"gauss-"}));
  cs.back().add(kernel_skew, "a=0.3", any_of({"gauss-"}));

  cs.push_back({4, "jump relations at 16 probes and the residual identity"});
  cs.back().add(jumps, "jumps", any_of({"jump-"}));

  cs.push_back({5, "first boundary condition, refinement decrease, constant control"});
  cs.back().add(bc, "bc", any_of({"bc-first"}));

  cs.push_back({6, "representation formula and interior identity at 8 probes"});
  cs.back().add(newton, "newton", any_of({"representation", "interior-identity"}));

  cs.push_back({7, "order-one bump round trip"});
  cs.back().add(newton, "newton", any_of({"roundtrip-m1"}));

  cs.push_back({8, "iterated kernel, order-two boundary conditions, order-two round trip"});
  cs.back().add(higher, "higher", any_of({"iterated-kernel", "bc-higher", "roundtrip-m2"}));

  cs.push_back({9, "gauge sphere characteristic points are the two poles"});
  cs.back().add(kernel_half, "a=b=1/2", any_of({"characteristic-points"}));

  // Determinism: every subcommand except the slow order-two one, twice, in
  // fresh processes.
  Criterion det{10, "byte-identical results.csv and tables.csv across two runs"};
  const auto root = std::filesystem::temp_directory_path() / ("hpot_acceptance_" + std::to_string(::getpid()));
  for (const std::string sub : {"verify-kernel", "verify-jumps", "verify-bc", "verify-newton",
                                "profile-half-residue"}) {
    std::string first;
    std::string tables;
    for (int run = 0; run < 2; ++run) {
      const auto out = root / (sub + "-" + std::to_string(run));
      const std::string cmd = std::string(HPOTENTIAL_EXE) + " " + sub + " --out " + out.string() + " > /dev/null 2>&1";
      std::cout << "running hpotential " << sub << " (run " << run + 1 << ")" << std::endl;
      const int status = std::system(cmd.c_str());
      if (status == -1 || !std::filesystem::exists(out / "results.csv")) {
        det.ok = false;
        det.notes.push_back(sub + ": no results.csv");
        continue;
      }
      const std::string csv = slurp(out / "results.csv"), tab = slurp(out / "tables.csv");
      if (run == 0) {
        first = csv;
        tables = tab;
      } else {
        ++det.checked;
        if (csv != first || tab != tables) {
          det.ok = false;
          det.notes.push_back(sub + ": outputs differ between runs");
        }
      }
    }
  }
  std::filesystem::remove_all(root);
  cs.push_back(det);

  std::cout << "\n";
  int failed = 0;
  for (const auto& c : cs) failed += c.print() ? 0 : 1;
  std::cout << "\n" << cs.size() - failed << " of " << cs.size() << " criteria pass\n";
  return failed == 0 ? 0 : 1;
}
