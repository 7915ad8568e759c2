#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>

#include "hpot/cli.hpp"
#include "json.hpp"

namespace hpot::cli {

namespace {

using nlohmann::ordered_json;

void require_plain_id(const std::string& id) {
  if (id.find_first_of(",\n\r\"") != std::string::npos)
    throw std::invalid_argument("check id must not contain commas, quotes or newlines: " + id);
}

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : line) {
    if (ch == sep) {
      out.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(ch);
    }
  }
  out.push_back(cur);
  return out;
}

double parse_number(const std::string& s) {
  if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
  if (s == "inf") return std::numeric_limits<double>::infinity();
  if (s == "-inf") return -std::numeric_limits<double>::infinity();
  std::size_t used = 0;
  const double v = std::stod(s, &used);
  if (used != s.size()) throw std::invalid_argument("malformed number '" + s + "'");
  return v;
}

// JSON has no NaN or infinity; those become null.
ordered_json number(double v) { return std::isfinite(v) ? ordered_json(v) : ordered_json(nullptr); }

ordered_json report_json(const ResidualReport& r) {
  return {{"check_id", r.check_id},
          {"probe", {number(r.probe.x()), number(r.probe.y()), number(r.probe.t())}},
          {"residual", {number(r.residual.real()), number(r.residual.imag())}},
          {"normalization", number(r.normalization)},
          {"error_estimate", number(r.error_estimate)},
          {"tolerance", number(r.tolerance)},
          {"pass", r.pass()}};
}

ordered_json table_json(const ConvergenceTable& t) {
  ordered_json rows = ordered_json::array();
  for (const auto& row : t.rows)
    rows.push_back({{"resolution", number(row.resolution)},
                    {"residual", number(row.residual)},
                    {"order", number(row.order)}});
  return {{"check_id", t.check_id},
          {"rows", rows},
          {"strictly_decreasing", t.strictly_decreasing()},
          {"diagnostic", t.diagnostic}};
}

}  // namespace

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string results_csv(const std::vector<ResidualReport>& reports) {
  std::ostringstream os;
  os << kCsvHeader << '\n';
  for (const auto& r : reports) {
    require_plain_id(r.check_id);
    os << r.check_id << ',' << format_double(r.probe.x()) << ',' << format_double(r.probe.y())
       << ',' << format_double(r.probe.t()) << ',' << format_double(r.residual.real()) << ','
       << format_double(r.residual.imag()) << ',' << format_double(r.normalization) << ','
       << format_double(r.error_estimate) << ',' << (r.pass() ? "true" : "false") << '\n';
  }
  return os.str();
}

std::vector<CsvRow> parse_results_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || line != kCsvHeader)
    throw std::invalid_argument("results CSV: missing or wrong header");
  std::vector<CsvRow> rows;
  int number = 1;
  while (std::getline(in, line)) {
    ++number;
    if (line.empty()) continue;
    const auto f = split(line, ',');
    if (f.size() != 9)
      throw std::invalid_argument("results CSV line " + std::to_string(number) + ": expected 9 fields");
    CsvRow r;
    try {
      r.check_id = f[0];
      r.probe_x = parse_number(f[1]);
      r.probe_y = parse_number(f[2]);
      r.probe_t = parse_number(f[3]);
      r.residual_re = parse_number(f[4]);
      r.residual_im = parse_number(f[5]);
      r.normalization = parse_number(f[6]);
      r.error_estimate = parse_number(f[7]);
    } catch (const std::exception& e) {
      throw std::invalid_argument("results CSV line " + std::to_string(number) + ": " + e.what());
    }
    if (f[8] != "true" && f[8] != "false")
      throw std::invalid_argument("results CSV line " + std::to_string(number) + ": bad pass flag");
    r.pass = f[8] == "true";
    rows.push_back(r);
  }
  return rows;
}

std::string tables_csv(const std::vector<ConvergenceTable>& tables) {
  std::ostringstream os;
  os << "check_id,index,resolution,residual,order\n";
  for (const auto& t : tables) {
    require_plain_id(t.check_id);
    for (std::size_t k = 0; k < t.rows.size(); ++k)
      os << t.check_id << ',' << k << ',' << format_double(t.rows[k].resolution) << ','
         << format_double(t.rows[k].residual) << ',' << format_double(t.rows[k].order) << '\n';
  }
  return os.str();
}

std::string convergence_svg(const ConvergenceTable& table) {
  if (table.rows.empty()) throw std::invalid_argument("cannot plot an empty table");
  constexpr double W = 480, H = 320, L = 70, R = 20, T = 30, B = 50;
  std::vector<double> ys;
  for (const auto& row : table.rows)
    ys.push_back(std::log10(std::max(std::abs(row.residual), 1e-300)));
  double lo = *std::min_element(ys.begin(), ys.end());
  double hi = *std::max_element(ys.begin(), ys.end());
  if (hi - lo < 1e-12) {
    lo -= 0.5;
    hi += 0.5;
  }
  const std::size_t n = table.rows.size();
  auto px = [&](std::size_t k) { return n == 1 ? L + (W - L - R) / 2 : L + (W - L - R) * k / (n - 1.0); };
  auto py = [&](double y) { return T + (H - T - B) * (hi - y) / (hi - lo); };
  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H
     << "\" viewBox=\"0 0 " << W << ' ' << H << "\">\n";
  os << "<title>" << table.check_id << "</title>\n";
  os << "<line x1=\"" << L << "\" y1=\"" << H - B << "\" x2=\"" << W - R << "\" y2=\"" << H - B
     << "\" stroke=\"black\"/>\n";
  os << "<line x1=\"" << L << "\" y1=\"" << T << "\" x2=\"" << L << "\" y2=\"" << H - B
     << "\" stroke=\"black\"/>\n";
  os << "<text x=\"" << (L + W - R) / 2 << "\" y=\"" << H - 12
     << "\" text-anchor=\"middle\">refinement index</text>\n";
  os << "<text x=\"16\" y=\"" << (T + H - B) / 2 << "\" text-anchor=\"middle\" transform=\"rotate(-90 16 "
     << (T + H - B) / 2 << ")\">log10 |residual|</text>\n";
  for (std::size_t k = 0; k < n; ++k)
    os << "<text x=\"" << px(k) << "\" y=\"" << H - B + 16 << "\" text-anchor=\"middle\">" << k
       << "</text>\n";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.2f", hi);
  os << "<text x=\"" << L - 6 << "\" y=\"" << T + 4 << "\" text-anchor=\"end\">" << buf << "</text>\n";
  std::snprintf(buf, sizeof buf, "%.2f", lo);
  os << "<text x=\"" << L - 6 << "\" y=\"" << H - B + 4 << "\" text-anchor=\"end\">" << buf
     << "</text>\n";
  os << "<polyline fill=\"none\" stroke=\"steelblue\" stroke-width=\"2\" points=\"";
  for (std::size_t k = 0; k < n; ++k) {
    std::snprintf(buf, sizeof buf, "%.3f,%.3f", px(k), py(ys[k]));
    os << (k ? " " : "") << buf;
  }
  os << "\"/>\n</svg>\n";
  return os.str();
}

std::string reports_json(const std::vector<ResidualReport>& reports) {
  ordered_json arr = ordered_json::array();
  for (const auto& r : reports) arr.push_back(report_json(r));
  return arr.dump(2) + "\n";
}

std::string manifest_json(const RunConfig& cfg, const ScenarioResult& result,
                          const ManifestInfo& info) {
  ordered_json config = ordered_json::object();
  for (const auto& [k, v] : describe(cfg)) config[k] = v;

  // Per check id: number of reports and how many pass, in first-seen order.
  ordered_json checks = ordered_json::array();
  std::vector<std::string> order;
  std::map<std::string, std::pair<int, int>> counts;
  for (const auto& r : result.reports) {
    if (!counts.count(r.check_id)) order.push_back(r.check_id);
    auto& c = counts[r.check_id];
    ++c.first;
    c.second += r.pass() ? 1 : 0;
  }
  int passed = 0;
  for (const auto& id : order) {
    const auto& c = counts[id];
    checks.push_back({{"check_id", id}, {"reports", c.first}, {"passed", c.second},
                      {"pass", c.first == c.second}});
    passed += c.first == c.second ? 1 : 0;
  }
  ordered_json tables = ordered_json::array();
  for (const auto& t : result.tables) tables.push_back(table_json(t));

  ordered_json m;
  m["tool"] = "hpotential";
  m["version"] = version();
  m["subcommand"] = info.subcommand;
  m["config"] = config;
  m["started"] = info.started;
  m["finished"] = info.finished;
  m["exit_code"] = info.exit_code;
  m["summary"] = {{"checks", order.size()},
                  {"passed", passed},
                  {"failed", static_cast<int>(order.size()) - passed},
                  {"all_pass", result.all_pass()},
                  {"numerical_failure", result.numerical_failure}};
  m["checks"] = checks;
  m["tables"] = tables;
  m["diagnostics"] = result.diagnostics;
  return m.dump(2) + "\n";
}

void write_atomic(const std::filesystem::path& path, const std::string& content) {
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open '" + tmp.string() + "' for writing");
    out << content;
    out.flush();
    if (!out) throw std::runtime_error("write failed for '" + tmp.string() + "'");
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp);
    throw std::runtime_error("cannot rename '" + tmp.string() + "' to '" + path.string() +
                             "': " + ec.message());
  }
}

void write_artifacts(const RunConfig& cfg, const ScenarioResult& result, const ManifestInfo& info) {
  const std::filesystem::path dir(cfg.out);
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw std::runtime_error("cannot create output directory '" + dir.string() + "': " + ec.message());
  write_atomic(dir / "results.csv", results_csv(result.reports));
  write_atomic(dir / "tables.csv", tables_csv(result.tables));
  for (const auto& t : result.tables)
    if (!t.rows.empty()) {
      write_atomic(dir / "plot.svg", convergence_svg(t));
      break;
    }
  for (const auto& [name, content] : result.extra_files) write_atomic(dir / name, content);
  write_atomic(dir / "manifest.json", manifest_json(cfg, result, info));
}

std::string version() { return "0.1.0"; }

}  // namespace hpot::cli
