#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include "lowmach/harness.hpp"

namespace lowmach {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

std::string num(const json& v) {
  if (!v.is_number()) return "n/a";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v.get<double>());
  return buf;
}

const char* estimate_of(const std::string& suite) {
  static const std::map<std::string, const char*> m{
      {"stationary", "stationary low-Mach limit"},
      {"evolve", "perturbation evolution"},
      {"dispersive", "dispersive decay of the acoustic group"},
      {"strichartz", "homogeneous acoustic Strichartz rate"},
      {"duhamel", "inhomogeneous acoustic Strichartz rate"},
      {"localized", "frequency-localized damped decay"},
      {"besov-check", "product, commutator and composition bounds"},
      {"low-mach", "low-Mach convergence rate"},
      {"time-decay", "large-time decay rate"}};
  auto it = m.find(suite);
  return it == m.end() ? "unknown" : it->second;
}

}  // namespace

int emit_report(const std::string& dir_in, std::ostream& log) {
  const fs::path dir = dir_in;
  std::vector<fs::path> files;
  try {
    if (!fs::is_directory(dir)) {
      log << "report: " << dir_in << " is not a directory\n";
      return kExitIo;
    }
    for (const auto& e : fs::recursive_directory_iterator(dir))
      if (e.is_regular_file() && e.path().filename() == "summary.json") files.push_back(e.path());
  } catch (const fs::filesystem_error& e) {
    log << "report: " << e.what() << "\n";
    return kExitIo;
  }
  std::sort(files.begin(), files.end());

  std::ostringstream md;
  md << "# Results\n\n| suite | estimate | check | target | measured | tolerance | status |\n"
     << "|---|---|---|---|---|---|---|\n";
  std::vector<std::string> corrupt;
  int rows = 0, fails = 0;
  for (const fs::path& p : files) {
    json s;
    try {
      std::ifstream is(p);
      s = json::parse(is);
      if (!s.is_object() || !s.contains("suite") || !s["suite"].is_string() || !s.contains("checks") ||
          !s["checks"].is_array())
        throw std::runtime_error("missing suite or checks");
      for (const json& c : s["checks"])
        if (!c.is_object() || !c.contains("name") || !c.contains("pass") || !c["pass"].is_boolean())
          throw std::runtime_error("malformed check entry");
    } catch (const std::exception& e) {
      corrupt.push_back(fs::relative(p, dir).string() + ": " + e.what());
      continue;
    }
    const std::string suite = s["suite"];
    for (const json& c : s["checks"]) {
      const bool ok = c["pass"].get<bool>();
      const bool window = c.value("kind", "window") == "window";
      md << "| " << suite << " | " << estimate_of(suite) << " | " << c["name"].get<std::string>() << " | "
         << (window ? num(c.value("target", json())) : "-") << " | " << num(c.value("measured", json())) << " | "
         << (window ? "+- " : "<= ") << num(c.value("tolerance", json())) << " | " << (ok ? "PASS" : "FAIL") << " |\n";
      ++rows;
      if (!ok) ++fails;
    }
  }
  if (!corrupt.empty()) {
    md << "\n## Unreadable summaries\n\n";
    for (const auto& c : corrupt) md << "- " << c << "\n";
  }
  const std::string text = md.str();
  {
    std::ofstream os(dir / "report.md");
    os << text;
    if (!os) {
      log << "report: cannot write " << (dir / "report.md").string() << "\n";
      return kExitIo;
    }
  }
  log << text << rows << " checks, " << fails << " failed, " << corrupt.size() << " unreadable\n";
  if (!corrupt.empty()) return kExitIo;
  return fails ? kExitFail : kExitPass;
}

}  // namespace lowmach
