#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <ostream>
#include <set>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "lowmach/evolution.hpp"
#include "lowmach/physics.hpp"

namespace lowmach {

enum ExitCode : int { kExitPass = 0, kExitFail = 1, kExitConfig = 2, kExitIo = 3 };

struct ConfigError : std::runtime_error {
  explicit ConfigError(std::vector<std::string> errs);
  std::vector<std::string> errors;
};

// Typed access to one JSON object of a config. Missing keys give the
// default; type errors and unknown keys are collected, not thrown.
class ConfigReader {
public:
  ConfigReader(nlohmann::json j, std::string where, std::vector<std::string>* errs);

  bool has(const std::string& key) const;
  double number(const std::string& key, double def);
  // Also accepts the string "inf".
  double extended(const std::string& key, double def);
  int integer(const std::string& key, int def);
  std::uint64_t unsigned64(const std::string& key, std::uint64_t def);
  bool flag(const std::string& key, bool def);
  std::string text(const std::string& key, const std::string& def);
  std::vector<double> numbers(const std::string& key, const std::vector<double>& def);
  std::vector<std::string> texts(const std::string& key, const std::vector<std::string>& def);
  ConfigReader section(const std::string& key);
  const nlohmann::json& raw(const std::string& key);
  // Reader over j sharing this reader's error list, labelled where.label.
  ConfigReader nested(const nlohmann::json& j, const std::string& label) const;

  void error(const std::string& msg);
  // Records every key that was never read as an error.
  void reject_unknown();
  const std::string& where() const { return where_; }

private:
  std::string path(const std::string& key) const;
  const nlohmann::json* find(const std::string& key);

  nlohmann::json j_;
  std::string where_;
  std::vector<std::string>* errs_;
  std::set<std::string> used_;
};

PhysicalParams read_physics(ConfigReader r);
StepControl read_step_control(ConfigReader r, const StepControl& def);
// Geometric, at least 4 entries, all in (0, 1].
void check_rate_eps_list(ConfigReader& r, const std::vector<double>& eps);

// Parses a config file; syntax errors are config errors, unreadable files I/O errors.
nlohmann::json load_config_file(const std::string& path);

// One acceptance test of a suite. window: |measured - target| <= tolerance;
// bound: measured <= tolerance.
struct Check {
  std::string name;
  enum class Kind { window, bound } kind = Kind::window;
  double target = 0.0, measured = 0.0, tolerance = 0.0;
  bool pass() const;
  nlohmann::json json() const;
};

struct SuiteOutcome {
  nlohmann::json result;
  std::string csv, plot;
  std::vector<Check> checks;
  // Optional field dumps, written as <name>.bin next to the summary.
  std::vector<std::pair<std::string, SpectralField>> fields;
  bool pass() const;
};

// A validated suite, ready to run.
struct SuitePlan {
  std::string suite;
  std::uint64_t seed = 1;
  int workers = 1;
  nlohmann::json config;
  std::function<SuiteOutcome()> run;
};

const std::vector<std::string>& suite_ids();
// Validates everything before any compute; ConfigError lists every problem.
SuitePlan plan_suite(const nlohmann::json& config, const std::string& suite,
                     std::optional<std::uint64_t> seed = std::nullopt, std::optional<int> workers = std::nullopt);
// Writes summary.json, <suite>.csv and <suite>.plot into out_dir. Returns an ExitCode.
int run_suite(const nlohmann::json& config, const std::string& suite, const std::string& out_dir,
              std::optional<std::uint64_t> seed, std::optional<int> workers, std::ostream& log);

// Collects every summary.json below dir into dir/report.md and log.
int emit_report(const std::string& dir, std::ostream& log);

}  // namespace lowmach
