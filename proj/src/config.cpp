#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include "lowmach/field_io.hpp"
#include "lowmach/harness.hpp"

namespace lowmach {

namespace {

std::string join_errors(const std::vector<std::string>& errs) {
  std::string m = "invalid configuration:";
  for (const auto& e : errs) m += "\n  - " + e;
  return m;
}

}  // namespace

ConfigError::ConfigError(std::vector<std::string> errs) : std::runtime_error(join_errors(errs)), errors(std::move(errs)) {}

ConfigReader::ConfigReader(nlohmann::json j, std::string where, std::vector<std::string>* errs)
    : j_(std::move(j)), where_(std::move(where)), errs_(errs) {
  if (j_.is_null()) j_ = nlohmann::json::object();
  if (!j_.is_object()) {
    error("must be a JSON object");
    j_ = nlohmann::json::object();
  }
}

std::string ConfigReader::path(const std::string& key) const { return where_.empty() ? key : where_ + "." + key; }

void ConfigReader::error(const std::string& msg) { errs_->push_back((where_.empty() ? "config" : where_) + ": " + msg); }

bool ConfigReader::has(const std::string& key) const { return j_.contains(key); }

const nlohmann::json* ConfigReader::find(const std::string& key) {
  used_.insert(key);
  auto it = j_.find(key);
  return it == j_.end() ? nullptr : &*it;
}

const nlohmann::json& ConfigReader::raw(const std::string& key) {
  static const nlohmann::json null;
  const nlohmann::json* v = find(key);
  return v ? *v : null;
}

double ConfigReader::number(const std::string& key, double def) {
  const nlohmann::json* v = find(key);
  if (!v) return def;
  if (!v->is_number()) {
    errs_->push_back(path(key) + ": expected a number");
    return def;
  }
  return v->get<double>();
}

double ConfigReader::extended(const std::string& key, double def) {
  const nlohmann::json* v = find(key);
  if (!v) return def;
  if (v->is_string() && v->get<std::string>() == "inf") return std::numeric_limits<double>::infinity();
  if (!v->is_number()) {
    errs_->push_back(path(key) + ": expected a number or \"inf\"");
    return def;
  }
  return v->get<double>();
}

int ConfigReader::integer(const std::string& key, int def) {
  const nlohmann::json* v = find(key);
  if (!v) return def;
  if (!v->is_number_integer()) {
    errs_->push_back(path(key) + ": expected an integer");
    return def;
  }
  return v->get<int>();
}

std::uint64_t ConfigReader::unsigned64(const std::string& key, std::uint64_t def) {
  const nlohmann::json* v = find(key);
  if (!v) return def;
  if (!v->is_number_unsigned()) {
    errs_->push_back(path(key) + ": expected a non-negative integer");
    return def;
  }
  return v->get<std::uint64_t>();
}

bool ConfigReader::flag(const std::string& key, bool def) {
  const nlohmann::json* v = find(key);
  if (!v) return def;
  if (!v->is_boolean()) {
    errs_->push_back(path(key) + ": expected true or false");
    return def;
  }
  return v->get<bool>();
}

std::string ConfigReader::text(const std::string& key, const std::string& def) {
  const nlohmann::json* v = find(key);
  if (!v) return def;
  if (!v->is_string()) {
    errs_->push_back(path(key) + ": expected a string");
    return def;
  }
  return v->get<std::string>();
}

std::vector<double> ConfigReader::numbers(const std::string& key, const std::vector<double>& def) {
  const nlohmann::json* v = find(key);
  if (!v) return def;
  bool ok = v->is_array();
  if (ok)
    for (const auto& x : *v) ok = ok && x.is_number();
  if (!ok) {
    errs_->push_back(path(key) + ": expected an array of numbers");
    return def;
  }
  return v->get<std::vector<double>>();
}

std::vector<std::string> ConfigReader::texts(const std::string& key, const std::vector<std::string>& def) {
  const nlohmann::json* v = find(key);
  if (!v) return def;
  bool ok = v->is_array();
  if (ok)
    for (const auto& x : *v) ok = ok && x.is_string();
  if (!ok) {
    errs_->push_back(path(key) + ": expected an array of strings");
    return def;
  }
  return v->get<std::vector<std::string>>();
}

ConfigReader ConfigReader::section(const std::string& key) {
  const nlohmann::json* v = find(key);
  return ConfigReader(v ? *v : nlohmann::json::object(), path(key), errs_);
}

ConfigReader ConfigReader::nested(const nlohmann::json& j, const std::string& label) const {
  return ConfigReader(j, path(label), errs_);
}

void ConfigReader::reject_unknown() {
  for (auto it = j_.begin(); it != j_.end(); ++it)
    if (!used_.count(it.key())) errs_->push_back(path(it.key()) + ": unknown or unused key");
}

PhysicalParams read_physics(ConfigReader r) {
  PhysicalParams p;
  p.mu = r.number("mu", p.mu);
  p.mu_prime = r.number("mu_prime", p.mu_prime);
  p.rho_inf = r.number("rho_inf", p.rho_inf);
  const std::string law = r.text("pressure", "quadratic");
  const double a = r.number("a", 1.0), g = r.number("gamma", 1.4);
  try {
    p.pressure = PressureLaw::parse(law, a, g);
    p.validate();
  } catch (const std::invalid_argument& e) {
    r.error(e.what());
  }
  r.reject_unknown();
  return p;
}

StepControl read_step_control(ConfigReader r, const StepControl& def) {
  StepControl c = def;
  c.atol = r.number("atol", c.atol);
  c.rtol = r.number("rtol", c.rtol);
  c.dt_max = r.number("dt_max", c.dt_max);
  c.dt_min = r.number("dt_min", c.dt_min);
  c.max_steps = r.integer("max_steps", c.max_steps);
  if (!(c.atol >= 0.0) || !(c.rtol >= 0.0) || c.atol + c.rtol == 0.0)
    r.error("atol and rtol must be >= 0, not both zero");
  if (!(c.dt_max > 0.0) || !(c.dt_min > 0.0) || c.dt_min > c.dt_max) r.error("requires 0 < dt_min <= dt_max");
  if (c.max_steps < 1) r.error("max_steps must be positive");
  return c;
}

void check_rate_eps_list(ConfigReader& r, const std::vector<double>& eps) {
  if (eps.size() < 4) {
    r.error("eps_list needs at least 4 entries for a rate fit, got " + std::to_string(eps.size()));
    return;
  }
  for (double e : eps)
    if (!(e > 0.0 && e <= 1.0)) {
      r.error("eps_list entries must lie in (0, 1]");
      return;
    }
  const double q = eps[1] / eps[0];
  for (std::size_t i = 2; i < eps.size(); ++i)
    if (std::abs(eps[i] / eps[i - 1] - q) > 1e-9 * q) {
      r.error("eps_list must be geometric");
      return;
    }
}

nlohmann::json load_config_file(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw IoError("cannot read config " + path);
  std::stringstream ss;
  ss << is.rdbuf();
  try {
    return nlohmann::json::parse(ss.str());
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError({path + ": " + e.what()});
  }
}

}  // namespace lowmach
