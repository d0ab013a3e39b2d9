#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>

#include <unsupported/Eigen/MatrixFunctions>

#include "lowmach/acoustic.hpp"
#include "lowmach/evolution.hpp"
#include "lowmach/field_io.hpp"
#include "lowmach/field_ops.hpp"
#include "lowmach/harness.hpp"

using namespace lowmach;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

const fs::path kConfigs = fs::path(LOWMACH_SOURCE_DIR) / "configs";
const fs::path kOut = "acceptance_results";

std::string g6(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4g", x);
  return buf;
}

std::string slurp(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  std::stringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

struct Verdict {
  bool pass = false;
  std::string detail;
};

// Runs a suite from configs/ and returns its summary; log lines are kept quiet.
json run_config(const std::string& file, const std::string& suite, const std::string& tag) {
  std::ostringstream log;
  const json cfg = load_config_file((kConfigs / file).string());
  const int code = run_suite(cfg, suite, (kOut / tag).string(), {}, {}, log);
  if (code == kExitConfig || code == kExitIo) throw std::runtime_error(log.str());
  return json::parse(slurp(kOut / tag / "summary.json"));
}

const json& check_of(const json& s, const std::string& name) {
  for (const json& c : s["checks"])
    if (c["name"] == name) return c;
  throw std::runtime_error("summary has no check " + name);
}

double measured(const json& s, const std::string& name) {
  const json& m = check_of(s, name)["measured"];
  return m.is_number() ? m.get<double>() : NAN;
}

std::string describe(const json& s) {
  std::string d;
  for (const json& c : s["checks"]) {
    d += (d.empty() ? "" : ", ") + c["name"].get<std::string>() + "=" +
         (c["measured"].is_number() ? g6(c["measured"].get<double>()) : std::string("n/a"));
    if (c["kind"] == "window") d += " (target " + g6(c["target"]) + " +- " + g6(c["tolerance"]) + ")";
    else d += " (<= " + g6(c["tolerance"]) + ")";
  }
  return d;
}

Verdict suite_verdict(const json& s) { return {s["pass"].get<bool>(), describe(s)}; }

// ---------------------------------------------------------------------------

Verdict semigroup_oracle() {
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> U(0.0, 1.0);
  std::normal_distribution<double> N(0.0, 1.0);
  double worst = 0.0;
  int band = 0;
  for (int k = 0; k < 1000; ++k) {
    const double eps = std::exp(std::log(1e-3) + U(rng) * std::log(1e3));
    const double mu0 = std::exp(std::log(0.25) + U(rng) * std::log(16.0));
    double kn;
    if (k % 4 == 0) {
      kn = (1.0 + (2.0 * U(rng) - 1.0) * (k % 8 == 0 ? 1e-7 : 3e-3)) / (eps * mu0);
      ++band;
    } else kn = std::exp(std::log(0.05) + U(rng) * std::log(200.0));
    const double t = std::min(10.0 * U(rng), 200.0 * eps / kn);
    Vec3 xi{N(rng), N(rng), N(rng)};
    const double r = std::sqrt(xi[0] * xi[0] + xi[1] * xi[1] + xi[2] * xi[2]);
    for (double& x : xi) x *= kn / r;
    const Mat4 oracle = (symbol_matrix(xi, eps, mu0) * t).exp();
    worst = std::max(worst, (propagator_mode(xi, t, eps, mu0) - oracle).cwiseAbs().maxCoeff());
  }
  return {worst < 1e-9, "max entry error " + g6(worst) + " over 1000 samples (" + std::to_string(band) +
                            " in the degeneracy band), tolerance 1e-9"};
}

Verdict integrator_order() {
  const Grid g(16, 2 * M_PI);
  PhysicalParams prm;
  prm.rho_inf = 1.3;
  prm.mu = 0.7;
  prm.mu_prime = 0.2;
  prm.pressure = PressureLaw::gamma_law(1.1, 1.4);
  auto smooth = [&](int m, std::uint64_t seed, double amp) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> d(0.0, 1.0);
    SpectralField f(g, m);
    for (int c = 0; c < m; ++c)
      for (std::size_t i = 1; i < g.size(); ++i) {
        const auto k = g.mode_k(i);
        const double a = d(rng), b = d(rng);
        if (!g.is_nyquist(i) && std::abs(k[0]) <= 2 && std::abs(k[1]) <= 2 && std::abs(k[2]) <= 2)
          f.at(c, i) = cplx(a, b);
      }
    enforce_real(f);
    double mx = 0.0;
    for (const RealGrid& r : to_real_all(f))
      for (double x : r) mx = std::max(mx, std::abs(x));
    f *= amp / mx;
    return f;
  };
  auto maxdiff = [](const SpectralField& a, const SpectralField& b) {
    double m = 0.0;
    for (std::size_t i = 0; i < a.data().size(); ++i) m = std::max(m, std::abs(a.data()[i] - b.data()[i]));
    return m;
  };
  StationaryBackground bg = StationaryBackground::zero(g);
  bg.b_star = smooth(1, 11, 0.1);
  bg.v_star = smooth(3, 12, 0.1);
  bg.u_star = helmholtz_P(smooth(3, 13, 0.1));
  const PerturbationState s0{smooth(1, 81, 0.2), smooth(3, 82, 0.2), 0.0};

  StepControl loose;
  loose.atol = loose.rtol = 1.0;
  auto run = [&](int steps) {
    PerturbationState s = s0;
    for (int k = 0; k < steps; ++k) s = step_compressible(s, bg, 0.5, 0.4 / steps, prm, loose);
    return s;
  };
  const PerturbationState ref = run(256);
  std::vector<double> err;
  for (int n : {4, 8, 16}) {
    const PerturbationState s = run(n);
    err.push_back(std::max(maxdiff(s.sigma, ref.sigma), maxdiff(s.w, ref.w)));
  }
  const double q1 = err[0] / err[1], q2 = err[1] / err[2];

  // Linear step against the exact propagators.
  StepControl lin;
  lin.nonlinear_scale = 0.0;
  double lin_err = 0.0;
  for (double eps : {0.5, 1.0 / 16})
    for (double h : {0.01, 0.3}) {
      const PerturbationState out = step_compressible(s0, bg, eps, h, prm, lin);
      SpectralField v(g, 4);
      SpectralField a = s0.sigma;
      a *= prm.gamma2();
      const SpectralField qw = helmholtz_Q(s0.w);
      v.set_component(0, a.component(0));
      for (int c = 0; c < 3; ++c) v.set_component(1 + c, qw.component(c));
      const SpectralField ac = apply_acoustic(v, h, eps / prm.gamma(), prm.acoustic_mu0());
      SpectralField es(g, 1), ew = apply_heat(helmholtz_P(s0.w), h, prm.heat_nu());
      es.set_component(0, ac.component(0));
      es *= 1.0 / prm.gamma2();
      SpectralField tail(g, 3);
      for (int c = 0; c < 3; ++c) tail.set_component(c, ac.component(1 + c));
      ew += tail;
      lin_err = std::max({lin_err, maxdiff(out.sigma, es), maxdiff(out.w, ew)});
    }
  const bool ok = q1 >= 3.0 && q1 <= 5.0 && q2 >= 3.0 && q2 <= 5.0 && lin_err < 1e-12;
  return {ok, "step-doubling ratios " + g6(q1) + ", " + g6(q2) + " (in [3, 5]); linear step vs exact propagators " +
                  g6(lin_err) + " (< 1e-12)"};
}

Verdict duhamel_pair() {
  const json p4 = run_config("duhamel_p4.json", "duhamel", "duhamel_p4");
  const json p2 = run_config("duhamel_p2.json", "duhamel", "duhamel_p2");
  return {p4["pass"].get<bool>() && p2["pass"].get<bool>(), "p=4: " + describe(p4) + "; p=2: " + describe(p2)};
}

Verdict stationary_limit() {
  const json s = run_config("stationary.json", "stationary", "stationary");
  return suite_verdict(s);
}

Verdict low_mach() {
  const json s = run_config("low-mach.json", "low-mach", "low-mach");
  const json& r = s["result"];
  std::string extra = "; hypotheses hold: " + std::string(r.value("hypotheses_hold", false) ? "yes" : "no");
  if (r.contains("lp_fit") && r["lp_fit"].value("slope", json()).is_number())
    extra += ", L^p sum slope " + g6(r["lp_fit"]["slope"].get<double>());
  return {s["pass"].get<bool>(), describe(s) + extra};
}

Verdict time_decay() {
  const json a = run_config("time-decay-s05.json", "time-decay", "time-decay-s05");
  const json b = run_config("time-decay-s1.json", "time-decay", "time-decay-s1");
  return {a["pass"].get<bool>() && b["pass"].get<bool>(), "s=1/2: " + describe(a) + "; s=1: " + describe(b)};
}

Verdict determinism() {
  std::ostringstream log;
  bool same = true;
  std::string d;
  for (const auto& [file, suite] : std::vector<std::pair<std::string, std::string>>{
           {"evolve.json", "evolve"}, {"dispersive.json", "dispersive"}}) {
    json cfg = load_config_file((kConfigs / file).string());
    if (suite == "evolve") cfg["grid"] = {{"n", 16}, {"L", 16.0}};
    std::string first;
    for (const char* tag : {"a", "b"}) {
      const fs::path dir = kOut / "determinism" / (suite + "_" + tag);
      run_suite(cfg, suite, dir.string(), 7, {}, log);
      const std::string csv = slurp(dir / (suite + ".csv"));
      if (csv.empty()) same = false;
      if (*tag == 'a') first = csv;
      else same = same && csv == first;
    }
    d += (d.empty() ? "" : ", ") + suite + " " + std::to_string(first.size()) + " bytes";
  }
  // Worker count must not change the bytes either.
  json bs = load_config_file((kConfigs / "besov-check.json").string());
  bs["grid"]["n"] = 8;
  bs["options"]["members"] = 8;
  run_suite(bs, "besov-check", (kOut / "determinism" / "besov_1").string(), 7, 1, log);
  run_suite(bs, "besov-check", (kOut / "determinism" / "besov_5").string(), 7, 5, log);
  const std::string b1 = slurp(kOut / "determinism" / "besov_1" / "besov-check.csv");
  same = same && !b1.empty() && b1 == slurp(kOut / "determinism" / "besov_5" / "besov-check.csv");
  return {same, "byte-identical reruns: " + d + ", besov-check with 1 vs 5 workers " + std::to_string(b1.size()) +
                    " bytes"};
}

}  // namespace

int main() {
  fs::create_directories(kOut);
  const std::vector<std::pair<std::string, std::function<Verdict()>>> criteria{
      {"semigroup oracle equivalence", semigroup_oracle},
      {"dispersive estimate", [] { return suite_verdict(run_config("dispersive.json", "dispersive", "dispersive")); }},
      {"Strichartz rate", [] { return suite_verdict(run_config("strichartz.json", "strichartz", "strichartz")); }},
      {"Duhamel rate", duhamel_pair},
      {"stationary convergence", stationary_limit},
      {"low-Mach rate", low_mach},
      {"time decay", time_decay},
      {"Besov estimate suites", [] { return suite_verdict(run_config("besov-check.json", "besov-check", "besov-check")); }},
      {"integrator order", integrator_order},
      {"determinism", determinism}};
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const auto t0 = std::chrono::steady_clock::now();
    Verdict v;
    try {
      v = criteria[i].second();
    } catch (const std::exception& e) {
      v = {false, std::string("error: ") + e.what()};
    }
    const double dt = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::cout << (v.pass ? "PASS" : "FAIL") << "  " << (i + 1) << ". " << criteria[i].first << ": " << v.detail << " ["
              << g6(dt) << " s]" << std::endl;
    if (!v.pass) ++failed;
  }
  std::ostringstream log;
  emit_report(kOut.string(), log);
  std::cout << (criteria.size() - failed) << "/" << criteria.size() << " criteria pass" << std::endl;
  return failed ? 1 : 0;
}
