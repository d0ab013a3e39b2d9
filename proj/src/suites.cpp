#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <thread>

#include "lowmach/acoustic_measure.hpp"
#include "lowmach/besov.hpp"
#include "lowmach/field_io.hpp"
#include "lowmach/field_ops.hpp"
#include "lowmach/harness.hpp"
#include "lowmach/stationary.hpp"

namespace lowmach {

using nlohmann::json;

bool Check::pass() const {
  if (!std::isfinite(measured)) return false;
  return kind == Kind::window ? std::abs(measured - target) <= tolerance : measured <= tolerance;
}

json Check::json() const {
  return {{"name", name},
          {"kind", kind == Kind::window ? "window" : "bound"},
          {"target", target},
          {"measured", std::isfinite(measured) ? nlohmann::json(measured) : nlohmann::json()},
          {"tolerance", tolerance},
          {"pass", pass()}};
}

bool SuiteOutcome::pass() const {
  return std::all_of(checks.begin(), checks.end(), [](const Check& c) { return c.pass(); });
}

namespace {

std::string fmt(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

std::string brief(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", x);
  return buf;
}

std::string row(std::initializer_list<double> v) {
  std::string s;
  for (double x : v) s += (s.empty() ? "" : ",") + fmt(x);
  return s + "\n";
}

std::string plot_row(std::initializer_list<double> v) {
  std::string s;
  for (double x : v) s += (s.empty() ? "" : " ") + fmt(x);
  return s + "\n";
}

// Plot-data file: gnuplot command and column names as comments.
std::string plot_header(const std::string& suite, const std::string& command, const std::string& columns) {
  return "# " + suite + " plot data\n# gnuplot: " + command + "\n# columns: " + columns + "\n";
}

template <class Fn>
void parallel_for(int n, int workers, Fn fn) {
  if (workers <= 1 || n <= 1) {
    for (int i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<int> next{0};
  std::vector<std::thread> pool;
  for (int k = 0; k < std::min(workers, n); ++k)
    pool.emplace_back([&] {
      for (int i; (i = next++) < n;) fn(i);
    });
  for (auto& t : pool) t.join();
}

// Declared checks with their config overrides; targets left empty are
// filled in at run time.
struct CheckSpec {
  std::string name;
  Check::Kind kind;
  std::optional<double> target;
  double tolerance;
};

class Acceptance {
public:
  explicit Acceptance(ConfigReader r) : r_(std::move(r)) {}
  CheckSpec declare(const std::string& name, Check::Kind kind, std::optional<double> target, double tol) {
    CheckSpec c{name, kind, target, tol};
    if (r_.has(name)) {
      ConfigReader o = r_.section(name);
      if (o.has("target")) c.target = o.number("target", 0.0);
      c.tolerance = o.number("tolerance", tol);
      if (!(c.tolerance >= 0.0)) o.error("tolerance must be >= 0");
      o.reject_unknown();
    }
    return c;
  }
  void finish() { r_.reject_unknown(); }

private:
  ConfigReader r_;
};

Check evaluate(const CheckSpec& c, double measured, double runtime_target = 0.0) {
  return {c.name, c.kind, c.target.value_or(runtime_target), measured, c.tolerance};
}

Grid read_grid(ConfigReader r, int n_def, double L_def) {
  const int n = r.integer("n", n_def);
  const double L = r.number("L", L_def);
  r.reject_unknown();
  try {
    return Grid(n, L);
  } catch (const std::invalid_argument& e) {
    r.error(e.what());
    return Grid(n_def, L_def);
  }
}

template <class Fn>
void capture(ConfigReader& r, Fn fn) {
  try {
    fn();
  } catch (const std::invalid_argument& e) {
    r.error(e.what());
  }
}

struct ForceSpec {
  double amplitude;
  int j_lo, j_hi;
};

ForceSpec read_force(ConfigReader r, const Grid& g, ForceSpec def) {
  ForceSpec f{r.number("amplitude", def.amplitude), r.integer("j_lo", def.j_lo), r.integer("j_hi", def.j_hi)};
  if (!(f.amplitude >= 0.0)) r.error("amplitude must be >= 0");
  FilterBank bank(g);
  if (f.j_lo > f.j_hi || !bank.has_block(f.j_lo) || !bank.has_block(f.j_hi))
    r.error("force shells " + std::to_string(f.j_lo) + ".." + std::to_string(f.j_hi) + " outside the grid's bank");
  r.reject_unknown();
  return f;
}

json sweep_json(const SweepResult& r) { return json::parse(sweep_summary_json(r, load_calibration())); }

// ---------------------------------------------------------------------------

void plan_dispersive(ConfigReader& top, Acceptance& acc, SuitePlan& plan) {
  DispersiveSpec sp;
  const Grid g = read_grid(top.section("grid"), sp.n, sp.L);
  sp.n = g.n();
  sp.L = g.L();
  ConfigReader o = top.section("options");
  sp.j = o.integer("j", sp.j);
  sp.eps = o.number("eps", sp.eps);
  sp.t_list = o.numbers("t_list", sp.t_list);
  if (!(sp.eps > 0.0 && sp.eps <= 1.0)) o.error("eps must lie in (0, 1]");
  if (!FilterBank(g).has_block(sp.j)) o.error("block j outside the grid's bank");
  for (double t : sp.t_list)
    if (!(t > 0.0 && t <= recurrence_guard(sp.eps, sp.L))) o.error("t_list entries must lie in (0, 0.4 eps L]");
  o.reject_unknown();
  const CheckSpec slope = acc.declare("slope", Check::Kind::window, -1.0, 0.15);
  const CheckSpec drift = acc.declare("l2_drift", Check::Kind::bound, 0.0, 1e-12);
  plan.run = [sp, slope, drift] {
    const SweepResult r = measure_dispersive(sp);
    SuiteOutcome out;
    out.result = sweep_json(r);
    out.csv = sweep_csv(r);
    out.plot = plot_header("dispersive", "set logscale xy; plot 'dispersive.plot' using 1:2 with linespoints", "t lhs");
    for (std::size_t k = 0; k < r.x.size(); ++k) out.plot += plot_row({r.x[k], r.lhs[k]});
    out.checks = {evaluate(slope, r.fit.degenerate ? NAN : r.fit.slope),
                  evaluate(drift, out.result["extra"]["l2_drift"].get<double>())};
    return out;
  };
}

void plan_localized(ConfigReader& top, Acceptance& acc, SuitePlan& plan) {
  LocalizedSpec sp;
  const Grid g = read_grid(top.section("grid"), sp.n, sp.L);
  sp.n = g.n();
  sp.L = g.L();
  ConfigReader o = top.section("options");
  sp.j = o.integer("j", sp.j);
  sp.eps = o.number("eps", sp.eps);
  sp.p = o.number("p", sp.p);
  sp.mu0 = o.number("mu0", sp.mu0);
  sp.regime = o.integer("regime", sp.regime);
  sp.t_list = o.numbers("t_list", sp.t_list);
  if (!(sp.eps > 0.0 && sp.eps <= 1.0)) o.error("eps must lie in (0, 1]");
  if (!(sp.mu0 > 0.0)) o.error("mu0 must be positive");
  if (!(sp.p >= 2.0)) o.error("p must be >= 2");
  if (sp.regime < 0 || sp.regime > 2) o.error("regime must be 0, 1 or 2");
  if (!FilterBank(g).has_block(sp.j)) o.error("block j outside the grid's bank");
  for (double t : sp.t_list)
    if (!(t >= 0.0)) o.error("t_list entries must be >= 0");
  o.reject_unknown();
  const CheckSpec viol = acc.declare("violations", Check::Kind::bound, 0.0, 0.0);
  plan.run = [sp, viol] {
    const Calibration cal = load_calibration();
    const SweepResult r = measure_localized(sp, cal);
    SuiteOutcome out;
    out.result = json::parse(sweep_summary_json(r, cal));
    out.csv = sweep_csv(r);
    out.plot = plot_header("localized", "set logscale y; plot 'localized.plot' using 1:2 title 'block norm', '' using 1:3 title 'envelope'",
                           "t lhs envelope");
    for (std::size_t k = 0; k < r.x.size(); ++k) out.plot += plot_row({r.x[k], r.lhs[k], r.rhs[k]});
    out.checks = {evaluate(viol, out.result["extra"]["violations"].get<double>())};
    return out;
  };
}

std::string eps_plot(const std::string& suite, const SweepResult& r, const std::string& what) {
  std::string p = plot_header(suite, "set logscale xy; plot '" + suite + ".plot' using 1:2 with linespoints", "eps " + what);
  for (std::size_t k = 0; k < r.eps.size(); ++k) p += plot_row({r.eps[k], what == "ratio" ? r.ratio[k] : r.lhs[k]});
  return p;
}

void plan_strichartz(ConfigReader& top, Acceptance& acc, SuitePlan& plan) {
  StrichartzSpec sp;
  const Grid g = read_grid(top.section("grid"), sp.n, sp.L);
  sp.n = g.n();
  sp.L = g.L();
  ConfigReader nr = top.section("norm");
  sp.p = nr.number("p", sp.p);
  sp.r = nr.extended("r", sp.r);
  sp.s = nr.number("s", sp.s);
  nr.reject_unknown();
  ConfigReader o = top.section("options");
  sp.s1 = o.number("s1", sp.s1);
  sp.s2 = o.number("s2", sp.s2);
  sp.mu0 = o.number("mu0", sp.mu0);
  sp.width = o.number("width", sp.width);
  sp.nt = o.integer("nt", sp.nt);
  o.reject_unknown();
  sp.eps_list = top.numbers("eps_list", sp.eps_list);
  check_rate_eps_list(top, sp.eps_list);
  sp.T = top.number("T", sp.T);
  capture(top, [&] { validate_strichartz(sp); });
  const CheckSpec slope = acc.declare("slope", Check::Kind::window, std::nullopt, 0.15);
  plan.run = [sp, slope] {
    const SweepResult r = measure_strichartz(sp);
    SuiteOutcome out;
    out.result = sweep_json(r);
    out.csv = sweep_csv(r);
    out.plot = eps_plot("strichartz", r, "norm");
    out.checks = {evaluate(slope, r.fit.degenerate ? NAN : r.fit.slope, r.target)};
    return out;
  };
}

void plan_duhamel(ConfigReader& top, Acceptance& acc, SuitePlan& plan) {
  DuhamelSpec sp;
  const Grid g = read_grid(top.section("grid"), sp.n, sp.L);
  sp.n = g.n();
  sp.L = g.L();
  ConfigReader nr = top.section("norm");
  sp.p = nr.number("p", sp.p);
  sp.r = nr.extended("r", sp.r);
  sp.s = nr.number("s", sp.s);
  nr.reject_unknown();
  ConfigReader o = top.section("options");
  sp.mu0 = o.number("mu0", sp.mu0);
  sp.width = o.number("width", sp.width);
  sp.nt = o.integer("nt", sp.nt);
  sp.max_panels = o.integer("max_panels", sp.max_panels);
  o.reject_unknown();
  sp.eps_list = top.numbers("eps_list", sp.eps_list);
  check_rate_eps_list(top, sp.eps_list);
  sp.T = top.number("T", sp.T);
  capture(top, [&] { validate_duhamel(sp); });
  const bool flat = sp.p == 2.0;
  const CheckSpec c = flat ? acc.declare("spread", Check::Kind::bound, 0.0, 0.15)
                           : acc.declare("slope", Check::Kind::window, std::nullopt, 0.15);
  plan.run = [sp, c, flat] {
    const SweepResult r = measure_duhamel(sp);
    SuiteOutcome out;
    out.result = sweep_json(r);
    out.csv = sweep_csv(r);
    out.plot = eps_plot("duhamel", r, "ratio");
    if (flat) out.checks = {evaluate(c, out.result["extra"]["spread"].get<double>())};
    else out.checks = {evaluate(c, r.fit.degenerate ? NAN : r.fit.slope, r.target)};
    return out;
  };
}

void plan_besov(ConfigReader& top, Acceptance& acc, SuitePlan& plan) {
  ConfigReader gr = top.section("grid");
  const int n = gr.integer("n", 16);
  const double L = gr.number("L", 8.0);
  if (n < 8 || n % 2) gr.error("n must be even and >= 8");
  if (!(L > 0.0)) gr.error("L must be positive");
  gr.reject_unknown();
  ConfigReader o = top.section("options");
  const int members = o.integer("members", 200);
  if (members < 1) o.error("members must be positive");
  const json lj = o.raw("lemmas");
  o.reject_unknown();
  std::vector<json> entries;
  if (lj.is_null())
    for (const char* l : {"bi0", "bi1", "bi2", "commu", "compos"}) entries.push_back(l);
  else if (lj.is_array()) entries.assign(lj.begin(), lj.end());
  else o.error("lemmas must be an array");

  std::vector<SuiteSpec> specs;
  std::vector<CheckSpec> checks;
  std::set<std::string> seen;
  for (std::size_t i = 0; i < entries.size(); ++i) {
    SuiteSpec sp;
    sp.members = members;
    sp.L = L;
    ConfigReader e = o.nested(entries[i].is_object() ? entries[i] : json::object(), "lemmas[" + std::to_string(i) + "]");
    if (entries[i].is_string()) sp.lemma = entries[i].get<std::string>();
    else if (entries[i].is_object()) {
      sp.lemma = e.text("lemma", "");
      sp.s1 = e.number("s1", sp.s1);
      sp.s2 = e.number("s2", sp.s2);
      sp.s = e.number("s", sp.s);
      sp.p = e.number("p", sp.p);
      sp.r = e.extended("r", sp.r);
      sp.r1 = e.extended("r1", sp.r1);
      sp.r2 = e.extended("r2", sp.r2);
      sp.members = e.integer("members", sp.members);
      sp.amplitude = e.number("amplitude", sp.amplitude);
      sp.rho_inf = e.number("rho_inf", sp.rho_inf);
      e.reject_unknown();
    } else {
      e.error("expected a lemma name or an object");
      continue;
    }
    if (!seen.insert(sp.lemma).second) {
      e.error("lemma '" + sp.lemma + "' listed twice");
      continue;
    }
    capture(e, [&] { validate_suite(sp); });
    specs.push_back(sp);
    checks.push_back(acc.declare("growth_" + sp.lemma, Check::Kind::bound, 0.0, 1.10));
  }
  const std::uint64_t seed = plan.seed;
  const int workers = plan.workers;
  plan.run = [specs, checks, n, seed, workers] {
    std::vector<RatioReport> reps(specs.size());
    parallel_for(int(specs.size()), workers, [&](int i) { reps[i] = run_ratio_suite(specs[i], n, seed); });
    SuiteOutcome out;
    out.result = {{"n", n}, {"lemmas", json::array()}};
    out.csv = "lemma,member,ratio\n";
    out.plot = plot_header("besov-check", "plot 'besov-check.plot' using 1:3:xtic(2) with points", "index lemma growth");
    for (std::size_t i = 0; i < reps.size(); ++i) {
      out.result["lemmas"].push_back(json::parse(ratio_report_json(reps[i])));
      for (std::size_t m = 0; m < reps[i].ratios.size(); ++m)
        out.csv += reps[i].lemma + "," + std::to_string(m) + "," + fmt(reps[i].ratios[m]) + "\n";
      out.plot += std::to_string(i) + " " + reps[i].lemma + " " + fmt(reps[i].resolution_growth) + "\n";
      out.checks.push_back(evaluate(checks[i], reps[i].resolution_growth));
    }
    return out;
  };
}

void plan_stationary(ConfigReader& top, Acceptance& acc, SuitePlan& plan) {
  const Grid g = read_grid(top.section("grid"), 32, 16.0);
  const PhysicalParams prm = read_physics(top.section("physics"));
  const ForceSpec f = read_force(top.section("force"), g, {4.0, -1, 0});
  const std::vector<double> eps = top.numbers("eps_list", {0.25, 0.125, 0.0625, 0.03125});
  check_rate_eps_list(top, eps);
  ConfigReader tol = top.section("tolerances");
  StationaryOptions opt;
  opt.tol = tol.number("stationary", opt.tol);
  opt.max_iter = tol.integer("max_iter", opt.max_iter);
  if (!(opt.tol > 0.0)) tol.error("stationary tolerance must be positive");
  if (opt.max_iter < 1) tol.error("max_iter must be positive");
  tol.reject_unknown();
  ConfigReader o = top.section("options");
  opt.j_cut = o.integer("j_cut", opt.j_cut);
  opt.relax = o.flag("relax", opt.relax);
  const bool dump = o.flag("dump_fields", false);
  o.reject_unknown();
  const CheckSpec slope = acc.declare("slope", Check::Kind::window, 1.0, 0.15);
  const CheckSpec resid = acc.declare("residual", Check::Kind::bound, 0.0, 10.0 * opt.tol);
  const std::uint64_t seed = plan.seed;
  plan.run = [g, prm, f, eps, opt, dump, slope, resid, seed] {
    const SpectralField F = make_force(g, seed, f.amplitude, f.j_lo, f.j_hi);
    const StationaryLimit lim = measure_stationary_limit(F, eps, prm, opt);
    SuiteOutcome out;
    out.result = json::parse(lim.json());
    out.result["force_norm"] = force_norm(F, FilterBank(g));
    out.csv = "eps,b_norm,q_norm,p_norm,total,residual\n";
    out.plot = plot_header("stationary", "set logscale xy; plot 'stationary.plot' using 1:2 with linespoints", "eps total");
    for (std::size_t k = 0; k < lim.eps.size(); ++k) {
      out.csv += row({lim.eps[k], lim.b_norm[k], lim.q_norm[k], lim.p_norm[k], lim.total[k], lim.residual[k]});
      out.plot += plot_row({lim.eps[k], lim.total[k]});
    }
    out.checks = {evaluate(slope, lim.fit.degenerate ? NAN : lim.fit.slope),
                  evaluate(resid, *std::max_element(lim.residual.begin(), lim.residual.end()))};
    if (dump) {
      out.fields.push_back({"force", F});
      for (std::size_t k = 0; k < eps.size(); ++k) {
        const StationaryPair s = solve_compressible_stationary(F, eps[k], prm, opt);
        out.fields.push_back({"b_star_" + std::to_string(k), s.b_star});
        out.fields.push_back({"v_star_" + std::to_string(k), s.v_star});
      }
    }
    return out;
  };
}

// Single-eps evolution of the perturbation and the incompressible flow, journalled.
void plan_evolve(ConfigReader& top, Acceptance& acc, SuitePlan& plan) {
  const Grid g = read_grid(top.section("grid"), 32, 32.0);
  const PhysicalParams prm = read_physics(top.section("physics"));
  const ForceSpec f = read_force(top.section("force"), g, {1.0, -1, 0});
  const StepControl ctl = read_step_control(top.section("tolerances"), StepControl{});
  ConfigReader o = top.section("options");
  const double eps = o.number("eps", 0.25);
  const double amp = o.number("data_amplitude", f.amplitude);
  const double width = o.number("data_width", 1.0);
  const bool scaled = o.flag("eps_scaled_density", false);
  const int nt = o.integer("nt", 16);
  const bool dump = o.flag("dump_fields", false);
  if (!(eps > 0.0 && eps <= 1.0)) o.error("eps must lie in (0, 1]");
  if (!(amp >= 0.0)) o.error("data_amplitude must be >= 0");
  if (!(width > 0.0)) o.error("data_width must be positive");
  if (nt < 1) o.error("nt must be positive");
  o.reject_unknown();
  const double T = top.number("T", recurrence_guard(eps, g.L()));
  if (!(T > 0.0)) top.error("T must be positive");
  const CheckSpec drift = acc.declare("sigma_mean_drift", Check::Kind::bound, 0.0, 1e-12);
  const CheckSpec equil = acc.declare("equilibrium", Check::Kind::bound, 0.0, 1e-10);
  const CheckSpec failed = acc.declare("failed", Check::Kind::bound, 0.0, 0.0);
  const std::uint64_t seed = plan.seed;
  plan.run = [=] {
    SuiteOutcome out;
    out.csv = "t,dt,steps,rejected,sigma_l2,w_l2,u_tilde_l2,sigma_mean\n";
    out.plot = plot_header("evolve", "set logscale y; plot 'evolve.plot' using 1:2 title 'sigma', '' using 1:3 title 'w', '' using 1:4 title 'u_tilde'",
                           "t sigma_l2 w_l2 u_tilde_l2");
    std::string status = "ok";
    double eq = NAN, defect = NAN, mean_drift = NAN;
    AdvanceStats st;
    try {
      const SpectralField F = make_force(g, seed, f.amplitude, f.j_lo, f.j_hi);
      const SpectralField u_star = solve_incompressible_stationary(F, prm).u;
      const StationaryPair pair = solve_compressible_stationary(F, eps, prm, StationaryOptions{1e-13, 400, INT_MAX, true});
      defect = equilibrium_defect(pair.b_star, pair.v_star, F, eps, prm);
      const StationaryBackground bg{pair.b_star, pair.v_star, u_star};
      PerturbationState z{SpectralField(g, 1), SpectralField(g, 3), 0.0};
      z = step_compressible(z, bg, eps, 1.0, prm, ctl);
      eq = coefficient_rms(z.sigma) + coefficient_rms(z.w);

      const InitialData d0 = ill_prepared_data(g, seed + 1, amp, width, scaled)(eps);
      const JointSystem js = make_joint_system(bg, eps, prm, false);
      SpectralField u = js.pack(d0.sigma, d0.w, helmholtz_P(pair.v_star + d0.w) - u_star);
      const cplx mean0 = zero_mode(d0.sigma, 0);
      mean_drift = 0.0;
      for (int k = 0; k <= nt; ++k) {
        const double t = T * k / nt;
        if (k > 0) u = advance(*js.integ, std::move(u), T * (k - 1) / nt, t, ctl, st, [&js](SpectralField& x) { js.project(x); });
        const SpectralField sig = js.sigma(u), w = js.w(u), ut = js.u_tilde(u);
        const double mean = std::abs(zero_mode(sig, 0));
        mean_drift = std::max(mean_drift, std::abs(zero_mode(sig, 0) - mean0));
        out.csv += row({t, st.dt, double(st.accepted), double(st.rejected), lp_norm(sig, 2.0), lp_norm(w, 2.0),
                        lp_norm(ut, 2.0), mean});
        out.plot += plot_row({t, lp_norm(sig, 2.0), lp_norm(w, 2.0), lp_norm(ut, 2.0)});
      }
      if (dump) {
        out.fields.push_back({"sigma_final", js.sigma(u)});
        out.fields.push_back({"w_final", js.w(u)});
        out.fields.push_back({"u_tilde_final", js.u_tilde(u)});
      }
    } catch (const SolverFailure& e) {
      status = std::string("stationary solver failure: ") + e.what();
    } catch (const DensityFailure& e) {
      status = std::string("density failure: ") + e.what();
    } catch (const StepRejected& e) {
      status = std::string("integrator failure: ") + e.what();
    } catch (const std::range_error& e) {
      status = std::string("band budget exceeded: ") + e.what();
    }
    out.result = {{"eps", eps},      {"T", T},
                  {"status", status}, {"steps", st.accepted},
                  {"rejected", st.rejected}};
    out.result["equilibrium"] = std::isfinite(eq) ? json(eq) : json();
    out.result["full_system_defect"] = std::isfinite(defect) ? json(defect) : json();
    out.result["sigma_mean_drift"] = std::isfinite(mean_drift) ? json(mean_drift) : json();
    out.checks = {evaluate(drift, mean_drift), evaluate(equil, eq), evaluate(failed, status == "ok" ? 0.0 : 1.0)};
    return out;
  };
}

void plan_low_mach(ConfigReader& top, Acceptance& acc, SuitePlan& plan) {
  LowMachSpec sp;
  const Grid g = read_grid(top.section("grid"), sp.n, sp.L);
  sp.n = g.n();
  sp.L = g.L();
  sp.prm = read_physics(top.section("physics"));
  const ForceSpec f = read_force(top.section("force"), g, {sp.delta, sp.force_j_lo, sp.force_j_hi});
  sp.delta = f.amplitude;
  sp.force_j_lo = f.j_lo;
  sp.force_j_hi = f.j_hi;
  sp.eps_list = top.numbers("eps_list", sp.eps_list);
  check_rate_eps_list(top, sp.eps_list);
  ConfigReader nr = top.section("norm");
  sp.p = nr.number("p", sp.p);
  sp.r = nr.extended("r", sp.r);
  sp.s = nr.number("s", sp.s);
  nr.reject_unknown();
  sp.T = top.number("T", sp.T);
  sp.ctl = read_step_control(top.section("tolerances"), sp.ctl);
  ConfigReader o = top.section("options");
  sp.data_width = o.number("data_width", sp.data_width);
  sp.eps_scaled_density = o.flag("eps_scaled_density", sp.eps_scaled_density);
  sp.track_w1 = o.flag("track_w1", sp.track_w1);
  sp.allow_outside_hypotheses = o.flag("allow_outside_hypotheses", sp.allow_outside_hypotheses);
  sp.nt = o.integer("nt", sp.nt);
  o.reject_unknown();
  sp.seed = plan.seed;
  sp.workers = plan.workers;
  capture(top, [&] { validate_low_mach(sp); });
  const CheckSpec slope = acc.declare("slope", Check::Kind::window, std::nullopt, 0.15);
  const CheckSpec equil = acc.declare("equilibrium", Check::Kind::bound, 0.0, 1e-10);
  const CheckSpec drift = acc.declare("sigma_mean_drift", Check::Kind::bound, 0.0, 1e-12);
  const CheckSpec failed = acc.declare("failed_eps", Check::Kind::bound, 0.0, 0.0);
  plan.run = [sp, slope, equil, drift, failed] {
    const LowMachResult r = run_low_mach_experiment(sp);
    SuiteOutcome out;
    out.result = json::parse(r.json());
    out.csv = r.csv();
    out.plot = plot_header("low-mach",
                           "set logscale xy; plot 'low-mach.plot' using 1:2 title 'total', '' using 1:3 title 'sigma', '' using 1:4 title 'Qw', '' using 1:5 title 'w1'",
                           "eps total sigma_lr q_lr w1_lr lp_total");
    double eq = 0.0, md = 0.0, nfail = 0.0;
    for (const LowMachEps& e : r.per_eps) {
      out.plot += plot_row({e.eps, e.total, e.sigma_lr, e.q_lr, e.w1_lr, e.lp_total});
      if (e.status != "ok") nfail += 1.0;
      eq = std::max(eq, e.equilibrium);
      md = std::max(md, e.sigma_mean_drift);
    }
    out.checks = {evaluate(slope, r.fit.degenerate ? NAN : r.fit.slope, r.target), evaluate(equil, eq),
                  evaluate(drift, md), evaluate(failed, nfail)};
    return out;
  };
}

void plan_time_decay(ConfigReader& top, Acceptance& acc, SuitePlan& plan) {
  TimeDecaySpec sp;
  const Grid g = read_grid(top.section("grid"), sp.n, sp.L);
  sp.n = g.n();
  sp.L = g.L();
  sp.prm = read_physics(top.section("physics"));
  ConfigReader fr = top.section("force");
  sp.force_amplitude = fr.number("amplitude", sp.force_amplitude);
  if (!(sp.force_amplitude >= 0.0)) fr.error("amplitude must be >= 0");
  fr.reject_unknown();
  ConfigReader nr = top.section("norm");
  sp.s = nr.number("s", sp.s);
  nr.reject_unknown();
  sp.T = top.number("T", sp.T);
  sp.ctl = read_step_control(top.section("tolerances"), sp.ctl);
  ConfigReader o = top.section("options");
  sp.eps = o.number("eps", sp.eps);
  sp.amplitude = o.number("amplitude", sp.amplitude);
  sp.j_lo = o.integer("j_lo", sp.j_lo);
  sp.j_hi = o.integer("j_hi", sp.j_hi);
  sp.fit_from = o.number("fit_from", sp.fit_from);
  sp.nt = o.integer("nt", sp.nt);
  o.reject_unknown();
  sp.seed = plan.seed;
  capture(top, [&] { validate_time_decay(sp); });
  const CheckSpec slope = acc.declare("slope", Check::Kind::window, std::nullopt, 0.15);
  plan.run = [sp, slope] {
    const TimeDecayResult r = measure_time_decay(sp);
    SuiteOutcome out;
    out.result = json::parse(r.json());
    out.csv = r.csv();
    out.plot = plot_header("time-decay", "set logscale xy; plot 'time-decay.plot' using 1:2 with linespoints", "1+t norm");
    for (std::size_t k = 0; k < r.t.size(); ++k) out.plot += plot_row({1.0 + r.t[k], r.norm[k]});
    out.checks = {evaluate(slope, r.fit.degenerate ? NAN : r.fit.slope, r.target)};
    return out;
  };
}

using Planner = void (*)(ConfigReader&, Acceptance&, SuitePlan&);

const std::map<std::string, Planner>& planners() {
  static const std::map<std::string, Planner> m{
      {"stationary", plan_stationary}, {"evolve", plan_evolve},         {"dispersive", plan_dispersive},
      {"strichartz", plan_strichartz}, {"duhamel", plan_duhamel},       {"localized", plan_localized},
      {"besov-check", plan_besov},     {"low-mach", plan_low_mach},     {"time-decay", plan_time_decay}};
  return m;
}

}  // namespace

const std::vector<std::string>& suite_ids() {
  static const std::vector<std::string> ids{"stationary", "evolve",      "dispersive", "strichartz", "duhamel",
                                            "localized",  "besov-check", "low-mach",   "time-decay"};
  return ids;
}

SuitePlan plan_suite(const json& config, const std::string& suite, std::optional<std::uint64_t> seed,
                     std::optional<int> workers) {
  auto it = planners().find(suite);
  if (it == planners().end()) throw ConfigError({"unknown suite '" + suite + "'"});
  std::vector<std::string> errs;
  ConfigReader top(config, "", &errs);
  const std::string declared = top.text("suite", suite);
  if (declared != suite) top.error("config is for suite '" + declared + "', not '" + suite + "'");
  top.text("out", "");
  SuitePlan plan;
  plan.suite = suite;
  const std::uint64_t cfg_seed = top.unsigned64("seed", 1);
  const int cfg_workers = top.integer("workers", 1);
  plan.seed = seed.value_or(cfg_seed);
  plan.workers = workers.value_or(cfg_workers);
  if (plan.workers < 1) top.error("workers must be >= 1");
  Acceptance acc(top.section("acceptance"));
  it->second(top, acc, plan);
  acc.finish();
  top.reject_unknown();
  if (!errs.empty()) throw ConfigError(errs);
  plan.config = config.is_null() ? json::object() : config;
  plan.config["suite"] = suite;
  plan.config["seed"] = plan.seed;
  plan.config["workers"] = plan.workers;
  return plan;
}

namespace {

void write_text(const std::filesystem::path& p, const std::string& s) {
  std::ofstream os(p, std::ios::binary);
  os << s;
  if (!os) throw IoError("cannot write " + p.string());
}

}  // namespace

int run_suite(const json& config, const std::string& suite, const std::string& out_dir,
              std::optional<std::uint64_t> seed, std::optional<int> workers, std::ostream& log) {
  SuitePlan plan;
  try {
    plan = plan_suite(config, suite, seed, workers);
  } catch (const ConfigError& e) {
    log << e.what() << "\n";
    return kExitConfig;
  }
  std::filesystem::path dir = out_dir;
  if (dir.empty()) {
    const json* o = config.is_object() && config.contains("out") ? &config["out"] : nullptr;
    dir = o && o->is_string() ? o->get<std::string>() : "results/" + suite;
  }
  try {
    std::filesystem::create_directories(dir);
  } catch (const std::filesystem::filesystem_error& e) {
    log << "cannot create output directory: " << e.what() << "\n";
    return kExitIo;
  }

  const auto t0 = std::chrono::steady_clock::now();
  SuiteOutcome out;
  try {
    out = plan.run();
  } catch (const IoError& e) {
    log << suite << ": " << e.what() << "\n";
    return kExitIo;
  } catch (const std::invalid_argument& e) {
    log << suite << ": invalid configuration: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    log << suite << ": run failed: " << e.what() << "\n";
    return kExitFail;
  }
  const double elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  json summary{{"suite", suite},   {"seed", plan.seed}, {"workers", plan.workers},     {"config", plan.config},
               {"result", out.result}, {"checks", json::array()}, {"pass", out.pass()}, {"elapsed_seconds", elapsed}};
  for (const Check& c : out.checks) summary["checks"].push_back(c.json());
  try {
    write_text(dir / "summary.json", summary.dump(2) + "\n");
    write_text(dir / (suite + ".csv"), out.csv);
    write_text(dir / (suite + ".plot"), out.plot);
    for (const auto& [name, field] : out.fields) write_field((dir / (name + ".bin")).string(), field);
  } catch (const IoError& e) {
    log << e.what() << "\n";
    return kExitIo;
  }
  for (const Check& c : out.checks)
    log << suite << " " << c.name << ": measured " << brief(c.measured) << ", "
        << (c.kind == Check::Kind::window ? "target " + brief(c.target) + " +- " : "bound ") << brief(c.tolerance) << "  "
        << (c.pass() ? "PASS" : "FAIL") << "\n";
  return out.pass() ? kExitPass : kExitFail;
}

}  // namespace lowmach
