#include "lowmach/acoustic_measure.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <map>
#include <memory>
#include <mutex>
#include <random>
#include <sstream>
#include <stdexcept>

#include "json.hpp"
#include "lowmach/fft.hpp"
#include "lowmach/field_ops.hpp"
#include "lowmach/phi_functions.hpp"

#ifndef LOWMACH_SOURCE_DIR
#define LOWMACH_SOURCE_DIR "."
#endif

namespace lowmach {

namespace {

using nlohmann::json;

double conj_exp(double p) { return p == 1.0 ? kInf : (std::isinf(p) ? 1.0 : p / (p - 1.0)); }

std::vector<double> geomspace(double a, double b, int n) {
  std::vector<double> v(n);
  for (int i = 0; i < n; ++i) v[i] = a * std::pow(b / a, n == 1 ? 0.0 : double(i) / (n - 1));
  return v;
}

std::vector<double> linspace(double a, double b, int n) {
  std::vector<double> v(n);
  for (int i = 0; i < n; ++i) v[i] = a + (b - a) * (n == 1 ? 0.0 : double(i) / (n - 1));
  return v;
}

std::string fmt(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

void check_eps_list(const std::vector<double>& eps, const char* who) {
  if (eps.size() < 4) throw std::invalid_argument(std::string(who) + ": eps_list needs at least 4 entries");
  for (double e : eps)
    if (!(e > 0.0)) throw std::invalid_argument(std::string(who) + ": eps must be positive");
}

double sweep_horizon(double T, const std::vector<double>& eps, double L) {
  const double emin = *std::min_element(eps.begin(), eps.end());
  const double guard = recurrence_guard(emin, L);
  if (T == 0.0) return guard;
  if (!(T > 0.0) || T > guard)
    throw std::invalid_argument("horizon T must lie in (0, 0.4 eps_min L]");
  return T;
}

// Case (i) envelope factor without the constant.
double envelope_i(double t, int j, double eps, double p, double c, double psi_pp) {
  const double q = std::ldexp(1.0, 2 * j);
  return std::pow(eps, 1.0 - 2.0 / p) * std::pow(q * t, 2.0 / p) * std::exp(-c * q * t) / t *
         std::exp2(j * (2.0 - 8.0 / p)) * psi_pp;
}

std::vector<double> localized_default_times(int regime, int j, double eps, double mu0,
                                            const Calibration& cal) {
  const double rate = regime == 1 ? cal.c(mu0) * std::ldexp(1.0, 2 * j) : cal.slow_rate(eps, mu0);
  return linspace(0.25 / rate, 3.0 / rate, 12);
}

}  // namespace

std::string default_calibration_path() {
  if (const char* env = std::getenv("LOWMACH_CALIBRATION")) return env;
  return std::string(LOWMACH_SOURCE_DIR) + "/calibration/constants.json";
}

Calibration load_calibration(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("calibration: cannot open " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw std::runtime_error("calibration: corrupt file " + path + ": " + e.what());
  }
  Calibration c;
  try {
    c.version = j.at("version").get<std::string>();
    c.c_per_mu0 = j.at("c_per_mu0").get<double>();
    c.slow_rate_times_mu0 = j.at("slow_rate_times_mu0").get<double>();
    c.d2_times_mu0 = j.at("d2_times_mu0").get<double>();
    c.d0_times_mu0 = j.at("d0_times_mu0").get<double>();
    c.eps0 = j.at("eps0").get<double>();
    c.envelope_constant = j.at("envelope_constant").get<double>();
    c.envelope_constant_ii = j.at("envelope_constant_ii").get<double>();
    c.heat_constant = j.at("heat_constant").get<double>();
    c.upper_constant = j.at("upper_constant").get<double>();
    c.multiplier_constant = j.at("multiplier_constant").get<double>();
  } catch (const json::exception& e) {
    throw std::runtime_error("calibration: missing or invalid field in " + path + ": " + e.what());
  }
  return c;
}

void save_calibration(const Calibration& c, const std::string& path) {
  json j;
  j["version"] = c.version;
  j["c_per_mu0"] = c.c_per_mu0;
  j["slow_rate_times_mu0"] = c.slow_rate_times_mu0;
  j["d2_times_mu0"] = c.d2_times_mu0;
  j["d0_times_mu0"] = c.d0_times_mu0;
  j["eps0"] = c.eps0;
  j["envelope_constant"] = c.envelope_constant;
  j["envelope_constant_ii"] = c.envelope_constant_ii;
  j["heat_constant"] = c.heat_constant;
  j["upper_constant"] = c.upper_constant;
  j["multiplier_constant"] = c.multiplier_constant;
  std::ofstream out(path);
  if (!out) throw std::runtime_error("calibration: cannot write " + path);
  out << j.dump(2) << "\n";
}

double recurrence_guard(double eps, double L) { return 0.4 * eps * L; }

double near_field_end(double eps, int j) { return 12.0 * eps * std::ldexp(1.0, -j); }

SpectralField gaussian_bump(const Grid& g, double width) {
  if (!(width > 0.0)) throw std::invalid_argument("gaussian_bump: width must be positive");
  const int n = g.n();
  const double h = g.dx(), c = 0.5 * g.L();
  RealGrid v(g.size());
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b)
      for (int d = 0; d < n; ++d) {
        const double x = a * h - c, y = b * h - c, z = d * h - c;
        v[(std::size_t(a) * n + b) * n + d] = std::exp(-(x * x + y * y + z * z) / (width * width));
      }
  SpectralField f(g, 4);
  set_from_real(f, 0, v);
  f.at(0, 0) = 0.0;
  return f;
}

SpectralField lattice_delta(const Grid& g) {
  SpectralField f(g, 4);
  const double v = 1.0 / std::pow(g.L(), 3);
  for (std::size_t i = 0; i < g.size(); ++i)
    if (!g.is_nyquist(i)) f.at(0, i) = v;
  return f;
}

std::string sweep_csv(const SweepResult& r) {
  std::ostringstream o;
  o << "eps,t_or_j,lhs,rhs_envelope,ratio\n";
  for (std::size_t i = 0; i < r.lhs.size(); ++i)
    o << fmt(r.eps[i]) << ',' << fmt(r.x[i]) << ',' << fmt(r.lhs[i]) << ',' << fmt(r.rhs[i]) << ','
      << fmt(r.ratio[i]) << '\n';
  return o.str();
}

std::string sweep_summary_json(const SweepResult& r, const Calibration& cal) {
  json j;
  j["kind"] = r.kind;
  j["slope"] = r.fit.slope;
  j["slope_ci"] = r.fit.slope_ci_halfwidth;
  j["residual"] = r.fit.residual_rms;
  j["n_points"] = r.fit.n_points;
  j["degenerate"] = r.fit.degenerate;
  j["target"] = r.target;
  j["params"] = r.params_json.empty() ? json::object() : json::parse(r.params_json);
  j["extra"] = r.extra_json.empty() ? json::object() : json::parse(r.extra_json);
  j["calibration_version"] = cal.version;
  return j.dump(2);
}

// ---------------------------------------------------------------------------

double dispersive_ratio(const Grid& g, const FilterBank& bank, int j, double eps, double t) {
  SpectralField psi(g, 1);
  const double v = 1.0 / std::pow(g.L(), 3);
  for (std::size_t i = 0; i < g.size(); ++i)
    if (!g.is_nyquist(i)) psi.at(0, i) = v;
  const SpectralField b = dyadic_block(j, psi, bank);
  return lp_norm(apply_wave(b, t, eps, 1), kInf) / lp_norm(b, 1.0);
}

SweepResult measure_dispersive(const DispersiveSpec& spec) {
  if (!(spec.eps > 0.0)) throw std::invalid_argument("dispersive: eps must be positive");
  Grid g(spec.n, spec.L);
  FilterBank bank(g);
  if (!bank.has_block(spec.j)) throw std::invalid_argument("dispersive: block j outside the bank");
  const double guard = recurrence_guard(spec.eps, spec.L);
  std::vector<double> ts = spec.t_list;
  if (ts.empty()) {
    const double t0 = near_field_end(spec.eps, spec.j);
    if (t0 >= guard) throw std::invalid_argument("dispersive: box too small for the far-field window");
    ts = geomspace(t0, guard, 16);
  }
  for (double t : ts)
    if (!(t > 0.0) || t > guard)
      throw std::invalid_argument("dispersive: t outside (0, recurrence guard " + fmt(guard) + "]");

  SpectralField psi(g, 1);
  const double v = 1.0 / std::pow(g.L(), 3);
  for (std::size_t i = 0; i < g.size(); ++i)
    if (!g.is_nyquist(i)) psi.at(0, i) = v;
  const SpectralField b = dyadic_block(spec.j, psi, bank);
  const double l1 = lp_norm(b, 1.0), l2 = l2_norm(b);

  SweepResult r;
  r.kind = "dispersive";
  r.target = -1.0;
  double drift = 0.0;
  for (double t : ts) {
    const SpectralField w = apply_wave(b, t, spec.eps, 1);
    const double lhs = lp_norm(w, kInf) / l1;
    const double env = std::ldexp(1.0, 2 * spec.j) * spec.eps / t;
    r.eps.push_back(spec.eps);
    r.x.push_back(t);
    r.lhs.push_back(lhs);
    r.rhs.push_back(env);
    r.ratio.push_back(lhs / env);
    drift = std::max(drift, std::abs(l2_norm(w) / l2 - 1.0));
  }
  r.fit = fit_rate(r.x, r.lhs, FitAxes::log_log);
  r.params_json = json{{"n", spec.n}, {"L", spec.L}, {"j", spec.j}, {"eps", spec.eps}}.dump();
  r.extra_json = json{{"l2_drift", drift}, {"guard", guard}}.dump();
  return r;
}

// ---------------------------------------------------------------------------

SweepResult measure_localized(const LocalizedSpec& spec, const Calibration& cal) {
  if (!(spec.eps > 0.0) || !(spec.mu0 > 0.0))
    throw std::invalid_argument("localized: eps and mu0 must be positive");
  if (!(spec.p >= 2.0)) throw std::invalid_argument("localized: p must be >= 2");
  Grid g(spec.n, spec.L);
  FilterBank bank(g);
  if (!bank.has_block(spec.j)) throw std::invalid_argument("localized: block j outside the bank");
  const int regime = spec.eps * std::ldexp(1.0, spec.j) <= cal.d2(spec.mu0) ? 1 : 2;
  if (spec.regime != 0 && spec.regime != regime)
    throw std::invalid_argument("localized: regime mismatch (eps 2^j against d2 selects case " +
                                std::to_string(regime) + ")");
  std::vector<double> ts = spec.t_list;
  if (ts.empty()) ts = localized_default_times(regime, spec.j, spec.eps, spec.mu0, cal);
  for (double t : ts)
    if (!(t >= 0.0)) throw std::invalid_argument("localized: t must be >= 0");

  const SpectralField b = dyadic_block(spec.j, lattice_delta(g), bank);
  const double p = spec.p;
  const double denom = regime == 1 ? lp_norm(b, conj_exp(p)) : l2_norm(b);
  const double c = cal.c(spec.mu0);
  const double K = regime == 1 ? cal.envelope_constant : cal.envelope_constant_ii;

  const AcousticPropagator prop(g, spec.eps, spec.mu0);
  SweepResult r;
  r.kind = "localized";
  int violations = 0;
  std::vector<double> ft, fl;
  for (double t : ts) {
    const double lhs = lp_norm(prop.apply(b, t), p) / denom;
    double env;
    if (regime == 1)
      env = t == 0.0 ? (p == 2.0 ? 1.0 : kInf) : envelope_i(t, spec.j, spec.eps, p, c, 1.0);
    else
      env = std::exp(-cal.slow_rate(spec.eps, spec.mu0) * t) * std::exp2(3.0 * spec.j * (0.5 - 1.0 / p));
    r.eps.push_back(spec.eps);
    r.x.push_back(t);
    r.lhs.push_back(lhs);
    r.rhs.push_back(env);
    r.ratio.push_back(lhs / env);
    if (lhs > K * env) ++violations;
    if (t > 0.0 && lhs > 0.0) {
      ft.push_back(t);
      fl.push_back(lhs);
    }
  }
  r.fit = ft.size() >= 4 ? fit_rate(ft, fl, FitAxes::log_y) : degenerate_fit(int(ft.size()));
  const double rate = -r.fit.slope;
  r.target = regime == 1 ? c * std::ldexp(1.0, 2 * spec.j) : cal.slow_rate(spec.eps, spec.mu0);
  r.params_json = json{{"n", spec.n}, {"L", spec.L}, {"j", spec.j}, {"eps", spec.eps}, {"p", p},
                       {"mu0", spec.mu0}}
                      .dump();
  r.extra_json = json{{"regime", regime},
                      {"decay_rate", rate},
                      {"rate_per_4j", rate / std::ldexp(1.0, 2 * spec.j)},
                      {"rate_times_eps2", rate * spec.eps * spec.eps},
                      {"violations", violations},
                      {"envelope_constant", K}}
                     .dump();
  return r;
}

// ---------------------------------------------------------------------------

void validate_strichartz(const StrichartzSpec& s) {
  if (!(s.p >= 2.0) || std::isinf(s.p)) throw std::invalid_argument("strichartz: requires 2 <= p < inf");
  if (!(s.r > 2.0)) throw std::invalid_argument("strichartz: requires 2 < r <= inf");
  const double ir = std::isinf(s.r) ? 0.0 : 1.0 / s.r;
  if (!(s.s1 + 2.0 * ir < s.s)) throw std::invalid_argument("strichartz: requires s1 + 2/r < s");
  if (!(s.s < s.s2)) throw std::invalid_argument("strichartz: requires s < s2");
  check_eps_list(s.eps_list, "strichartz");
  if (s.nt < 4) throw std::invalid_argument("strichartz: nt must be >= 4");
  if (!(s.mu0 > 0.0)) throw std::invalid_argument("strichartz: mu0 must be positive");
  sweep_horizon(s.T, s.eps_list, s.L);
}

double time_norm(const std::vector<double>& t, const std::vector<double>& v, double r) {
  if (t.size() != v.size() || t.empty()) throw std::invalid_argument("time_norm: size mismatch");
  if (std::isinf(r)) return *std::max_element(v.begin(), v.end());
  double acc = 0.0;
  for (std::size_t i = 1; i < t.size(); ++i)
    acc += 0.5 * (t[i] - t[i - 1]) * (std::pow(v[i], r) + std::pow(v[i - 1], r));
  return std::pow(acc, 1.0 / r);
}

SweepResult measure_strichartz(const StrichartzSpec& spec, const SpectralField* psi_in) {
  validate_strichartz(spec);
  Grid g(spec.n, spec.L);
  FilterBank bank(g);
  const SpectralField psi = psi_in ? *psi_in : gaussian_bump(g, spec.width);
  if (psi.grid() != g || psi.components() != 4)
    throw std::invalid_argument("strichartz: psi must be a 4-component field on the sweep grid");
  const double T = sweep_horizon(spec.T, spec.eps_list, spec.L);
  std::vector<double> ts{0.0};
  for (double t : geomspace(T * 1e-3, T, spec.nt)) ts.push_back(t);
  const double rhs = besov_norm(psi, spec.s2 + 3.0 * (0.5 - 1.0 / spec.p), 2.0, 1.0, bank);

  SweepResult r;
  r.kind = "strichartz";
  r.target = std::min(std::isinf(spec.r) ? 0.0 : 1.0 / spec.r, 0.5 - 1.0 / spec.p);
  for (double eps : spec.eps_list) {
    const AcousticPropagator prop(g, eps, spec.mu0);
    std::vector<double> v;
    for (double t : ts) v.push_back(besov_norm(prop.apply(psi, t), spec.s, spec.p, 1.0, bank));
    const double lhs = time_norm(ts, v, spec.r);
    r.eps.push_back(eps);
    r.x.push_back(T);
    r.lhs.push_back(lhs);
    r.rhs.push_back(rhs);
    r.ratio.push_back(rhs > 0.0 ? lhs / rhs : 0.0);
  }
  const bool zero = std::all_of(r.lhs.begin(), r.lhs.end(), [](double x) { return x == 0.0; });
  r.fit = zero ? degenerate_fit(int(r.lhs.size())) : fit_rate(r.eps, r.lhs, FitAxes::log_log);
  r.params_json = json{{"n", spec.n},   {"L", spec.L},   {"mu0", spec.mu0}, {"p", spec.p},
                       {"r", std::isinf(spec.r) ? json("inf") : json(spec.r)},
                       {"s", spec.s},   {"s1", spec.s1}, {"s2", spec.s2},   {"T", T},
                       {"nt", spec.nt}, {"eps_list", spec.eps_list}}
                      .dump();
  r.extra_json = "{}";
  return r;
}

// ---------------------------------------------------------------------------

void validate_duhamel(const DuhamelSpec& s) {
  if (!(s.p >= 2.0) || std::isinf(s.p)) throw std::invalid_argument("duhamel: requires 2 <= p < inf");
  if (!(s.r > 2.0)) throw std::invalid_argument("duhamel: requires 2 < r <= inf");
  check_eps_list(s.eps_list, "duhamel");
  if (s.nt < 4) throw std::invalid_argument("duhamel: nt must be >= 4");
  if (s.max_panels < 2) throw std::invalid_argument("duhamel: max_panels must be >= 2");
  if (!(s.mu0 > 0.0)) throw std::invalid_argument("duhamel: mu0 must be positive");
  sweep_horizon(s.T, s.eps_list, s.L);
}

SourceGenerator resonant_source(const SpectralField& phi, double mu0) {
  struct Cache {
    std::mutex m;
    std::map<double, std::shared_ptr<const AcousticPropagator>> by_eps;
  };
  auto cache = std::make_shared<Cache>();
  return [phi, mu0, cache](double tau, double eps) {
    std::shared_ptr<const AcousticPropagator> p;
    {
      std::lock_guard<std::mutex> lock(cache->m);
      auto& slot = cache->by_eps[eps];
      if (!slot) slot = std::make_shared<const AcousticPropagator>(phi.grid(), eps, mu0);
      p = slot;
    }
    return p->apply(phi, tau);
  };
}

SpectralField duhamel_integral(const SourceGenerator& psi, double t, double eps, double mu0,
                               int max_panels, double rel_tol) {
  if (t < 0.0) throw std::invalid_argument("duhamel_integral: t must be >= 0");
  static const Quadrature q = gauss_legendre(8);
  std::unique_ptr<AcousticPropagator> prop;
  auto level = [&](int m) {
    const double h = t / m;
    SpectralField acc = psi(t, eps);
    acc.set_zero();
    for (int k = 0; k < m; ++k)
      for (std::size_t i = 0; i < q.x.size(); ++i) {
        const double tau = h * (k + q.x[i]);
        SpectralField src = psi(t - tau, eps);
        if (!prop) prop = std::make_unique<AcousticPropagator>(src.grid(), eps, mu0);
        acc.axpy(h * q.w[i], prop->apply(src, tau));
      }
    return acc;
  };
  if (t == 0.0) {
    SpectralField z = psi(0.0, eps);
    z.set_zero();
    return z;
  }
  SpectralField prev = level(1);
  for (int m = 2; m <= max_panels; m *= 2) {
    SpectralField cur = level(m);
    SpectralField d = cur;
    d.axpy(-1.0, prev);
    const double nc = l2_norm(cur);
    if (l2_norm(d) <= rel_tol * nc || nc == 0.0) return cur;
    prev = std::move(cur);
  }
  throw std::runtime_error("duhamel_integral: quadrature failure, panel budget exhausted");
}

SweepResult measure_duhamel(const DuhamelSpec& spec, const SourceGenerator* gen_in) {
  validate_duhamel(spec);
  Grid g(spec.n, spec.L);
  FilterBank bank(g);
  const SourceGenerator gen = gen_in ? *gen_in : resonant_source(gaussian_bump(g, spec.width), spec.mu0);
  const double T = sweep_horizon(spec.T, spec.eps_list, spec.L);
  const std::vector<double> ts = linspace(0.0, T, spec.nt);
  const double p = spec.p, pc = conj_exp(p);

  SweepResult r;
  r.kind = "duhamel";
  r.target = 1.0 - 2.0 / p;
  for (double eps : spec.eps_list) {
    std::vector<double> lv, rv;
    for (double t : ts) {
      const SpectralField I = duhamel_integral(gen, t, eps, spec.mu0, spec.max_panels);
      lv.push_back(besov_norm(I, spec.s, p, 1.0, bank));
      const SpectralField s = gen(t, eps);
      rv.push_back(besov_norm(s, spec.s + 2.0 - 8.0 / p, pc, 1.0, bank) +
                   besov_norm(s, spec.s + 1.5 - 3.0 / p, 2.0, 1.0, bank));
    }
    const double lhs = time_norm(ts, lv, spec.r), rhs = time_norm(ts, rv, spec.r);
    r.eps.push_back(eps);
    r.x.push_back(T);
    r.lhs.push_back(lhs);
    r.rhs.push_back(rhs);
    r.ratio.push_back(rhs > 0.0 ? lhs / rhs : 0.0);
  }
  const bool zero = std::all_of(r.ratio.begin(), r.ratio.end(), [](double x) { return x == 0.0; });
  r.fit = zero ? degenerate_fit(int(r.ratio.size())) : fit_rate(r.eps, r.ratio, FitAxes::log_log);
  double spread = 0.0;
  if (!zero) {
    const auto [mn, mx] = std::minmax_element(r.ratio.begin(), r.ratio.end());
    spread = *mx / *mn - 1.0;
  }
  r.params_json = json{{"n", spec.n}, {"L", spec.L}, {"mu0", spec.mu0}, {"p", p},
                       {"r", std::isinf(spec.r) ? json("inf") : json(spec.r)},
                       {"s", spec.s}, {"T", T}, {"nt", spec.nt}, {"eps_list", spec.eps_list}}
                      .dump();
  r.extra_json = json{{"spread", spread}}.dump();
  return r;
}

// ---------------------------------------------------------------------------

double upper_bound_constant(double eps, double mu0, int samples, std::uint64_t seed) {
  // Fixed wavenumbers |xi| in [0.5, 2]; the same set for every eps.
  std::mt19937_64 wrng(12345);
  std::normal_distribution<double> nd;
  std::uniform_real_distribution<double> ud(0.5, 2.0);
  std::vector<Vec3> xis;
  while (xis.size() < 16) {
    Vec3 d{nd(wrng), nd(wrng), nd(wrng)};
    const double k = std::sqrt(d[0] * d[0] + d[1] * d[1] + d[2] * d[2]), m = ud(wrng);
    const Vec3 xi{d[0] / k * m, d[1] / k * m, d[2] / k * m};
    if (!is_degenerate(m, eps, mu0)) xis.push_back(xi);
  }
  std::vector<std::pair<Mat4, Mat4>> P;
  for (const auto& xi : xis) P.push_back(projections(xi, eps, mu0));
  std::mt19937_64 rng(seed);
  double best = 0.0;
  for (int s = 0; s < samples; ++s) {
    Eigen::Vector4cd V;
    for (int i = 0; i < 4; ++i) V(i) = cplx(nd(rng), nd(rng));
    const auto& [Pp, Pm] = P[s % P.size()];
    best = std::max(best, ((Pp * V).squaredNorm() + (Pm * V).squaredNorm()) / V.squaredNorm());
  }
  return best;
}

double multiplier_ratio(const Grid& g, int j, double eps, double mu0, double p, int members,
                        std::uint64_t seed) {
  FilterBank bank(g);
  if (!bank.has_block(j)) throw std::invalid_argument("multiplier_ratio: block j outside the bank");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> nd;
  double best = 0.0;
  for (int m = 0; m < members; ++m) {
    SpectralField f(g, 4);
    for (int c = 0; c < 4; ++c)
      for (const auto& [i, w] : bank.entries(j)) f.at(c, i) = cplx(nd(rng), nd(rng));
    enforce_real(f);
    const SpectralField b = dyadic_block(j, f, bank);
    const double den = lp_norm(b, p);
    if (den == 0.0) continue;
    for (int sign : {1, -1})
      best = std::max(best, lp_norm(apply_projection(b, eps, mu0, sign), p) / den);
  }
  return best;
}

double heat_envelope_ratio(const Grid& g, int j, double eps, double mu0, double c,
                           const std::vector<double>& t_list) {
  FilterBank bank(g);
  if (!bank.has_block(j)) throw std::invalid_argument("heat_envelope_ratio: block j outside the bank");
  const SpectralField b = dyadic_block(j, lattice_delta(g), bank);
  const double n0 = l2_norm(b), q = std::ldexp(1.0, 2 * j);
  const AcousticPropagator prop(g, eps, mu0);
  double best = 0.0;
  for (double t : t_list) best = std::max(best, l2_norm(prop.apply(b, t)) / (std::exp(-c * q * t) * n0));
  return best;
}

// ---------------------------------------------------------------------------

Calibration calibrate(int n) {
  Calibration cal;
  cal.version = "grid" + std::to_string(n);
  const double mu0 = 1.0;
  // Case (i) boundary from the block support |xi| <= (8/3) 2^j: mu0 eps |xi|
  // stays below the degeneracy window, so every block mode is underdamped.
  cal.d2_times_mu0 = (1.0 - 2.0 * kDegeneracyTol) * 3.0 / 8.0;

  const Grid g(n, 16.0);
  const FilterBank bank(g);
  const int js[] = {-1, 0, 1};

  double cmin = kInf;
  for (int j : js) {
    LocalizedSpec s;
    s.n = n, s.L = 16.0, s.j = j, s.mu0 = mu0, s.p = 2.0, s.regime = 1;
    s.eps = 0.5 * cal.d2(mu0) * std::ldexp(1.0, -j);
    const double q = std::ldexp(1.0, 2 * j);
    s.t_list = linspace(4.0 / q, 16.0 / q, 12);
    const SweepResult r = measure_localized(s, cal);
    cmin = std::min(cmin, -r.fit.slope / q);
  }
  cal.c_per_mu0 = cmin / mu0;

  double env = 0.0, heat = 0.0;
  for (int j : js) {
    const double eps = 0.5 * cal.d2(mu0) * std::ldexp(1.0, -j);
    const double q = std::ldexp(1.0, 2 * j);
    const std::vector<double> ts = linspace(0.1 / q, 4.0 / q, 16);
    for (double p : {2.0, 4.0}) {
      LocalizedSpec s;
      s.n = n, s.L = 16.0, s.j = j, s.mu0 = mu0, s.p = p, s.eps = eps, s.regime = 1, s.t_list = ts;
      const SweepResult r = measure_localized(s, cal);
      env = std::max(env, *std::max_element(r.ratio.begin(), r.ratio.end()));
    }
    heat = std::max(heat, heat_envelope_ratio(g, j, eps, mu0, cal.c(mu0), ts));
  }
  cal.envelope_constant = 2.0 * env;
  cal.heat_constant = 2.0 * heat;

  // Case (ii): strongly overdamped block on a unit-spacing lattice.
  double slow = kInf;
  for (double eps : {1.0, 0.5}) {
    LocalizedSpec s;
    s.n = n, s.L = 2.0 * M_PI, s.j = 2, s.mu0 = mu0, s.p = 2.0, s.eps = eps, s.regime = 2;
    const double rate0 = 0.5 / (mu0 * eps * eps);
    s.t_list = linspace(0.5 / rate0, 3.0 / rate0, 12);
    const SweepResult r = measure_localized(s, cal);
    slow = std::min(slow, -r.fit.slope * mu0 * eps * eps);
  }
  cal.slow_rate_times_mu0 = slow;
  double env2 = 0.0;
  for (double eps : {1.0, 0.5})
    for (double p : {2.0, 4.0}) {
      LocalizedSpec s;
      s.n = n, s.L = 2.0 * M_PI, s.j = 2, s.mu0 = mu0, s.p = p, s.eps = eps, s.regime = 2;
      const double rate = cal.slow_rate(eps, mu0);
      s.t_list = linspace(0.1 / rate, 3.0 / rate, 16);
      const SweepResult r = measure_localized(s, cal);
      env2 = std::max(env2, *std::max_element(r.ratio.begin(), r.ratio.end()));
    }
  cal.envelope_constant_ii = 2.0 * env2;

  // eps0: largest eps whose projection bound is within 10% of the eps -> 0 value.
  const double ref = upper_bound_constant(1.0 / 64, mu0, 1000, 7);
  cal.eps0 = 1.0 / 64;
  double upper = ref;
  for (double eps = 1.0; eps >= 1.0 / 64; eps *= 0.5) {
    const double C = upper_bound_constant(eps, mu0, 1000, 7);
    if (C <= 1.1 * ref) {
      cal.eps0 = eps;
      break;
    }
  }
  for (double eps = cal.eps0; eps >= 1.0 / 64; eps *= 0.5)
    upper = std::max(upper, upper_bound_constant(eps, mu0, 1000, 7));
  cal.upper_constant = 1.1 * upper;

  // d0: scan eps 2^j upward on block 0, below the case (i) boundary, while
  // the multiplier bound stays within twice its small-eps value.
  double base = 0.0, mult = 0.0;
  cal.d0_times_mu0 = 0.0;
  for (double y = 1.0 / 64; y <= cal.d2(mu0); y *= std::exp2(0.25)) {
    double m = 0.0;
    try {
      for (double p : {2.0, 4.0}) m = std::max(m, multiplier_ratio(g, 0, y, mu0, p, 20, 11));
    } catch (const DegenerateSymbol&) {
      break;
    }
    if (base == 0.0) base = m;
    if (m > 2.0 * base) break;
    cal.d0_times_mu0 = y * mu0;
    mult = std::max(mult, m);
  }
  cal.multiplier_constant = 1.5 * mult;
  return cal;
}

}  // namespace lowmach
