#include "lowmach/stationary.hpp"

#include <algorithm>
#include <cmath>

#include "json.hpp"
#include "lowmach/fft.hpp"
#include "lowmach/field_ops.hpp"

namespace lowmach {

namespace {

double bnorm(const SpectralField& f, double s, const FilterBank& bank) { return besov_norm(f, s, 2.0, kInf, bank); }

// Dealiased products a * v_c for every component of v.
SpectralField scale_field(const RealGrid& a, const std::vector<RealGrid>& v, const Grid& g) {
  SpectralField out(g, int(v.size()));
  for (std::size_t c = 0; c < v.size(); ++c) out.set_component(int(c), product(a, v[c], g));
  return out;
}

// div(b v) for scalar b and vector v.
SpectralField div_product(const SpectralField& b, const SpectralField& v) {
  return div(scale_field(to_real(b, 0), to_real_all(v), b.grid()));
}

void check_vector(const SpectralField& f, const char* who) {
  if (f.components() != 3) throw std::invalid_argument(std::string(who) + ": 3-component field expected");
}

// Tracks update norms; engages damping on the first increase and fails
// after three consecutive increases.
struct ContractionMonitor {
  std::vector<double>* hist;
  int rising = 0;
  bool damp = false;

  void push(double u, bool allow_damp, const char* who) {
    if (!hist->empty() && u > hist->back()) {
      ++rising;
      if (hist->size() >= 2 && allow_damp) damp = true;
    } else {
      rising = 0;
    }
    hist->push_back(u);
    if (!std::isfinite(u) || rising >= 3)
      throw SolverFailure(std::string(who) + ": iteration does not contract (force too large)");
  }
};

}  // namespace

RealGrid density(const SpectralField& b, double eps, const PhysicalParams& prm) {
  RealGrid rho = to_real(b, 0);
  for (double& r : rho) {
    r = prm.rho_inf + eps * r;
    if (!(r > 0.0)) throw DensityFailure("density rho_inf + eps b is not positive on the grid");
  }
  return rho;
}

double force_norm(const SpectralField& F, const FilterBank& bank) {
  return bnorm(F, -1.5, bank) + sobolev_norm(F, 3.0);
}

SpectralField make_force(const Grid& g, std::uint64_t seed, double amplitude, int j_lo, int j_hi) {
  if (amplitude < 0.0) throw std::invalid_argument("make_force: amplitude must be >= 0");
  FilterBank bank(g);
  if (j_lo > j_hi || !bank.has_block(j_lo) || !bank.has_block(j_hi))
    throw std::invalid_argument("make_force: band outside the resolved shells [" + std::to_string(bank.j_min()) +
                                ", " + std::to_string(bank.j_max()) + "]");
  SpectralField F(g, 3);
  if (amplitude == 0.0) return F;
  for (int c = 0; c < 3; ++c)
    F.set_component(c, random_shell_field(g, bank, seed * 7919 + c, j_lo, j_hi, 0.0, g.dealias_k()));
  remove_mean(F);
  const double n = force_norm(F, bank);
  if (n == 0.0) throw std::invalid_argument("make_force: band contains no lattice modes");
  F *= amplitude / n;
  return F;
}

IncompressibleStationary solve_incompressible_stationary(const SpectralField& F, const PhysicalParams& prm,
                                                         double tol, int max_iter) {
  prm.validate();
  check_vector(F, "incompressible stationary");
  const Grid& g = F.grid();
  FilterBank bank(g);
  const double k = prm.rho_inf / prm.mu;
  const SpectralField PF = helmholtz_P(F);
  IncompressibleStationary out{SpectralField(g, 3), 0.0, 0, {}};
  ContractionMonitor mon{&out.updates};
  for (int it = 1; it <= max_iter; ++it) {
    const auto ur = to_real_all(out.u);
    SpectralField rhs = helmholtz_P(div_tensor(ur, ur, g));
    rhs -= PF;
    SpectralField un = inv_laplacian(rhs, 1, true);
    un *= k;
    const double upd = bnorm(un - out.u, 0.5, bank);
    out.u = std::move(un);
    out.iterations = it;
    mon.push(upd, false, "incompressible stationary");
    if (upd < tol) break;
    if (it == max_iter) throw SolverFailure("incompressible stationary: no convergence within max_iter");
  }
  const auto ur = to_real_all(out.u);
  SpectralField res = prm.mu * laplacian(out.u);
  res.axpy(-prm.rho_inf, div_tensor(ur, ur, g));
  res.axpy(prm.rho_inf, F);
  out.residual = bnorm(helmholtz_P(res), -1.5, bank);
  return out;
}

SpectralField eval_g_eps(const SpectralField& b, const SpectralField& v, const SpectralField& F, double eps,
                         const PhysicalParams& prm) {
  check_vector(v, "eval_g_eps");
  check_vector(F, "eval_g_eps");
  if (!(eps > 0.0)) throw std::invalid_argument("eval_g_eps: eps must be positive");
  const Grid& g = b.grid();
  const RealGrid rho = density(b, eps, prm);
  const auto vr = to_real_all(v);

  // -div(rho v (x) v)
  const auto rv = to_real_all(scale_field(rho, vr, g));
  SpectralField out = div_tensor(rv, vr, g);
  out *= -1.0;

  // -eps^{-1} (P'(rho) - P'(rho_inf)) grad b
  const RealGrid br = to_real(b, 0);
  RealGrid d(g.size());
  for (std::size_t i = 0; i < d.size(); ++i) d[i] = prm.pressure.dP_increment(prm.rho_inf, eps * br[i]) / eps;
  out -= scale_field(d, to_real_all(grad(b)), g);

  // rho F
  out += scale_field(rho, to_real_all(F), g);
  return out;
}

StationaryResiduals stationary_residuals(const SpectralField& b, const SpectralField& v, const SpectralField& F,
                                         double eps, const PhysicalParams& prm) {
  const Grid& g = b.grid();
  FilterBank bank(g);
  const RealGrid rho = density(b, eps, prm);
  const auto vr = to_real_all(v);
  const SpectralField rv = scale_field(rho, vr, g);
  StationaryResiduals r;
  r.mass = bnorm(div(rv), -0.5, bank);

  SpectralField m = div_tensor(to_real_all(rv), vr, g);
  m.axpy(-prm.mu, laplacian(v));
  m.axpy(-(prm.mu + prm.mu_prime), grad(div(v)));
  const RealGrid br = to_real(b, 0);
  RealGrid p(g.size());
  for (std::size_t i = 0; i < p.size(); ++i) p[i] = prm.pressure.P_increment(prm.rho_inf, eps * br[i]) / (eps * eps);
  m += grad(dealiased(from_real(g, p)));
  m -= scale_field(rho, to_real_all(F), g);
  r.momentum = bnorm(m, -1.5, bank);
  return r;
}

StationaryPair solve_compressible_stationary(const SpectralField& F, double eps, const PhysicalParams& prm,
                                             const StationaryOptions& opt, const StationaryPair* guess) {
  prm.validate();
  check_vector(F, "compressible stationary");
  if (!(eps > 0.0) || eps > 1.0) throw std::invalid_argument("compressible stationary: requires 0 < eps <= 1");
  const Grid& g = F.grid();
  FilterBank bank(g);
  const bool cut = opt.j_cut <= bank.j_max();
  const double a = prm.alpha(), be = prm.beta(), gm2 = 1.0 / (prm.gamma() * prm.gamma());

  StationaryPair s{SpectralField(g, 1), SpectralField(g, 3), 0.0, 0.0, 0, false, {}};
  if (guess) {
    s.b_star = guess->b_star;
    s.v_star = guess->v_star;
  }
  ContractionMonitor mon{&s.updates};
  for (int it = 1; it <= opt.max_iter; ++it) {
    const SpectralField gv = eval_g_eps(s.b_star, s.v_star, F, eps, prm);
    SpectralField rhs1 = inv_laplacian(div(gv), 1);
    rhs1 *= eps * gm2;

    // Inner Neumann solve of b + eps^2 alpha S_j div(b v) = rhs1.
    SpectralField bn = rhs1;
    for (int k = 0;; ++k) {
      SpectralField t = div_product(bn, s.v_star);
      if (cut) t = low_cut(opt.j_cut, t, bank);
      SpectralField next = rhs1;
      next.axpy(-eps * eps * a, t);
      const double d = l2_norm(next - bn), nn = l2_norm(next);
      bn = std::move(next);
      if (d <= 1e-12 * nn || nn == 0.0) break;
      if (k == 200 || !std::isfinite(d))
        throw SolverFailure("compressible stationary: inner transport solve does not contract (force too large)");
    }

    SpectralField vn = inv_laplacian(grad(bn), 1);
    vn *= be / eps;
    vn.axpy(-1.0 / prm.nu(), inv_laplacian(helmholtz_Q(gv), 1, true));
    vn.axpy(-1.0 / prm.mu, inv_laplacian(helmholtz_P(gv), 1, true));

    const double upd = bnorm(bn - s.b_star, -0.5, bank) / eps + bnorm(vn - s.v_star, 0.5, bank);
    mon.push(upd, opt.relax, "compressible stationary");
    if (mon.damp && !s.relaxed) s.relaxed = true;
    if (mon.damp) {
      s.b_star.axpy(0.5, bn - s.b_star);
      s.v_star.axpy(0.5, vn - s.v_star);
    } else {
      s.b_star = std::move(bn);
      s.v_star = std::move(vn);
    }
    s.iterations = it;
    if (upd < opt.tol) break;
    if (it == opt.max_iter) throw SolverFailure("compressible stationary: no convergence within max_iter");
  }
  density(s.b_star, eps, prm);
  const StationaryResiduals r = stationary_residuals(s.b_star, s.v_star, F, eps, prm);
  s.residual_mass = r.mass;
  s.residual_momentum = r.momentum;
  return s;
}

std::string StationaryLimit::json() const {
  auto fitj = [](const RateFit& f) { return nlohmann::json::parse(rate_fit_json(f)); };
  nlohmann::json j{{"eps", eps},       {"b_norm", b_norm},  {"q_norm", q_norm},   {"p_norm", p_norm},
                   {"total", total},   {"residual", residual}, {"rate_fit", fitj(fit)}, {"q_fit", fitj(q_fit)},
                   {"p_fit", fitj(p_fit)}, {"b_fit", fitj(b_fit)}};
  return j.dump(2);
}

StationaryLimit measure_stationary_limit(const SpectralField& F, const std::vector<double>& eps_list,
                                         const PhysicalParams& prm, const StationaryOptions& opt) {
  const Grid& g = F.grid();
  FilterBank bank(g);
  const SpectralField u = solve_incompressible_stationary(F, prm, opt.tol).u;
  StationaryLimit out;
  for (double eps : eps_list) {
    const StationaryPair s = solve_compressible_stationary(F, eps, prm, opt);
    out.eps.push_back(eps);
    out.b_norm.push_back(bnorm(s.b_star, -0.5, bank));
    out.q_norm.push_back(bnorm(helmholtz_Q(s.v_star), 0.5, bank));
    out.p_norm.push_back(bnorm(helmholtz_P(s.v_star) - u, 0.5, bank));
    out.total.push_back(out.b_norm.back() + out.q_norm.back() + out.p_norm.back());
    out.residual.push_back(std::max(s.residual_mass, s.residual_momentum));
  }
  auto fit = [&](const std::vector<double>& y) {
    const bool zero = std::all_of(y.begin(), y.end(), [](double x) { return x == 0.0; });
    return zero ? degenerate_fit(int(y.size())) : fit_rate(out.eps, y, FitAxes::log_log);
  };
  out.fit = fit(out.total);
  out.q_fit = fit(out.q_norm);
  out.p_fit = fit(out.p_norm);
  out.b_fit = fit(out.b_norm);
  return out;
}

double force_threshold(const SpectralField& shape, double eps, const PhysicalParams& prm, double lo, double hi,
                       int steps) {
  FilterBank bank(shape.grid());
  const double n = force_norm(shape, bank);
  if (n == 0.0) throw std::invalid_argument("force_threshold: zero force shape");
  auto ok = [&](double amp) {
    SpectralField F = shape;
    F *= amp / n;
    StationaryOptions opt;
    opt.tol = 1e-8;
    opt.relax = false;
    try {
      solve_compressible_stationary(F, eps, prm, opt);
      return true;
    } catch (const SolverFailure&) {
      return false;
    } catch (const DensityFailure&) {
      return false;
    }
  };
  if (!ok(lo)) throw SolverFailure("force_threshold: lower amplitude already fails");
  if (ok(hi)) return hi;
  for (int k = 0; k < steps; ++k) {
    const double mid = std::sqrt(lo * hi);
    (ok(mid) ? lo : hi) = mid;
  }
  return lo;
}

std::string stationary_report_json(const StationaryPair& s, double eps, const SpectralField& F,
                                   const PhysicalParams& prm) {
  FilterBank bank(F.grid());
  nlohmann::json j;
  j["eps"] = eps;
  j["params"] = nlohmann::json::parse(prm.json());
  j["force_norms"] = {{"besov_-3/2_2_inf", bnorm(F, -1.5, bank)},
                      {"besov_-2/3_2_inf", bnorm(F, -2.0 / 3.0, bank)},
                      {"sobolev_3", sobolev_norm(F, 3.0)}};
  j["solution_norms"] = {{"b_besov_-1/2_2_inf", bnorm(s.b_star, -0.5, bank)},
                         {"b_sobolev_4", sobolev_norm(s.b_star, 4.0)},
                         {"v_besov_1/2_2_inf", bnorm(s.v_star, 0.5, bank)},
                         {"v_sobolev_5", sobolev_norm(s.v_star, 5.0)}};
  j["residuals"] = {{"mass", s.residual_mass}, {"momentum", s.residual_momentum}};
  j["iterations"] = s.iterations;
  j["relaxed"] = s.relaxed;
  return j.dump(2);
}

}  // namespace lowmach
