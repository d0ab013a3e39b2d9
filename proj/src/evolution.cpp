#include "lowmach/evolution.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <random>
#include <thread>

#include "json.hpp"
#include "lowmach/acoustic_measure.hpp"
#include "lowmach/fft.hpp"
#include "lowmach/field_ops.hpp"
#include "lowmach/stationary.hpp"

namespace lowmach {

namespace {

using json = nlohmann::json;

void check_scalar(const SpectralField& f, const char* who) {
  if (f.components() != 1) throw std::invalid_argument(std::string(who) + ": scalar field expected");
}
void check_vector(const SpectralField& f, const char* who) {
  if (f.components() != 3) throw std::invalid_argument(std::string(who) + ": 3-component field expected");
}

std::vector<RealGrid> add(std::vector<RealGrid> a, const std::vector<RealGrid>& b) {
  for (std::size_t c = 0; c < a.size(); ++c)
    for (std::size_t i = 0; i < a[c].size(); ++i) a[c][i] += b[c][i];
  return a;
}

// Pointwise sum over terms a_k * v_k (scalar times vector), dealiased.
SpectralField weighted_sum(const Grid& g, const std::vector<std::pair<const RealGrid*, const std::vector<RealGrid>*>>& terms) {
  std::vector<RealGrid> out(3, RealGrid(g.size(), 0.0));
  for (auto [a, v] : terms)
    for (int c = 0; c < 3; ++c)
      for (std::size_t i = 0; i < g.size(); ++i) out[c][i] += (*a)[i] * (*v)[c][i];
  return dealiased(from_real(g, out));
}

// Composite samples, band-checked and truncated to the 2/3 band.
RealGrid composite(const Grid& g, const RealGrid& x, const char* who) {
  return to_real(dealiased(band_checked(g, x, 1e-4, who)), 0);
}

bool phi_constant(const PhysicalParams& prm) { return prm.pressure.kind == PressureLaw::Kind::quadratic; }

// (Phi(rho1 - rho_inf) - Phi(rho2 - rho_inf)) / eps with rho1 - rho2 = eps d.
double phi_difference(const PhysicalParams& prm, double rho1, double rho2, double d, double eps) {
  const double dinc = prm.pressure.dP_increment(rho2, eps * d) / eps;
  return (dinc * rho2 - prm.pressure.dP(rho2) * d) / (rho1 * rho2);
}

std::vector<double> geomspace(double a, double b, int n) {
  std::vector<double> v(n);
  for (int i = 0; i < n; ++i) v[i] = a * std::pow(b / a, n == 1 ? 0.0 : double(i) / (n - 1));
  return v;
}

std::string fmt(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

SpectralField slice(const SpectralField& u, int c0, int m) {
  SpectralField out(u.grid(), m);
  std::copy(u.comp(c0), u.comp(c0) + m * u.modes(), out.comp(0));
  return out;
}

void put(SpectralField& u, int c0, const SpectralField& part) {
  std::copy(part.comp(0), part.comp(0) + part.components() * part.modes(), u.comp(c0));
}

void check_eps_list(const std::vector<double>& eps) {
  if (eps.size() < 4) throw std::invalid_argument("eps_list needs at least 4 entries for a rate fit");
  for (std::size_t i = 0; i < eps.size(); ++i) {
    if (!(eps[i] > 0.0 && eps[i] <= 1.0)) throw std::invalid_argument("eps_list entries must lie in (0, 1]");
    if (i >= 2 && std::abs(eps[i] / eps[i - 1] - eps[1] / eps[0]) > 1e-9 * eps[1] / eps[0])
      throw std::invalid_argument("eps_list must be geometric");
  }
}

SpectralField pack4(const SpectralField& a, const SpectralField& v) {
  SpectralField out(a.grid(), 4);
  put(out, 0, a);
  put(out, 1, v);
  return out;
}

}  // namespace

StationaryBackground StationaryBackground::zero(const Grid& g) {
  return {SpectralField(g, 1), SpectralField(g, 3), SpectralField(g, 3)};
}

SpectralField HTerms::total() const {
  SpectralField t = h1;
  t += h2;
  t += h3;
  t += h4;
  t += g2;
  return t;
}

SpectralField lame(const SpectralField& v, const PhysicalParams& prm) {
  check_vector(v, "lame");
  SpectralField out = laplacian(v);
  out *= prm.mu;
  out.axpy(prm.mu + prm.mu_prime, grad(div(v)));
  return out;
}

// ---------------------------------------------------------------------------

PerturbationModel::PerturbationModel(const StationaryBackground& bg, double eps, const PhysicalParams& prm)
    : bg_(bg), eps_(eps), prm_(prm) {
  prm.validate();
  check_scalar(bg.b_star, "perturbation model");
  check_vector(bg.v_star, "perturbation model");
  check_vector(bg.u_star, "perturbation model");
  if (!(eps > 0.0)) throw std::invalid_argument("perturbation model: eps must be positive");
  b_star_r_ = to_real(bg.b_star, 0);
  v_star_r_ = to_real_all(bg.v_star);
  u_star_r_ = to_real_all(bg.u_star);
  grad_b_star_r_ = to_real_all(grad(bg.b_star));
  a_v_star_r_ = to_real_all(lame(bg.v_star, prm));
}

NonlinearFG PerturbationModel::fg(const SpectralField& sigma, const SpectralField& w) const {
  check_scalar(sigma, "eval_nonlinear_fg");
  check_vector(w, "eval_nonlinear_fg");
  const Grid& g = sigma.grid();
  const double rinf = prm_.rho_inf, e = eps_;
  const RealGrid sr = to_real(sigma, 0);
  const auto wr = to_real_all(w);
  const auto vr = add(v_star_r_, wr);
  RealGrid rho(g.size()), rho_s(g.size());
  for (std::size_t i = 0; i < g.size(); ++i) {
    rho_s[i] = rinf + e * b_star_r_[i];
    rho[i] = rho_s[i] + e * sr[i];
    if (!(rho[i] > 0.0)) throw DensityFailure("density rho_inf + eps (b* + sigma) is not positive on the grid");
  }

  // f = -div((v* + w) sigma + b* w)
  std::vector<RealGrid> q(3, RealGrid(g.size()));
  for (int c = 0; c < 3; ++c)
    for (std::size_t i = 0; i < g.size(); ++i) q[c][i] = vr[c][i] * sr[i] + b_star_r_[i] * wr[c][i];
  SpectralField f = div(dealiased(from_real(g, q)));
  f *= -1.0;

  // g1
  SpectralField gout = advect(vr, w);
  gout += advect(wr, bg_.v_star);
  gout *= -1.0;

  // g3 + g4 (+ g2)
  RealGrid psi_d(g.size()), psi_s(g.size());
  for (std::size_t i = 0; i < g.size(); ++i) {
    psi_d[i] = -e * sr[i] / (rho[i] * rho_s[i]);
    psi_s[i] = -e * b_star_r_[i] / (rho_s[i] * rinf);
  }
  psi_d = composite(g, psi_d, "eval_nonlinear_fg");
  psi_s = composite(g, psi_s, "eval_nonlinear_fg");
  const auto aw = to_real_all(lame(w, prm_));
  const auto av = add(a_v_star_r_, aw);
  std::vector<std::pair<const RealGrid*, const std::vector<RealGrid>*>> terms{{&psi_d, &av}, {&psi_s, &aw}};

  RealGrid d1, d2;
  std::vector<RealGrid> gs;
  if (!phi_constant(prm_)) {
    d1.resize(g.size());
    d2.resize(g.size());
    for (std::size_t i = 0; i < g.size(); ++i) {
      d1[i] = -phi_difference(prm_, rho[i], rho_s[i], sr[i], e);
      d2[i] = -phi_difference(prm_, rho[i], rinf, b_star_r_[i] + sr[i], e);
    }
    d1 = composite(g, d1, "eval_nonlinear_fg");
    d2 = composite(g, d2, "eval_nonlinear_fg");
    gs = to_real_all(grad(sigma));
    terms.push_back({&d1, &grad_b_star_r_});
    terms.push_back({&d2, &gs});
  }
  gout += weighted_sum(g, terms);
  return {std::move(f), std::move(gout)};
}

HTerms PerturbationModel::h(const SpectralField& sigma, const SpectralField& w, const SpectralField& u_tilde) const {
  check_scalar(sigma, "eval_h_terms");
  check_vector(w, "eval_h_terms");
  check_vector(u_tilde, "eval_h_terms");
  const Grid& g = sigma.grid();
  const double rinf = prm_.rho_inf, e = eps_;
  const SpectralField w1 = helmholtz_P(w) - u_tilde;
  const SpectralField qw = helmholtz_Q(w);
  const SpectralField v = bg_.v_star + w;
  const SpectralField vmu = bg_.v_star - bg_.u_star;
  const auto w1r = to_real_all(w1), qwr = to_real_all(qw), utr = to_real_all(u_tilde), vmur = to_real_all(vmu);
  const auto ur = add(u_star_r_, utr);

  HTerms out{SpectralField(g, 3), SpectralField(g, 3), SpectralField(g, 3), SpectralField(g, 3), SpectralField(g, 3)};
  out.h1 = advect(w1r, v);
  out.h1 += advect(ur, w1);
  out.h1 *= -1.0;

  out.h2 = advect(qwr, v);
  out.h2 += advect(ur, qw);
  out.h2 += advect(utr, vmu);
  out.h2 += advect(vmur, w);
  out.h2 *= -1.0;

  const RealGrid sr = to_real(sigma, 0);
  RealGrid rho(g.size()), rho_s(g.size()), psi_d(g.size()), psi_s(g.size());
  for (std::size_t i = 0; i < g.size(); ++i) {
    rho_s[i] = rinf + e * b_star_r_[i];
    rho[i] = rho_s[i] + e * sr[i];
    if (!(rho[i] > 0.0)) throw DensityFailure("density rho_inf + eps (b* + sigma) is not positive on the grid");
    psi_d[i] = -e * sr[i] / (rho[i] * rho_s[i]);
    psi_s[i] = -e * b_star_r_[i] / (rho_s[i] * rinf);
  }
  psi_d = composite(g, psi_d, "eval_h_terms");
  psi_s = composite(g, psi_s, "eval_h_terms");
  const auto aw = to_real_all(lame(w, prm_));
  const auto av = add(a_v_star_r_, aw);
  out.h3 = weighted_sum(g, {{&psi_d, &av}});
  out.h4 = weighted_sum(g, {{&psi_s, &aw}});

  if (!phi_constant(prm_)) {
    RealGrid d1(g.size()), d2(g.size());
    for (std::size_t i = 0; i < g.size(); ++i) {
      d1[i] = -phi_difference(prm_, rho[i], rho_s[i], sr[i], e);
      d2[i] = -phi_difference(prm_, rho[i], rinf, b_star_r_[i] + sr[i], e);
    }
    d1 = composite(g, d1, "eval_h_terms");
    d2 = composite(g, d2, "eval_h_terms");
    const auto gs = to_real_all(grad(sigma));
    out.g2 = weighted_sum(g, {{&d1, &grad_b_star_r_}, {&d2, &gs}});
  }
  return out;
}

SpectralField PerturbationModel::incompressible_forcing(const SpectralField& u_tilde) const {
  check_vector(u_tilde, "incompressible forcing");
  const Grid& g = u_tilde.grid();
  const auto utr = to_real_all(u_tilde);
  const auto ur = add(u_star_r_, utr);
  SpectralField out = div_tensor(utr, ur, g);
  out += div_tensor(u_star_r_, utr, g);
  out = helmholtz_P(out);
  out *= -1.0;
  return out;
}

NonlinearFG eval_nonlinear_fg(const PerturbationState& s, const StationaryBackground& bg, double eps,
                              const PhysicalParams& prm) {
  return PerturbationModel(bg, eps, prm).fg(s.sigma, s.w);
}

HTerms eval_h_terms(const PerturbationState& s, const SpectralField& u_tilde, const StationaryBackground& bg,
                    double eps, const PhysicalParams& prm) {
  return PerturbationModel(bg, eps, prm).h(s.sigma, s.w, u_tilde);
}

FullRate full_system_rate(const SpectralField& b, const SpectralField& v, const SpectralField& F, double eps,
                          const PhysicalParams& prm) {
  check_scalar(b, "full_system_rate");
  check_vector(v, "full_system_rate");
  check_vector(F, "full_system_rate");
  const Grid& g = b.grid();
  const RealGrid rho = density(b, eps, prm);
  const RealGrid br = to_real(b, 0);
  const auto vr = to_real_all(v);

  std::vector<RealGrid> bv(3, RealGrid(g.size()));
  for (int c = 0; c < 3; ++c)
    for (std::size_t i = 0; i < g.size(); ++i) bv[c][i] = br[i] * vr[c][i];
  FullRate out{div(v), SpectralField(g, 3)};
  out.b *= -prm.rho_inf / eps;
  out.b -= div(dealiased(from_real(g, bv)));

  RealGrid psi(g.size()), phi(g.size());
  for (std::size_t i = 0; i < g.size(); ++i) {
    psi[i] = 1.0 / rho[i];
    phi[i] = -prm.pressure.dP(rho[i]) / (rho[i] * eps);
  }
  psi = composite(g, psi, "full_system_rate");
  phi = composite(g, phi, "full_system_rate");
  const auto av = to_real_all(lame(v, prm));
  const auto gb = to_real_all(grad(b));
  out.v = weighted_sum(g, {{&psi, &av}, {&phi, &gb}});
  out.v -= advect(vr, v);
  out.v += F;
  return out;
}

double equilibrium_defect(const SpectralField& b, const SpectralField& v, const SpectralField& F, double eps,
                          const PhysicalParams& prm) {
  const Grid& g = b.grid();
  FilterBank bank(g);
  const FullRate r = full_system_rate(b, v, F, eps, prm);
  const RealGrid rho = density(b, eps, prm);
  const RealGrid rb = to_real(r.b, 0);
  const auto rv = to_real_all(r.v), vr = to_real_all(v);
  std::vector<RealGrid> m(3, RealGrid(g.size()));
  for (int c = 0; c < 3; ++c)
    for (std::size_t i = 0; i < g.size(); ++i) m[c][i] = rho[i] * rv[c][i] + eps * vr[c][i] * rb[i];
  SpectralField mom = dealiased(from_real(g, m));
  remove_mean(mom);
  return std::max(besov_norm(r.b, -0.5, 2.0, kInf, bank), besov_norm(mom, -1.5, 2.0, kInf, bank));
}

// ---------------------------------------------------------------------------

double coefficient_rms(const SpectralField& f) {
  double s = 0.0;
  for (auto z : f.data()) s += std::norm(z);
  return std::sqrt(s);
}

Etdrk2::Etdrk2(const Grid& g, double eps_tilde, double mu0, double nu, int acoustic, Rhs N)
    : grid_(g), eps_tilde_(eps_tilde), mu0_(mu0), nu_(nu), acoustic_(acoustic), N_(std::move(N)) {
  if (acoustic != 0 && acoustic != 4) throw std::invalid_argument("Etdrk2: acoustic block has 0 or 4 components");
  if (!(eps_tilde > 0.0) || !(mu0 > 0.0) || !(nu >= 0.0)) throw std::invalid_argument("Etdrk2: bad coefficients");
}

const Etdrk2::Ops& Etdrk2::ops(double h) const {
  std::lock_guard<std::mutex> lock(mu_);
  auto it = cache_.find(h);
  if (it != cache_.end()) return *it->second;
  if (cache_.size() >= 6) cache_.erase(cache_.begin());
  auto o = std::make_shared<Ops>();
  for (int k = 0; k <= 2; ++k)
    o->k.push_back(std::make_unique<ModeOperator>(grid_, eps_tilde_, mu0_, nu_, scaled_phi(k, h)));
  return *cache_.emplace(h, std::move(o)).first->second;
}

SpectralField Etdrk2::linear(const SpectralField& u, int k, double h) const {
  if (!(h > 0.0)) throw std::invalid_argument("Etdrk2: step must be positive");
  if (u.components() < acoustic_) throw std::invalid_argument("Etdrk2: state too small for the acoustic block");
  const ModeOperator& op = *ops(h).k.at(k);
  SpectralField out(u.grid(), u.components());
  if (acoustic_ == 4) put(out, 0, op.apply(slice(u, 0, 4)));
  for (int c = acoustic_; c < u.components(); ++c) {
    const cplx* src = u.comp(c);
    cplx* dst = out.comp(c);
    for (std::size_t i = 0; i < u.modes(); ++i) dst[i] = op.transverse(i) * src[i];
  }
  return out;
}

Etdrk2::Step Etdrk2::step(const SpectralField& u, double h, double theta) const {
  SpectralField a = linear(u, 0, h);
  if (theta == 0.0) return {std::move(a), SpectralField(u.grid(), u.components())};
  SpectralField n0 = N_(u);
  n0 *= theta;
  a += linear(n0, 1, h);
  SpectralField d = N_(a);
  d *= theta;
  d -= n0;
  SpectralField corr = linear(d, 2, h);
  corr *= 1.0 / h;
  a += corr;
  return {std::move(a), std::move(corr)};
}

SpectralField advance(const Etdrk2& integ, SpectralField u, double t0, double t1, const StepControl& ctl,
                      AdvanceStats& stats, const std::function<void(SpectralField&)>& after_step) {
  if (t1 < t0) throw std::invalid_argument("advance: t1 < t0");
  double dt = stats.dt > 0.0 ? stats.dt : ctl.dt_max;
  dt = ctl.dt_max * std::ldexp(1.0, -int(std::ceil(std::log2(ctl.dt_max / dt) - 1e-12)));
  double t = t0;
  const double eps_t = 1e-13 * std::max(1.0, std::abs(t1));
  int steps = 0;
  while (t1 - t > eps_t) {
    const bool last = t1 - t <= dt;
    const double h = last ? t1 - t : dt;
    Etdrk2::Step st = integ.step(u, h, ctl.nonlinear_scale);
    const double err = coefficient_rms(st.error);
    const double tol = ctl.atol + ctl.rtol * coefficient_rms(st.u);
    if (err <= tol) {
      u = std::move(st.u);
      if (after_step) after_step(u);
      t = last ? t1 : t + h;
      ++stats.accepted;
      if (!last && err < tol / 8 && 2 * dt <= ctl.dt_max) dt *= 2;
    } else {
      ++stats.rejected;
      dt /= 2;
      if (dt < ctl.dt_min) throw StepRejected("advance: step size fell below dt_min");
    }
    if (++steps > ctl.max_steps) throw StepRejected("advance: step budget exhausted");
  }
  stats.dt = dt;
  return u;
}

PerturbationState step_compressible(const PerturbationState& s, const StationaryBackground& bg, double eps,
                                    double dt, const PhysicalParams& prm, const StepControl& ctl) {
  if (!(dt > 0.0)) throw std::invalid_argument("step_compressible: dt must be positive");
  auto model = std::make_shared<PerturbationModel>(bg, eps, prm);
  const double g2 = prm.gamma2();
  Etdrk2 integ(s.sigma.grid(), eps / prm.gamma(), prm.acoustic_mu0(), prm.heat_nu(), 4,
               [model, g2](const SpectralField& u) {
                 SpectralField sig = slice(u, 0, 1);
                 sig *= 1.0 / g2;
                 NonlinearFG n = model->fg(sig, slice(u, 1, 3));
                 n.f *= g2;
                 return pack4(n.f, n.g);
               });
  SpectralField sig = s.sigma;
  sig *= g2;
  Etdrk2::Step st = integ.step(pack4(sig, s.w), dt, ctl.nonlinear_scale);
  if (coefficient_rms(st.error) > ctl.atol + ctl.rtol * coefficient_rms(st.u))
    throw StepRejected("step_compressible: embedded error estimate exceeds the tolerance");
  PerturbationState out{slice(st.u, 0, 1), slice(st.u, 1, 3), s.t + dt};
  out.sigma *= 1.0 / g2;
  return out;
}

IncompressibleState step_incompressible(const IncompressibleState& s, const SpectralField& u_star, double dt,
                                        const PhysicalParams& prm, const StepControl& ctl) {
  if (!(dt > 0.0)) throw std::invalid_argument("step_incompressible: dt must be positive");
  check_vector(s.u_tilde, "step_incompressible");
  StationaryBackground bg = StationaryBackground::zero(u_star.grid());
  bg.u_star = u_star;
  auto model = std::make_shared<PerturbationModel>(bg, 1.0, prm);
  Etdrk2 integ(u_star.grid(), 1.0, 1.0, prm.heat_nu(), 0,
               [model](const SpectralField& u) { return model->incompressible_forcing(u); });
  Etdrk2::Step st = integ.step(s.u_tilde, dt, ctl.nonlinear_scale);
  if (coefficient_rms(st.error) > ctl.atol + ctl.rtol * coefficient_rms(st.u))
    throw StepRejected("step_incompressible: embedded error estimate exceeds the tolerance");
  return {helmholtz_P(st.u), s.t + dt};
}

// ---------------------------------------------------------------------------

SpectralField JointSystem::pack(const SpectralField& sigma, const SpectralField& w,
                                const SpectralField& u_tilde) const {
  SpectralField out(sigma.grid(), components());
  SpectralField s = sigma;
  s *= model->params().gamma2();
  put(out, 0, s);
  put(out, 1, w);
  put(out, 4, u_tilde);
  if (track_w1) put(out, 7, helmholtz_P(w) - u_tilde);
  return out;
}

SpectralField JointSystem::sigma(const SpectralField& u) const {
  SpectralField s = slice(u, 0, 1);
  s *= 1.0 / model->params().gamma2();
  return s;
}
SpectralField JointSystem::w(const SpectralField& u) const { return slice(u, 1, 3); }
SpectralField JointSystem::u_tilde(const SpectralField& u) const { return slice(u, 4, 3); }
SpectralField JointSystem::w1(const SpectralField& u) const {
  if (!track_w1) throw std::logic_error("JointSystem: w1 is not tracked");
  return slice(u, 7, 3);
}

void JointSystem::project(SpectralField& u) const {
  put(u, 4, helmholtz_P(slice(u, 4, 3)));
  if (track_w1) put(u, 7, helmholtz_P(slice(u, 7, 3)));
}

JointSystem make_joint_system(const StationaryBackground& bg, double eps, const PhysicalParams& prm,
                              bool track_w1) {
  JointSystem js;
  js.model = std::make_shared<PerturbationModel>(bg, eps, prm);
  js.track_w1 = track_w1;
  auto model = js.model;
  const double g2 = prm.gamma2();
  js.integ = std::make_unique<Etdrk2>(
      bg.b_star.grid(), eps / prm.gamma(), prm.acoustic_mu0(), prm.heat_nu(), 4,
      [model, g2, track_w1](const SpectralField& u) {
        SpectralField out(u.grid(), u.components());
        SpectralField sig = slice(u, 0, 1);
        sig *= 1.0 / g2;
        const SpectralField w = slice(u, 1, 3), ut = slice(u, 4, 3);
        NonlinearFG n = model->fg(sig, w);
        n.f *= g2;
        put(out, 0, n.f);
        put(out, 1, n.g);
        put(out, 4, model->incompressible_forcing(ut));
        if (track_w1) put(out, 7, helmholtz_P(model->h(sig, w, ut).total()));
        return out;
      });
  return js;
}

InitGenerator ill_prepared_data(const Grid& g, std::uint64_t seed, double amplitude, double width,
                                bool eps_scaled_density) {
  FilterBank bank(g);
  const SpectralField G = gaussian_bump(g, width).component(0);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  double e[3], en = 0.0;
  for (double& x : e) {
    x = gauss(rng);
    en += x * x;
  }
  SpectralField d(g, 4);
  put(d, 0, G);
  for (int c = 0; c < 3; ++c) {
    SpectralField t = G;
    t *= e[c] / std::sqrt(en);
    put(d, 1 + c, t);
  }
  dealias(d);
  remove_mean(d);
  const double nrm = besov_norm(d, 0.5, 2.0, kInf, bank) + sobolev_norm(d, 4.0);
  if (amplitude == 0.0 || nrm == 0.0) d.set_zero();
  else d *= amplitude / nrm;
  const SpectralField s0 = slice(d, 0, 1), w0 = slice(d, 1, 3);
  return [s0, w0, eps_scaled_density](double eps) {
    SpectralField s = s0;
    if (eps_scaled_density) s *= eps;
    return InitialData{s, w0};
  };
}

// ---------------------------------------------------------------------------

bool low_mach_hypotheses_hold(double p, double r, double s) {
  const double ir = std::isinf(r) ? 0.0 : 1.0 / r;
  return p > 2.0 && std::isfinite(p) && r > 2.0 && 0.5 + 2.0 * ir < s && s < 3.0 / p;
}

bool lp_corollary_hypotheses_hold(double p, double r) {
  const double ir = std::isinf(r) ? 0.0 : 1.0 / r;
  return p > 3.0 && std::isfinite(p) && r > 2.0 && 2.0 * ir < 1.0 - 3.0 / p;
}

void validate_low_mach(const LowMachSpec& spec) {
  std::vector<std::string> errs;
  if (!(spec.p > 2.0 && std::isfinite(spec.p))) errs.push_back("p must satisfy 2 < p < inf");
  if (!(spec.r > 2.0)) errs.push_back("r must satisfy 2 < r <= inf");
  const double ir = std::isinf(spec.r) ? 0.0 : 1.0 / spec.r;
  if (!(0.5 + 2.0 * ir < spec.s) && !spec.allow_outside_hypotheses) errs.push_back("violates 1/2 + 2/r < s");
  if (!(spec.s < 3.0 / spec.p)) errs.push_back("violates s < 3/p");
  try {
    check_eps_list(spec.eps_list);
  } catch (const std::invalid_argument& e) {
    errs.push_back(e.what());
  }
  if (spec.n < 8 || spec.n % 2) errs.push_back("n must be even and >= 8");
  if (!(spec.L > 0.0)) errs.push_back("L must be positive");
  if (spec.nt < 4) errs.push_back("nt must be >= 4");
  if (!(spec.data_width > 0.0)) errs.push_back("data_width must be positive");
  if (!(spec.delta >= 0.0)) errs.push_back("delta must be >= 0");
  if (spec.workers < 1) errs.push_back("workers must be >= 1");
  if (!spec.eps_list.empty()) {
    const double emin = *std::min_element(spec.eps_list.begin(), spec.eps_list.end());
    if (spec.T < 0.0 || spec.T > recurrence_guard(emin, spec.L))
      errs.push_back("T must lie in [0, 0.4 min(eps) L] (recurrence guard)");
  }
  try {
    spec.prm.validate();
  } catch (const std::invalid_argument& e) {
    errs.push_back(e.what());
  }
  if (!errs.empty()) {
    std::string m = "low-mach: ";
    for (std::size_t i = 0; i < errs.size(); ++i) m += (i ? "; " : "") + errs[i];
    throw std::invalid_argument(m);
  }
}

namespace {

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

RateFit fit_positive(const std::vector<LowMachEps>& rows, double LowMachEps::*field) {
  std::vector<double> x, y;
  for (const auto& r : rows)
    if (r.status == "ok" && r.*field > 0.0) {
      x.push_back(r.eps);
      y.push_back(r.*field);
    }
  if (x.size() < 4) return degenerate_fit(int(x.size()));
  return fit_rate(x, y, FitAxes::log_log);
}

json fit_json(const RateFit& f) { return json::parse(rate_fit_json(f)); }

LowMachEps run_one_eps(const LowMachSpec& spec, double eps, const SpectralField& F, const SpectralField& u_star,
                       const InitGenerator& init, const std::vector<double>& times) {
  LowMachEps row;
  row.eps = eps;
  const Grid& g = F.grid();
  FilterBank bank(g);
  const PhysicalParams& prm = spec.prm;
  try {
    StationaryPair pair = solve_compressible_stationary(F, eps, prm, StationaryOptions{1e-13, 400, INT_MAX, true});
    row.full_system_defect = equilibrium_defect(pair.b_star, pair.v_star, F, eps, prm);
    StationaryBackground bg{pair.b_star, pair.v_star, u_star};
    JointSystem js = make_joint_system(bg, eps, prm, spec.track_w1);
    {
      PerturbationState z{SpectralField(g, 1), SpectralField(g, 3), 0.0};
      z = step_compressible(z, bg, eps, 1.0, prm, spec.ctl);
      row.equilibrium = coefficient_rms(z.sigma) + coefficient_rms(z.w);
    }
    const InitialData d0 = init(eps);
    const SpectralField ut0 = helmholtz_P(pair.v_star + d0.w) - u_star;
    SpectralField u = js.pack(d0.sigma, d0.w, ut0);
    const cplx mean0 = zero_mode(d0.sigma, 0);
    AdvanceStats st;
    double w1_max = 0.0, w1_err = 0.0;
    for (std::size_t k = 0; k < times.size(); ++k) {
      if (k > 0)
        u = advance(*js.integ, std::move(u), times[k - 1], times[k], spec.ctl, st, [&js](SpectralField& x) { js.project(x); });
      const SpectralField sig = js.sigma(u), w = js.w(u), ut = js.u_tilde(u);
      const SpectralField qw = helmholtz_Q(w), w1 = helmholtz_P(w) - ut;
      row.t.push_back(times[k]);
      row.sigma_norm.push_back(besov_norm(sig, spec.s, spec.p, 1.0, bank));
      row.q_norm.push_back(besov_norm(qw, spec.s, spec.p, 1.0, bank));
      row.w1_norm.push_back(besov_norm(w1, spec.s, spec.p, 1.0, bank));
      row.lp_sum.push_back(lp_norm(sig, spec.p) + lp_norm(qw, spec.p) + lp_norm(w1, spec.p));
      row.bounded.push_back(besov_norm(ut, 0.5, 2.0, kInf, bank) + besov_norm(sig, 0.5, 2.0, kInf, bank) +
                            besov_norm(w, 0.5, 2.0, kInf, bank));
      row.sigma_mean_drift = std::max(row.sigma_mean_drift, std::abs(zero_mode(sig, 0) - mean0));
      if (spec.track_w1) {
        w1_err = std::max(w1_err, coefficient_rms(js.w1(u) - w1));
        w1_max = std::max(w1_max, coefficient_rms(w1));
      }
    }
    row.steps = st.accepted;
    row.rejected = st.rejected;
    row.w1_mismatch = w1_max > 0.0 ? w1_err / w1_max : w1_err;
    row.sigma_lr = time_norm(row.t, row.sigma_norm, spec.r);
    row.q_lr = time_norm(row.t, row.q_norm, spec.r);
    row.w1_lr = time_norm(row.t, row.w1_norm, spec.r);
    row.total = row.sigma_lr + row.q_lr + row.w1_lr;
    row.lp_total = time_norm(row.t, row.lp_sum, spec.r);
    row.sup_bound = spec.delta > 0.0 ? *std::max_element(row.bounded.begin(), row.bounded.end()) / spec.delta : 0.0;

    // Tail beyond T under the decay measured on the second half of the run.
    std::vector<double> tx, ty;
    for (std::size_t k = row.t.size() / 2; k < row.t.size(); ++k) {
      const double v = row.sigma_norm[k] + row.q_norm[k] + row.w1_norm[k];
      if (v > 0.0) {
        tx.push_back(1.0 + row.t[k]);
        ty.push_back(v);
      }
    }
    const double vT = row.sigma_norm.back() + row.q_norm.back() + row.w1_norm.back();
    row.tail_bound = 0.0;
    if (vT > 0.0) {
      const double kappa = tx.size() >= 4 ? fit_rate(tx, ty, FitAxes::log_log).slope : 0.0;
      const double T = row.t.back();
      if (std::isinf(spec.r)) row.tail_bound = kappa <= 0.0 ? vT : -1.0;
      else if (kappa * spec.r < -1.0)
        row.tail_bound = std::pow(std::pow(vT, spec.r) * (1.0 + T) / (-kappa * spec.r - 1.0), 1.0 / spec.r);
      else row.tail_bound = -1.0;
    }
  } catch (const SolverFailure& e) {
    row.status = std::string("stationary solver failure: ") + e.what();
  } catch (const DensityFailure& e) {
    row.status = std::string("density failure: ") + e.what();
  } catch (const StepRejected& e) {
    row.status = std::string("integrator failure: ") + e.what();
  } catch (const std::range_error& e) {
    row.status = std::string("band budget exceeded: ") + e.what();
  }
  return row;
}

}  // namespace

LowMachResult run_low_mach_experiment(const LowMachSpec& spec, const SpectralField* F_in,
                                      const InitGenerator* init_in) {
  validate_low_mach(spec);
  const Grid g(spec.n, spec.L);
  const SpectralField F = F_in ? *F_in : make_force(g, spec.seed, spec.delta, spec.force_j_lo, spec.force_j_hi);
  if (F.grid() != g || F.components() != 3) throw std::invalid_argument("low-mach: force does not match the grid");
  const InitGenerator init =
      init_in ? *init_in : ill_prepared_data(g, spec.seed + 1, spec.delta, spec.data_width, spec.eps_scaled_density);
  const double emin = *std::min_element(spec.eps_list.begin(), spec.eps_list.end());
  const double T = spec.T > 0.0 ? spec.T : recurrence_guard(emin, spec.L);
  std::vector<double> times{0.0};
  for (double t : geomspace(T * 1e-3, T, spec.nt)) times.push_back(t);

  LowMachResult res;
  res.spec = spec;
  res.spec.T = T;
  res.target = std::min(std::isinf(spec.r) ? 0.0 : 1.0 / spec.r, 0.5 - 1.0 / spec.p);
  SpectralField u_star(g, 3);
  try {
    u_star = solve_incompressible_stationary(F, spec.prm).u;
  } catch (const SolverFailure& e) {
    for (double eps : spec.eps_list) {
      LowMachEps row;
      row.eps = eps;
      row.status = std::string("incompressible stationary failure: ") + e.what();
      res.per_eps.push_back(row);
    }
    res.fit = res.sigma_fit = res.q_fit = res.w1_fit = res.lp_fit = degenerate_fit(0);
    return res;
  }
  res.per_eps.resize(spec.eps_list.size());
  parallel_for(int(spec.eps_list.size()), spec.workers, [&](int i) {
    res.per_eps[i] = run_one_eps(spec, spec.eps_list[i], F, u_star, init, times);
  });
  res.fit = fit_positive(res.per_eps, &LowMachEps::total);
  res.sigma_fit = fit_positive(res.per_eps, &LowMachEps::sigma_lr);
  res.q_fit = fit_positive(res.per_eps, &LowMachEps::q_lr);
  res.w1_fit = fit_positive(res.per_eps, &LowMachEps::w1_lr);
  res.lp_fit = fit_positive(res.per_eps, &LowMachEps::lp_total);
  return res;
}

std::string LowMachResult::json() const {
  nlohmann::json j;
  j["kind"] = "low-mach";
  j["params"] = {{"n", spec.n},       {"L", spec.L},         {"delta", spec.delta}, {"seed", spec.seed},
                 {"p", spec.p},       {"r", std::isinf(spec.r) ? nlohmann::json("inf") : nlohmann::json(spec.r)},
                 {"s", spec.s},       {"T", spec.T},         {"nt", spec.nt},       {"eps_list", spec.eps_list},
                 {"data_width", spec.data_width}, {"eps_scaled_density", spec.eps_scaled_density},
                 {"force_shells", {spec.force_j_lo, spec.force_j_hi}},
                 {"physics", nlohmann::json::parse(spec.prm.json())}};
  j["target"] = target;
  j["hypotheses_hold"] = low_mach_hypotheses_hold(spec.p, spec.r, spec.s);
  j["lp_corollary_hypotheses_hold"] = lp_corollary_hypotheses_hold(spec.p, spec.r);
  j["rate_fit"] = fit_json(fit);
  j["addend_fits"] = {{"sigma", fit_json(sigma_fit)}, {"q", fit_json(q_fit)}, {"w1", fit_json(w1_fit)}};
  j["lp_fit"] = fit_json(lp_fit);
  j["per_eps"] = nlohmann::json::array();
  for (const auto& r : per_eps) {
    nlohmann::json e = {{"eps", r.eps},
                        {"status", r.status},
                        {"norms", {{"sigma", r.sigma_lr}, {"q", r.q_lr}, {"w1", r.w1_lr}, {"total", r.total}}},
                        {"lp_total", r.lp_total},
                        {"tail_bound", r.tail_bound >= 0.0 ? nlohmann::json(r.tail_bound) : nlohmann::json()},
                        {"sup_bound", r.sup_bound},
                        {"equilibrium_drift", r.equilibrium},
                        {"full_system_defect", r.full_system_defect},
                        {"sigma_mean_drift", r.sigma_mean_drift},
                        {"steps", r.steps},
                        {"rejected", r.rejected}};
    if (spec.track_w1) e["w1_mismatch"] = r.w1_mismatch;
    j["per_eps"].push_back(e);
  }
  return j.dump(2);
}

std::string LowMachResult::csv() const {
  std::string out = "eps,t,sigma,q,w1,total,lp_total,bounded\n";
  for (const auto& r : per_eps)
    for (std::size_t k = 0; k < r.t.size(); ++k)
      out += fmt(r.eps) + "," + fmt(r.t[k]) + "," + fmt(r.sigma_norm[k]) + "," + fmt(r.q_norm[k]) + "," +
             fmt(r.w1_norm[k]) + "," + fmt(r.sigma_norm[k] + r.q_norm[k] + r.w1_norm[k]) + "," +
             fmt(r.lp_sum[k]) + "," + fmt(r.bounded[k]) + "\n";
  return out;
}

// ---------------------------------------------------------------------------

TimeDecaySpec resolve_time_decay(TimeDecaySpec spec) {
  const double nu = spec.prm.heat_nu();
  if (nu > 0.0) {
    if (spec.fit_from == 0.0) spec.fit_from = 1.0 / (nu * std::ldexp(1.0, 2 * spec.j_hi));
    if (spec.T == 0.0) spec.T = 1.0 / (nu * std::pow(8.0 / 3.0 * std::ldexp(1.0, spec.j_lo), 2));
  }
  return spec;
}

void validate_time_decay(const TimeDecaySpec& spec_in) {
  const TimeDecaySpec spec = resolve_time_decay(spec_in);
  std::vector<std::string> errs;
  if (!(spec.s >= 0.5 && spec.s < 1.5)) errs.push_back("s must satisfy 1/2 <= s < 3/2");
  if (!(spec.eps > 0.0 && spec.eps <= 1.0)) errs.push_back("eps must lie in (0, 1]");
  if (spec.nt < 4) errs.push_back("nt must be >= 4");
  if (!(spec.fit_from > 0.0 && spec.fit_from < spec.T)) errs.push_back("fit window must satisfy 0 < fit_from < T");
  if (spec.n < 8 || spec.n % 2 || !(spec.L > 0.0)) errs.push_back("bad grid");
  else {
    FilterBank bank(Grid(spec.n, spec.L));
    if (spec.j_lo > spec.j_hi || !bank.has_block(spec.j_lo) || !bank.has_block(spec.j_hi))
      errs.push_back("data shells outside the bank");
  }
  try {
    spec.prm.validate();
    // The heat flow must have acted on the highest data shell inside the window.
    if (spec.T * spec.prm.heat_nu() * std::ldexp(1.0, 2 * spec.j_hi) < 4.0)
      errs.push_back("insufficient decay window: T nu 4^{j_hi} < 4");
  } catch (const std::invalid_argument& e) {
    errs.push_back(e.what());
  }
  if (!errs.empty()) {
    std::string m = "time-decay: ";
    for (std::size_t i = 0; i < errs.size(); ++i) m += (i ? "; " : "") + errs[i];
    throw std::invalid_argument(m);
  }
}

TimeDecayResult measure_time_decay(const TimeDecaySpec& spec_in, const InitialData* data, const SpectralField* F_in) {
  validate_time_decay(spec_in);
  const TimeDecaySpec spec = resolve_time_decay(spec_in);
  const Grid g(spec.n, spec.L);
  FilterBank bank(g);
  const PhysicalParams& prm = spec.prm;
  StationaryBackground bg = StationaryBackground::zero(g);
  if (F_in || spec.force_amplitude > 0.0) {
    const SpectralField F = F_in ? *F_in : make_force(g, spec.seed, spec.force_amplitude, -1, 0);
    StationaryPair pair = solve_compressible_stationary(F, spec.eps, prm);
    bg.b_star = pair.b_star;
    bg.v_star = pair.v_star;
  }
  InitialData d{SpectralField(g, 1), SpectralField(g, 3)};
  if (data) d = *data;
  else {
    SpectralField x(g, 4);
    for (int c = 0; c < 4; ++c)
      x.set_component(c, random_shell_field(g, bank, spec.seed * 104729 + 17 + c, spec.j_lo, spec.j_hi, 0.5,
                                            g.dealias_k()));
    remove_mean(x);
    const double nrm = besov_norm(x, 0.5, 2.0, kInf, bank) + sobolev_norm(x, 4.0);
    if (spec.amplitude == 0.0 || nrm == 0.0) x.set_zero();
    else x *= spec.amplitude / nrm;
    d = {slice(x, 0, 1), slice(x, 1, 3)};
  }

  auto model = std::make_shared<PerturbationModel>(bg, spec.eps, prm);
  const double g2 = prm.gamma2();
  Etdrk2 integ(g, spec.eps / prm.gamma(), prm.acoustic_mu0(), prm.heat_nu(), 4, [model, g2](const SpectralField& u) {
    SpectralField sig = slice(u, 0, 1);
    sig *= 1.0 / g2;
    NonlinearFG n = model->fg(sig, slice(u, 1, 3));
    n.f *= g2;
    return pack4(n.f, n.g);
  });

  TimeDecayResult res;
  res.spec = spec;
  res.target = -spec.s / 2 + 0.25;
  std::vector<double> times{0.0};
  for (double t : geomspace(spec.fit_from / 8, spec.T, spec.nt)) times.push_back(t);
  SpectralField sig0 = d.sigma;
  sig0 *= g2;
  SpectralField u = pack4(sig0, d.w);
  AdvanceStats st;
  std::vector<double> fx, fy;
  for (std::size_t k = 0; k < times.size(); ++k) {
    if (k > 0) u = advance(integ, std::move(u), times[k - 1], times[k], spec.ctl, st);
    SpectralField sw = u;
    SpectralField s = slice(u, 0, 1);
    s *= 1.0 / g2;
    put(sw, 0, s);
    const double v = besov_norm(sw, spec.s, 2.0, kInf, bank) + sobolev_norm(sw, 4.0);
    res.t.push_back(times[k]);
    res.norm.push_back(v);
    if (times[k] >= spec.fit_from * (1 - 1e-12) && v > 0.0) {
      fx.push_back(1.0 + times[k]);
      fy.push_back(v);
    }
  }
  res.fit = fx.size() >= 4 ? fit_rate(fx, fy, FitAxes::log_log) : degenerate_fit(int(fx.size()));
  res.steps = st.accepted;
  res.rejected = st.rejected;
  return res;
}

std::string TimeDecayResult::json() const {
  nlohmann::json j;
  j["kind"] = "time-decay";
  j["params"] = {{"n", spec.n},        {"L", spec.L},       {"eps", spec.eps},   {"s", spec.s},
                 {"amplitude", spec.amplitude}, {"force_amplitude", spec.force_amplitude},
                 {"seed", spec.seed},  {"j_lo", spec.j_lo}, {"j_hi", spec.j_hi}, {"T", spec.T},
                 {"fit_from", spec.fit_from}, {"nt", spec.nt}, {"physics", nlohmann::json::parse(spec.prm.json())}};
  j["target"] = target;
  j["rate_fit"] = fit_json(fit);
  j["steps"] = steps;
  j["rejected"] = rejected;
  return j.dump(2);
}

std::string TimeDecayResult::csv() const {
  std::string out = "t,norm\n";
  for (std::size_t k = 0; k < t.size(); ++k) out += fmt(t[k]) + "," + fmt(norm[k]) + "\n";
  return out;
}

}  // namespace lowmach
