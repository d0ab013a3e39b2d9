#include "lowmach/besov.hpp"

#include <cmath>
#include <random>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

#include "lowmach/fft.hpp"
#include "lowmach/field_ops.hpp"

namespace lowmach {

void NormSpec::validate() const {
  if (!(p >= 1.0)) throw std::invalid_argument("norm spec: p must lie in [1, inf]");
  if (!(r >= 1.0)) throw std::invalid_argument("norm spec: r must lie in [1, inf]");
  if (s < -4.0 || s > 6.0) throw std::invalid_argument("norm spec: s outside resolved range [-4, 6]");
  if (kind == Kind::sobolev && (p != 2.0 || r != 2.0))
    throw std::invalid_argument("norm spec: sobolev kind requires p = r = 2");
}

namespace {

double magnitude_lp(const std::vector<std::vector<cplx>>& comps, double p, double cell) {
  const std::size_t N = comps.front().size();
  if (std::isinf(p)) {
    double m = 0.0;
    for (std::size_t i = 0; i < N; ++i) {
      double a = 0.0;
      for (const auto& c : comps) a += std::norm(c[i]);
      m = std::max(m, a);
    }
    return std::sqrt(m);
  }
  double acc = 0.0;
  for (std::size_t i = 0; i < N; ++i) {
    double a = 0.0;
    for (const auto& c : comps) a += std::norm(c[i]);
    acc += std::pow(a, 0.5 * p);
  }
  return std::pow(acc * cell, 1.0 / p);
}

}  // namespace

double lp_norm(const SpectralField& f, double p) {
  if (p == 2.0) return l2_norm(f);
  std::vector<std::vector<cplx>> comps;
  comps.reserve(f.components());
  for (int c = 0; c < f.components(); ++c) comps.push_back(to_complex_samples(f, c));
  return magnitude_lp(comps, p, f.grid().cell_volume());
}

std::vector<double> block_norms(const SpectralField& f, double s, double p, const FilterBank& bank) {
  if (f.grid() != bank.grid()) throw std::invalid_argument("besov: grid mismatch");
  const double L = f.grid().L();
  std::vector<double> out;
  out.reserve(bank.j_max() - bank.j_min() + 1);
  for (int j = bank.j_min(); j <= bank.j_max(); ++j) {
    double v;
    if (p == 2.0) {
      double acc = 0.0;
      for (const auto& [i, w] : bank.entries(j))
        for (int c = 0; c < f.components(); ++c) acc += w * w * std::norm(f.at(c, i));
      v = std::sqrt(acc * L * L * L);
    } else {
      v = lp_norm(dyadic_block(j, f, bank), p);
    }
    out.push_back(std::exp2(j * s) * v);
  }
  return out;
}

double lr_aggregate(const std::vector<double>& terms, double r) {
  if (std::isinf(r)) {
    double m = 0.0;
    for (double t : terms) m = std::max(m, t);
    return m;
  }
  double acc = 0.0;
  for (double t : terms) acc += std::pow(t, r);
  return std::pow(acc, 1.0 / r);
}

double besov_norm(const SpectralField& f, const NormSpec& spec, const FilterBank& bank) {
  spec.validate();
  if (spec.kind == NormSpec::Kind::sobolev) return sobolev_norm(f, spec.s);
  return lr_aggregate(block_norms(f, spec.s, spec.p, bank), spec.r);
}

double besov_norm(const SpectralField& f, double s, double p, double r, const FilterBank& bank) {
  return besov_norm(f, NormSpec::besov(s, p, r), bank);
}

double intersection_norm(const SpectralField& f, const NormSpec& a, const NormSpec& b,
                         const FilterBank& bank) {
  return besov_norm(f, a, bank) + besov_norm(f, b, bank);
}

// ---------------------------------------------------------------------------

namespace {

double conj_exponent(double p) {
  if (std::isinf(p)) return 1.0;
  if (p == 1.0) return kInf;
  return p / (p - 1.0);
}

double inv(double r) { return std::isinf(r) ? 0.0 : 1.0 / r; }

// Pointwise product on the grid without truncation; exact when the factors'
// combined band fits below the Nyquist planes.
SpectralField raw_product(const SpectralField& a, const SpectralField& b) {
  const Grid& g = a.grid();
  auto x = to_complex_samples(a, 0);
  auto y = to_complex_samples(b, 0);
  std::vector<cplx> z(g.size());
  for (std::size_t i = 0; i < z.size(); ++i) z[i] = x[i] * y[i];
  SpectralField out(g, 1);
  fft_forward(g, z.data(), out.comp(0));
  return out;
}

double safe_ratio(double num, double den) { return den > 0.0 ? num / den : 0.0; }

}  // namespace

double ratio_bi0(const SpectralField& u, const SpectralField& v, double s1, double s2, double r1,
                 double r2, const FilterBank& bank) {
  if (!(s1 < 1.5) || !(s2 < 1.5)) throw std::invalid_argument("bi0: requires s1 < 3/2 and s2 < 3/2");
  if (!(s1 + s2 > 0.0)) throw std::invalid_argument("bi0: requires s1 + s2 > 0");
  const double r = 1.0 / (inv(r1) + inv(r2));
  if (!(r >= 1.0)) throw std::invalid_argument("bi0: 1/r1 + 1/r2 must not exceed 1");
  const double rhs = besov_norm(u, s1, 2.0, r1, bank) * besov_norm(v, s2, 2.0, r2, bank);
  if (rhs == 0.0) return 0.0;
  return besov_norm(raw_product(u, v), s1 + s2 - 1.5, 2.0, r, bank) / rhs;
}

double ratio_bi1(const SpectralField& u, const SpectralField& v, double s1, double s2, double p,
                 double r, const FilterBank& bank) {
  if (!(p >= 2.0)) throw std::invalid_argument("bi1: requires p >= 2");
  if (!(s1 < 3.0 / p) || !(s2 < 3.0 / p)) throw std::invalid_argument("bi1: requires s1, s2 < 3/p");
  if (!(s1 + s2 > 0.0)) throw std::invalid_argument("bi1: requires s1 + s2 > 0");
  const double rhs = besov_norm(u, s1, 2.0, r, bank) * besov_norm(v, s2, 2.0, kInf, bank);
  if (rhs == 0.0) return 0.0;
  return besov_norm(raw_product(u, v), s1 + s2 - 3.0 / p, conj_exponent(p), r, bank) / rhs;
}

double ratio_bi2(const SpectralField& u, const SpectralField& v, double s1, double s2, double p,
                 double r, const FilterBank& bank) {
  if (!(p >= 2.0)) throw std::invalid_argument("bi2: requires p >= 2");
  if (!(s1 < 3.0 / p)) throw std::invalid_argument("bi2: requires s1 < 3/p");
  if (!(s2 < 1.5)) throw std::invalid_argument("bi2: requires s2 < 3/2");
  if (!(s1 + s2 > 0.0)) throw std::invalid_argument("bi2: requires s1 + s2 > 0");
  const double rhs = besov_norm(u, s1, p, r, bank) * besov_norm(v, s2, 2.0, kInf, bank);
  if (rhs == 0.0) return 0.0;
  return besov_norm(raw_product(u, v), s1 + s2 - 1.5, p, r, bank) / rhs;
}

double ratio_commutator(const SpectralField& h, const SpectralField& u, double s, double r,
                        const FilterBank& bank) {
  if (!(s > -1.5) || !(s < 2.5)) throw std::invalid_argument("commu: requires -3/2 < s < 5/2");
  if (h.components() != 1 || u.components() != 1)
    throw std::invalid_argument("commu: scalar h and u expected");
  const Grid& g = h.grid();
  const double L = g.L();
  const auto hx = to_complex_samples(h, 0);
  auto times_h = [&](const SpectralField& f) {
    auto z = to_complex_samples(f, 0);
    for (std::size_t i = 0; i < z.size(); ++i) z[i] *= hx[i];
    SpectralField out(g, 1);
    fft_forward(g, z.data(), out.comp(0));
    return out;
  };
  std::vector<SpectralField> h_du;
  for (int k = 0; k < 3; ++k) h_du.push_back(times_h(partial(u, k)));

  std::vector<double> terms;
  for (int j = bank.j_min(); j <= bank.j_max(); ++j) {
    SpectralField uj = dyadic_block(j, u, bank);
    double acc = 0.0;
    for (int k = 0; k < 3; ++k) {
      SpectralField c = dyadic_block(j, h_du[k], bank);
      c -= times_h(partial(uj, k));
      for (const auto& z : c.data()) acc += std::norm(z);
    }
    terms.push_back(std::exp2(j * s) * std::sqrt(acc * L * L * L));
  }
  const double rhs = besov_norm(grad(h), 1.5, 2.0, 1.0, bank) * besov_norm(u, s, 2.0, r, bank);
  return safe_ratio(lr_aggregate(terms, r), rhs);
}

SpectralField band_checked(const Grid& g, const RealGrid& x, double budget, const char* who) {
  SpectralField out = from_real(g, x);
  double inside = 0.0, outside = 0.0;
  for (std::size_t i = 1; i < g.size(); ++i)
    (g.in_dealias_band(i) ? inside : outside) += std::norm(out.at(0, i));
  if (outside > budget * (inside + outside))
    throw std::range_error(std::string(who) + ": result leaves the resolved band beyond the dealias budget");
  return out;
}

SpectralField compose(const ScalarMap& Phi, const SpectralField& u, double budget) {
  RealGrid x = to_real(u, 0);
  for (auto& v : x) v = Phi(v);
  return band_checked(u.grid(), x, budget, "compose");
}

double ratio_composition(const ScalarMap& Phi, const SpectralField& u, const SpectralField& v,
                         double s, double r, const FilterBank& bank) {
  const bool endpoint = s == 1.5 && r == 1.0;
  if (!(s >= -1.5) || (!(s < 1.5) && !endpoint))
    throw std::invalid_argument("compos: requires -3/2 <= s < 3/2, or s = 3/2 with r = 1");
  SpectralField diff = u - v;
  const double dn = besov_norm(diff, s, 2.0, r, bank);
  if (dn == 0.0) return 0.0;
  SpectralField lhs = compose(Phi, u) - compose(Phi, v);
  remove_mean(lhs);
  const double uv = besov_norm(u, 1.5, 2.0, 1.0, bank) + besov_norm(v, 1.5, 2.0, 1.0, bank);
  return besov_norm(lhs, s, 2.0, r, bank) / ((1.0 + uv) * dn);
}

SpectralField random_shell_field(const Grid& g, const FilterBank& bank, std::uint64_t seed,
                                 int j_lo, int j_hi, double s, int k_cap) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  SpectralField f(g, 1);
  for (std::size_t i = 1; i < g.size(); ++i) {
    const double a = gauss(rng), b = gauss(rng);
    if (g.is_nyquist(i)) continue;
    auto k = g.mode_k(i);
    if (std::abs(k[0]) > k_cap || std::abs(k[1]) > k_cap || std::abs(k[2]) > k_cap) continue;
    double amp = 0.0;
    for (int j = std::max(j_lo, bank.j_min()); j <= std::min(j_hi, bank.j_max()); ++j)
      amp += bank.weight(j, i) * std::exp2(-j * (s + 1.5));
    f.at(0, i) = amp * cplx(a, b);
  }
  enforce_real(f);
  return f;
}

void validate_suite(const SuiteSpec& sp) {
  if (sp.members < 1) throw std::invalid_argument("besov suite: members must be positive");
  if (!(sp.L > 0.0)) throw std::invalid_argument("besov suite: L must be positive");
  // Evaluate the hypotheses on a throwaway pair so the messages come from one place.
  Grid g(8, sp.L);
  FilterBank bank(g);
  SpectralField z(g, 1);
  if (sp.lemma == "bi0") ratio_bi0(z, z, sp.s1, sp.s2, sp.r1, sp.r2, bank);
  else if (sp.lemma == "bi1") ratio_bi1(z, z, sp.s1, sp.s2, sp.p, sp.r, bank);
  else if (sp.lemma == "bi2") ratio_bi2(z, z, sp.s1, sp.s2, sp.p, sp.r, bank);
  else if (sp.lemma == "commu") ratio_commutator(z, z, sp.s, sp.r, bank);
  else if (sp.lemma == "compos") ratio_composition([](double x) { return x; }, z, z, sp.s, sp.r, bank);
  else throw std::invalid_argument("besov suite: unknown lemma '" + sp.lemma + "'");
}

namespace {

std::string params_json(const SuiteSpec& sp) {
  auto num = [](double x) -> nlohmann::json {
    if (std::isinf(x)) return "inf";
    return x;
  };
  nlohmann::json j;
  if (sp.lemma == "bi0") j = {{"s1", sp.s1}, {"s2", sp.s2}, {"r1", num(sp.r1)}, {"r2", num(sp.r2)}};
  else if (sp.lemma == "bi1" || sp.lemma == "bi2")
    j = {{"s1", sp.s1}, {"s2", sp.s2}, {"p", num(sp.p)}, {"r", num(sp.r)}};
  else if (sp.lemma == "commu") j = {{"s", sp.s}, {"r", num(sp.r)}};
  else j = {{"s", sp.s}, {"r", num(sp.r)}, {"amplitude", sp.amplitude}, {"rho_inf", sp.rho_inf}};
  j["members"] = sp.members;
  j["L"] = sp.L;
  return j.dump();
}

}  // namespace

RatioReport run_ratio_ensemble(const SuiteSpec& sp, int n, std::uint64_t seed) {
  validate_suite(sp);
  Grid g(n, sp.L);
  FilterBank bank(g);
  const bool compos = sp.lemma == "compos";
  // Products must stay below the Nyquist planes; composites are kept lower so
  // that their quadratic part still fits in the 2/3 band.
  const int k_cap = compos ? n / 6 : n / 4 - 1;
  const double xi_cap = k_cap * g.dk();
  const int j_lo = bank.j_min() + 1;
  const int j_hi = static_cast<int>(std::floor(std::log2(xi_cap / 0.75)));

  RatioReport rep;
  rep.lemma = sp.lemma;
  rep.seed = seed;
  rep.n = n;
  rep.params_json = params_json(sp);
  const ScalarMap Psi = [rho = sp.rho_inf](double z) { return 1.0 / (rho + z); };
  for (int m = 0; m < sp.members; ++m) {
    const std::uint64_t su = seed * 1000003ULL + 2ULL * m, sv = su + 1;
    double ratio = 0.0;
    if (sp.lemma == "bi0") {
      auto u = random_shell_field(g, bank, su, j_lo, j_hi, sp.s1, k_cap);
      auto v = random_shell_field(g, bank, sv, j_lo, j_hi, sp.s2, k_cap);
      ratio = ratio_bi0(u, v, sp.s1, sp.s2, sp.r1, sp.r2, bank);
    } else if (sp.lemma == "bi1" || sp.lemma == "bi2") {
      auto u = random_shell_field(g, bank, su, j_lo, j_hi, sp.s1, k_cap);
      auto v = random_shell_field(g, bank, sv, j_lo, j_hi, sp.s2, k_cap);
      ratio = sp.lemma == "bi1" ? ratio_bi1(u, v, sp.s1, sp.s2, sp.p, sp.r, bank)
                                : ratio_bi2(u, v, sp.s1, sp.s2, sp.p, sp.r, bank);
    } else if (sp.lemma == "commu") {
      auto h = random_shell_field(g, bank, su, j_lo, j_hi, sp.s, k_cap);
      auto u = random_shell_field(g, bank, sv, j_lo, j_hi, sp.s, k_cap);
      ratio = ratio_commutator(h, u, sp.s, sp.r, bank);
    } else {
      auto u = random_shell_field(g, bank, su, j_lo, j_hi, sp.s, k_cap);
      auto v = random_shell_field(g, bank, sv, j_lo, j_hi, sp.s, k_cap);
      auto scale = [&](SpectralField& f) {
        RealGrid x = to_real(f, 0);
        double mx = 0.0;
        for (double a : x) mx = std::max(mx, std::abs(a));
        if (mx > 0.0) f *= sp.amplitude / mx;
      };
      scale(u);
      scale(v);
      ratio = ratio_composition(Psi, u, v, sp.s, sp.r, bank);
    }
    rep.ratios.push_back(ratio);
    rep.max_ratio = std::max(rep.max_ratio, ratio);
  }
  return rep;
}

RatioReport run_ratio_suite(const SuiteSpec& sp, int n, std::uint64_t seed) {
  RatioReport coarse = run_ratio_ensemble(sp, n, seed);
  RatioReport fine = run_ratio_ensemble(sp, 2 * n, seed);
  coarse.resolution_growth = coarse.max_ratio > 0.0 ? fine.max_ratio / coarse.max_ratio : 0.0;
  return coarse;
}

std::string ratio_report_json(const RatioReport& rep) {
  nlohmann::json j;
  j["lemma"] = rep.lemma;
  j["params"] = nlohmann::json::parse(rep.params_json.empty() ? "{}" : rep.params_json);
  j["max_ratio"] = rep.max_ratio;
  j["resolution_growth"] = rep.resolution_growth;
  j["seed"] = rep.seed;
  j["n"] = rep.n;
  return j.dump(2);
}

}  // namespace lowmach
