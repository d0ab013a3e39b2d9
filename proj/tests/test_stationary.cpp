#include <algorithm>
#include <cmath>

#include "doctest.h"
#include "json.hpp"
#include "lowmach/fft.hpp"
#include "lowmach/field_ops.hpp"
#include "lowmach/stationary.hpp"
#include "test_util.hpp"

using namespace lowmach;
using testutil::max_abs;
using testutil::max_abs_diff;
using testutil::random_field;

namespace {
double b_inf(const SpectralField& f, double s, const FilterBank& bank) { return besov_norm(f, s, 2.0, kInf, bank); }

// random_field rescaled to a given sup norm in physical space.
SpectralField bounded_field(const Grid& g, int m, std::uint64_t seed, int kmax, double amp) {
  SpectralField f = random_field(g, m, seed, kmax);
  double mx = 0.0;
  for (const RealGrid& r : to_real_all(f))
    for (double x : r) mx = std::max(mx, std::abs(x));
  f *= amp / mx;
  return f;
}

// Physical-space assembly of g from product-rule expansions (no dealiasing;
// exact for inputs whose cubic products stay inside the 2/3 band).
SpectralField g_oracle(const SpectralField& b, const SpectralField& v, const SpectralField& F, double eps,
                       double rho_inf) {
  const Grid& g = b.grid();
  const RealGrid br = to_real(b, 0);
  const auto vr = to_real_all(v), Fr = to_real_all(F);
  RealGrid rho(g.size());
  for (std::size_t q = 0; q < g.size(); ++q) rho[q] = rho_inf + eps * br[q];
  std::vector<RealGrid> dv(9), db(3);
  for (int j = 0; j < 3; ++j) {
    db[j] = to_real(partial(b, j), 0);
    for (int i = 0; i < 3; ++i) dv[3 * i + j] = to_real(partial(v, j), i);
  }
  std::vector<RealGrid> out(3, RealGrid(g.size()));
  for (std::size_t q = 0; q < g.size(); ++q) {
    const double divv = dv[0][q] + dv[4][q] + dv[8][q];
    for (int i = 0; i < 3; ++i) {
      // d_j(rho v_i v_j) = v_i v_j d_j rho + rho v_j d_j v_i + rho v_i div v
      double c = 0.0;
      for (int j = 0; j < 3; ++j)
        c += vr[i][q] * vr[j][q] * eps * db[j][q] + rho[q] * vr[j][q] * dv[3 * i + j][q];
      c += rho[q] * vr[i][q] * divv;
      out[i][q] = -c - br[q] * db[i][q] + rho[q] * Fr[i][q];
    }
  }
  return from_real(g, out);
}
}  // namespace

TEST_CASE("physical parameters") {
  PhysicalParams p;
  CHECK_NOTHROW(p.validate());
  CHECK(p.nu() == 2.0);
  CHECK(p.alpha() == 2.0);
  CHECK(p.beta() == 0.5);
  CHECK(p.gamma() == 1.0);
  CHECK(p.gamma0() == 1.0);
  CHECK(p.gamma1() == 1.0);
  CHECK(p.gamma2() == 1.0);
  CHECK(p.acoustic_mu0() == 1.0);
  PhysicalParams q;
  q.rho_inf = 2.0;
  q.mu = 0.5;
  q.mu_prime = 0.3;
  q.pressure = PressureLaw::gamma_law(1.5, 1.4);
  const double dp = 1.5 * 1.4 * std::pow(2.0, 0.4);
  CHECK(q.dP_inf() == doctest::Approx(dp).epsilon(1e-14));
  CHECK(q.alpha() == doctest::Approx(1.3 / (dp * 2.0)).epsilon(1e-14));
  CHECK(q.gamma2() == doctest::Approx(std::sqrt(dp) / 2.0).epsilon(1e-14));
  CHECK(q.Phi(0.1) == doctest::Approx(1.5 * 1.4 * std::pow(2.1, 0.4) / 2.1).epsilon(1e-14));
  for (double z : {1e-9, 1e-4, 0.3, -0.5}) {
    CHECK(q.pressure.dP_increment(2.0, z) ==
          doctest::Approx(q.pressure.dP(2.0 + z) - q.pressure.dP(2.0)).epsilon(z < 1e-6 ? 1e-6 : 1e-12));
    CHECK(q.pressure.P_increment(2.0, z) ==
          doctest::Approx(q.pressure.P(2.0 + z) - q.pressure.P(2.0)).epsilon(z < 1e-6 ? 1e-6 : 1e-12));
  }
  CHECK(PressureLaw::quadratic().dP_increment(1.0, 0.25) == 0.25);

  PhysicalParams bad;
  bad.mu = 0.0;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  bad = PhysicalParams{};
  bad.mu_prime = -0.7;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  bad = PhysicalParams{};
  bad.rho_inf = -1.0;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  CHECK_THROWS_AS(PressureLaw::parse("ideal"), std::invalid_argument);
  CHECK(PressureLaw::parse("gamma", 2.0, 1.2).g == 1.2);
}

TEST_CASE("forces") {
  Grid g(32, 16.0);
  FilterBank bank(g);
  CHECK(make_force(g, 1, 0.0, -1, 0).is_zero());
  SpectralField a = make_force(g, 1, 0.7, -1, 0), b = make_force(g, 2, 0.7, -1, 0);
  CHECK(force_norm(a, bank) == doctest::Approx(0.7).epsilon(1e-10));
  CHECK(force_norm(b, bank) == doctest::Approx(0.7).epsilon(1e-10));
  CHECK(max_abs_diff(a, b) > 1e-3 * max_abs(a));
  CHECK(max_abs_diff(a, make_force(g, 1, 0.7, -1, 0)) == 0.0);
  CHECK(conjugate_asymmetry(a) < 1e-16);
  for (int c = 0; c < 3; ++c) CHECK(a.at(c, 0) == cplx(0.0));
  CHECK_THROWS_AS(make_force(g, 1, 1.0, -9, 0), std::invalid_argument);
  CHECK_THROWS_AS(make_force(g, 1, 1.0, 1, 0), std::invalid_argument);
}

TEST_CASE("incompressible stationary solution") {
  Grid g(32, 16.0);
  FilterBank bank(g);
  PhysicalParams prm;
  prm.mu = 0.8;
  prm.rho_inf = 1.3;
  IncompressibleStationary z = solve_incompressible_stationary(SpectralField(g, 3), prm);
  CHECK(z.u.is_zero());
  CHECK(z.iterations <= 1);

  // Tiny force: the quadratic term is O(amplitude^2), so u* is the Stokes solution.
  SpectralField F = make_force(g, 3, 1e-6, -1, 0);
  IncompressibleStationary s = solve_incompressible_stationary(F, prm);
  SpectralField stokes = inv_laplacian(helmholtz_P(F), 1, true);
  stokes *= -prm.rho_inf / prm.mu;
  CHECK(l2_norm(s.u - stokes) <= 1e-4 * l2_norm(stokes));

  SpectralField F2 = make_force(g, 3, 2.0, -1, 0);
  IncompressibleStationary s2 = solve_incompressible_stationary(F2, prm, 1e-10);
  CHECK(s2.residual < 1e-9);
  CHECK(l2_norm(div(s2.u)) < 1e-10 * sobolev_norm(s2.u, 1.0));
  for (std::size_t k = 2; k < s2.updates.size(); ++k) CHECK(s2.updates[k] < s2.updates[k - 1]);

  CHECK_THROWS_AS(solve_incompressible_stationary(make_force(g, 3, 200.0, -1, 0), prm), SolverFailure);
}

TEST_CASE("stationary right-hand side") {
  Grid g(32, 16.0);
  PhysicalParams prm;
  prm.rho_inf = 1.2;
  SpectralField F = make_force(g, 5, 1.0, -1, 1);
  SpectralField zs(g, 1), zv(g, 3);
  SpectralField expect = F;
  expect *= prm.rho_inf;
  CHECK(max_abs_diff(eval_g_eps(zs, zv, F, 0.3, prm), expect) <= 1e-15 * max_abs(expect));

  // Linear pressure and v = 0: only (rho_inf + eps b) F survives.
  PhysicalParams lin = prm;
  lin.pressure = PressureLaw::linear(2.0);
  SpectralField F3 = bounded_field(g, 3, 6, 3, 1.0);
  SpectralField b = bounded_field(g, 1, 7, 3, 0.5);
  SpectralField gb = eval_g_eps(b, zv, F3, 0.5, lin);
  SpectralField want(g, 3);
  const RealGrid rho = density(b, 0.5, lin);
  for (int c = 0; c < 3; ++c) want.set_component(c, product(rho, to_real(F3, c), g));
  CHECK(max_abs_diff(gb, want) <= 1e-15 * max_abs(want) + 1e-18);

  // Independent physical-space assembly, quadratic pressure law.
  for (int k = 0; k < 5; ++k) {
    SpectralField bk = bounded_field(g, 1, 40 + k, 3, 0.5), vk = bounded_field(g, 3, 50 + k, 3, 1.0);
    SpectralField Fk = bounded_field(g, 3, 60 + k, 3, 1.0);
    const double eps = 0.1 + 0.2 * k;
    SpectralField a = eval_g_eps(bk, vk, Fk, eps, prm), o = g_oracle(bk, vk, Fk, eps, prm.rho_inf);
    CHECK(max_abs_diff(a, o) <= 1e-11 * max_abs(o));
  }

  SpectralField big = bounded_field(g, 1, 8, 3, 2.0);
  CHECK_THROWS_AS(eval_g_eps(big, zv, F, 1.0, prm), DensityFailure);
}

TEST_CASE("compressible stationary solution") {
  Grid g(32, 16.0);
  FilterBank bank(g);
  PhysicalParams prm;
  StationaryOptions opt;
  opt.tol = 1e-10;

  StationaryPair z = solve_compressible_stationary(SpectralField(g, 3), 0.5, prm, opt);
  CHECK(z.b_star.is_zero());
  CHECK(z.v_star.is_zero());

  SpectralField F = make_force(g, 11, 4.0, -1, 0);
  for (double eps : {1.0, 0.25, 1.0 / 16}) {
    StationaryPair s = solve_compressible_stationary(F, eps, prm, opt);
    CHECK(s.residual_mass < 10 * opt.tol);
    CHECK(s.residual_momentum < 10 * opt.tol);
    CHECK(s.b_star.at(0, 0) == cplx(0.0));
    for (int c = 0; c < 3; ++c) CHECK(s.v_star.at(c, 0) == cplx(0.0));
    CHECK_NOTHROW(density(s.b_star, eps, prm));
    for (std::size_t k = 2; k < s.updates.size(); ++k) CHECK(s.updates[k] < s.updates[k - 1]);

    // Continuity: Qv* = -(eps / rho_inf) Lap^{-1} grad div(b* v*).
    SpectralField bv(g, 3);
    const RealGrid br = to_real(s.b_star, 0);
    for (int c = 0; c < 3; ++c) bv.set_component(c, product(br, to_real(s.v_star, c), g));
    SpectralField rec = inv_laplacian(grad(div(bv)), 1);
    rec *= -eps / prm.rho_inf;
    CHECK(b_inf(helmholtz_Q(s.v_star) - rec, 0.5, bank) < 1e-8 * b_inf(s.v_star, 0.5, bank));

    // Uniqueness witness: a different starting pair reaches the same solution.
    StationaryPair guess{bounded_field(g, 1, 3, 4, 0.01), bounded_field(g, 3, 4, 4, 0.05)};
    StationaryPair t = solve_compressible_stationary(F, eps, prm, opt, &guess);
    CHECK(b_inf(t.b_star - s.b_star, -0.5, bank) + b_inf(t.v_star - s.v_star, 0.5, bank) < 10 * opt.tol);
  }

  // Truncated transport term still contracts.
  StationaryOptions cut = opt;
  cut.j_cut = bank.j_max() - 1;
  StationaryPair c = solve_compressible_stationary(F, 0.5, prm, cut);
  CHECK(c.iterations > 0);

  CHECK_THROWS_AS(solve_compressible_stationary(F, 1.5, prm, opt), std::invalid_argument);
  CHECK_THROWS_AS(solve_compressible_stationary(make_force(g, 11, 500.0, -1, 0), 0.5, prm, opt), SolverFailure);

  nlohmann::json rep = nlohmann::json::parse(stationary_report_json(solve_compressible_stationary(F, 0.5, prm), 0.5, F, prm));
  CHECK(rep.contains("force_norms"));
  CHECK(rep["residuals"]["momentum"].get<double>() < 1e-9);
}

TEST_CASE("stationary solution bounds are uniform in eps") {
  Grid g(32, 16.0);
  FilterBank bank(g);
  PhysicalParams prm;
  SpectralField F = make_force(g, 12, 4.0, -1, 0);
  std::vector<double> C;
  for (double eps = 1.0; eps >= 1.0 / 32; eps *= 0.5) {
    StationaryPair s = solve_compressible_stationary(F, eps, prm);
    C.push_back((b_inf(s.b_star, -0.5, bank) + sobolev_norm(s.b_star, 4.0) + b_inf(s.v_star, 0.5, bank) +
                 sobolev_norm(s.v_star, 5.0)) /
                force_norm(F, bank));
  }
  // b* = O(eps), so the constant may only shrink.
  for (std::size_t k = 1; k < C.size(); ++k) CHECK(C[k] <= 1.01 * C[k - 1]);
  CHECK(C.back() > 0.0);
}

TEST_CASE("stationary low Mach limit") {
  Grid g(32, 16.0);
  PhysicalParams prm;
  SpectralField F = make_force(g, 13, 4.0, -1, 0);
  StationaryLimit lim = measure_stationary_limit(F, {0.25, 0.125, 0.0625, 0.03125}, prm);
  CHECK(lim.fit.slope >= 0.85);
  CHECK(lim.fit.slope <= 1.15);
  CHECK(lim.q_fit.slope >= 0.85);
  for (double r : lim.residual) CHECK(r < 1e-9);

  StationaryLimit zero = measure_stationary_limit(SpectralField(g, 3), {0.25, 0.125, 0.0625, 0.03125}, prm);
  CHECK(zero.fit.degenerate);
  for (double t : zero.total) CHECK(t == 0.0);
}

TEST_CASE("smallness threshold") {
  Grid g(16, 16.0);
  PhysicalParams prm;
  SpectralField shape = make_force(g, 1, 1.0, -1, 0);
  const double d0 = force_threshold(shape, 0.5, prm, 0.1, 1000.0, 8);
  CHECK(d0 > 0.1);
  CHECK(d0 < 1000.0);
  SpectralField F = shape;
  F *= 0.5 * d0;
  CHECK_NOTHROW(solve_compressible_stationary(F, 0.5, prm));
}
