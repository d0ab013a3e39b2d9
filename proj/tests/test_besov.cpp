#include <cmath>
#include <numbers>

#include "doctest.h"
#include "lowmach/besov.hpp"
#include "lowmach/field_ops.hpp"
#include "test_util.hpp"

using namespace lowmach;
using testutil::random_field;
using testutil::sample;

namespace {
constexpr double kPi = std::numbers::pi;

// Field supported where a single block weight equals one.
SpectralField plateau_field(const Grid& g, int j, std::uint64_t seed) {
  SpectralField f = random_field(g, 1, seed, g.n() / 2 - 1);
  for (std::size_t i = 0; i < g.size(); ++i) {
    const double r = std::ldexp(g.xi_norm(i), -j);
    if (r < 4.0 / 3.0 + 1e-9 || r > 1.5 - 1e-9) f.at(0, i) = 0.0;
  }
  return f;
}
}  // namespace

TEST_CASE("norm spec validation") {
  CHECK_NOTHROW(NormSpec::besov(0.5, 2, kInf).validate());
  CHECK_THROWS_AS(NormSpec::besov(0.5, 0.5, 2).validate(), std::invalid_argument);
  CHECK_THROWS_AS(NormSpec::besov(0.5, 2, 0.9).validate(), std::invalid_argument);
  CHECK_THROWS_AS(NormSpec::besov(7.0, 2, 2).validate(), std::invalid_argument);
  NormSpec bad = NormSpec::sobolev(1.0);
  bad.p = 4;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
}

TEST_CASE("discrete L^p norms") {
  Grid g(16, 2 * kPi);
  SpectralField s = from_real(g, sample(g, [](double x, double, double) { return std::sin(x); }));
  const double V = std::pow(2 * kPi, 3);
  CHECK(lp_norm(s, 2) == doctest::Approx(std::sqrt(0.5 * V)).epsilon(1e-13));
  CHECK(lp_norm(s, 4) == doctest::Approx(std::pow(0.375 * V, 0.25)).epsilon(1e-13));
  CHECK(lp_norm(s, 1) == doctest::Approx(2.0 / kPi * V).epsilon(2e-2));
  CHECK(lp_norm(s, kInf) == doctest::Approx(1.0).epsilon(1e-2));
}

TEST_CASE("Besov norm of a single-block field") {
  Grid g(32, 20.0);
  FilterBank bank(g);
  const int j = 0;
  SpectralField f = plateau_field(g, j, 5);
  REQUIRE(!f.is_zero());
  for (double p : {2.0, 4.0, kInf})
    for (double s : {-0.5, 0.0, 0.75}) {
      const double expect = std::exp2(j * s) * lp_norm(f, p);
      CHECK(besov_norm(f, s, p, 1.0, bank) == doctest::Approx(expect).epsilon(1e-12));
      CHECK(besov_norm(f, s, p, kInf, bank) == doctest::Approx(expect).epsilon(1e-12));
    }
  // A filtered block leaks into its neighbours, but its own term dominates.
  SpectralField b = dyadic_block(j, random_field(g, 1, 6, 15), bank);
  const double own = lp_norm(dyadic_block(j, b, bank), 2);
  CHECK(besov_norm(b, 0.0, 2.0, kInf, bank) == doctest::Approx(own).epsilon(0.05));
}

TEST_CASE("Besov norm properties on random fields") {
  Grid g(16, 8.0);
  FilterBank bank(g);
  for (int k = 0; k < 100; ++k) {
    SpectralField f = random_field(g, 1, 200 + k, 7);
    const double s = -1.0 + 0.02 * k;
    const double p = k % 2 ? 2.0 : 4.0;
    const double n1 = besov_norm(f, s, p, 1.0, bank), n2 = besov_norm(f, s, p, 2.0, bank),
                 ninf = besov_norm(f, s, p, kInf, bank);
    CHECK(ninf <= n2 * (1 + 1e-14));
    CHECK(n2 <= n1 * (1 + 1e-14));
    const double c = -3.7 + 0.1 * k;
    CHECK(besov_norm(c * f, s, p, 2.0, bank) == doctest::Approx(std::abs(c) * n2).epsilon(1e-12));
  }
}

TEST_CASE("L2 resolution of the squared partition") {
  Grid g(16, 8.0);
  FilterBank bank(g);
  for (int k = 0; k < 20; ++k) {
    SpectralField f = random_field(g, 3, 300 + k, 7);
    const double l2 = l2_norm(f);
    CHECK(besov_norm(f, NormSpec::sobolev(0.0), bank) == doctest::Approx(l2).epsilon(1e-10));
    double half = 0.0;
    for (int j = bank.j_min(); j <= bank.j_max(); ++j) half += std::pow(l2_norm(half_block(j, f, bank)), 2);
    CHECK(std::sqrt(half) == doctest::Approx(l2).epsilon(1e-12));
    const double b2 = besov_norm(f, 0.0, 2.0, 2.0, bank);
    CHECK(b2 <= l2 * (1 + 1e-12));
    CHECK(l2 <= std::sqrt(2.0) * b2 * (1 + 1e-12));
  }
  SpectralField pf = plateau_field(Grid(32, 20.0), 0, 9);
  FilterBank pb(pf.grid());
  CHECK(besov_norm(pf, 0.0, 2.0, 2.0, pb) == doctest::Approx(l2_norm(pf)).epsilon(1e-12));
}

TEST_CASE("product ratios: zero data and hypotheses") {
  Grid g(16, 8.0);
  FilterBank bank(g);
  SpectralField z(g, 1), u = random_field(g, 1, 1, 3);
  CHECK(ratio_bi0(z, z, 0.5, 0.5, kInf, kInf, bank) == 0.0);
  CHECK(ratio_bi1(z, u, 0.5, 0.5, 4, kInf, bank) == 0.0);
  CHECK(ratio_bi2(z, u, 0.5, 0.5, 4, kInf, bank) == 0.0);
  CHECK_THROWS_AS(ratio_bi0(u, u, 1.5, 0.5, kInf, kInf, bank), std::invalid_argument);
  CHECK_THROWS_AS(ratio_bi0(u, u, -0.5, 0.25, kInf, kInf, bank), std::invalid_argument);
  CHECK_THROWS_AS(ratio_bi0(u, u, 0.5, 0.5, 1.0, 1.0, bank), std::invalid_argument);
  CHECK_THROWS_AS(ratio_bi1(u, u, 0.5, 0.5, 1.5, kInf, bank), std::invalid_argument);
  CHECK_THROWS_AS(ratio_bi1(u, u, 0.8, 0.5, 4, kInf, bank), std::invalid_argument);
  CHECK_THROWS_AS(ratio_bi2(u, u, 0.5, 1.5, 4, kInf, bank), std::invalid_argument);
  CHECK(std::isfinite(ratio_bi0(u, random_field(g, 1, 2, 3), 0.5, 0.5, kInf, kInf, bank)));
}

TEST_CASE("commutator") {
  Grid g(16, 8.0);
  FilterBank bank(g);
  SpectralField u = random_field(g, 1, 3, 3);
  SpectralField h(g, 1);
  h.at(0, 0) = 2.5;
  // grad h = 0 makes the right side vanish; check the commutator itself via a
  // nonconstant h of tiny amplitude added to the constant.
  CHECK(ratio_commutator(h, u, 0.5, 2.0, bank) == 0.0);
  SpectralField h2 = random_field(g, 1, 4, 3);
  const double r1 = ratio_commutator(h2, u, 0.5, 2.0, bank);
  h2.at(0, 0) = 7.0;
  const double r2 = ratio_commutator(h2, u, 0.5, 2.0, bank);
  CHECK(r1 > 0.0);
  CHECK(r2 == doctest::Approx(r1).epsilon(1e-10));
  CHECK_THROWS_AS(ratio_commutator(h2, u, 2.5, 2.0, bank), std::invalid_argument);
  CHECK_THROWS_AS(ratio_commutator(h2, u, -1.5, 2.0, bank), std::invalid_argument);
}

TEST_CASE("composition") {
  Grid g(24, 8.0);
  FilterBank bank(g);
  SpectralField u = 0.005 * random_field(g, 1, 5, 3), v = 0.005 * random_field(g, 1, 6, 3);
  const ScalarMap Psi = [](double z) { return 1.0 / (1.0 + z); };
  CHECK(ratio_composition(Psi, u, u, 0.5, 2.0, bank) == 0.0);

  const ScalarMap lin = [](double z) { return 2.0 * z; };
  const double uv = besov_norm(u, 1.5, 2, 1, bank) + besov_norm(v, 1.5, 2, 1, bank);
  CHECK(ratio_composition(lin, u, v, 0.5, 2.0, bank) == doctest::Approx(2.0 / (1.0 + uv)).epsilon(1e-10));
  CHECK(std::isfinite(ratio_composition(Psi, u, v, 0.5, 2.0, bank)));
  CHECK_THROWS_AS(ratio_composition(Psi, u, v, 1.5, 2.0, bank), std::invalid_argument);
  CHECK_NOTHROW(ratio_composition(Psi, u, v, 1.5, 1.0, bank));

  SpectralField rough = random_field(g, 1, 7, 11);
  const ScalarMap cube = [](double z) { return z * z * z; };
  CHECK_THROWS_AS(compose(cube, rough), std::range_error);
}

TEST_CASE("random shell fields") {
  Grid g(16, 8.0);
  FilterBank bank(g);
  SpectralField a = random_shell_field(g, bank, 42, 0, 1, 0.5, 3);
  SpectralField b = random_shell_field(g, bank, 42, 0, 1, 0.5, 3);
  SpectralField c = random_shell_field(g, bank, 43, 0, 1, 0.5, 3);
  CHECK(a.data() == b.data());
  CHECK(a.data() != c.data());
  CHECK(conjugate_asymmetry(a) < 1e-16);
  CHECK(a.at(0, 0) == cplx(0.0));
  for (std::size_t i = 0; i < g.size(); ++i) {
    auto k = g.mode_k(i);
    if (std::abs(k[0]) > 3 || std::abs(k[1]) > 3 || std::abs(k[2]) > 3) CHECK(a.at(0, i) == cplx(0.0));
  }
}

TEST_CASE("ratio ensembles are deterministic and finite") {
  SuiteSpec sp;
  sp.lemma = "bi0";
  sp.members = 5;
  RatioReport a = run_ratio_ensemble(sp, 16, 9), b = run_ratio_ensemble(sp, 16, 9);
  CHECK(a.ratios == b.ratios);
  for (double r : a.ratios) {
    CHECK(std::isfinite(r));
    CHECK(r >= 0.0);
  }
  sp.lemma = "nope";
  CHECK_THROWS_AS(run_ratio_ensemble(sp, 16, 9), std::invalid_argument);
  sp.lemma = "bi2";
  sp.s2 = 1.5;
  CHECK_THROWS_AS(validate_suite(sp), std::invalid_argument);
}
