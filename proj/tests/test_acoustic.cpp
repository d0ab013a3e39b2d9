#include <cmath>
#include <random>

#include <Eigen/Eigenvalues>
#include <unsupported/Eigen/MatrixFunctions>

#include "doctest.h"
#include "lowmach/acoustic.hpp"
#include "lowmach/besov.hpp"
#include "lowmach/field_ops.hpp"
#include "test_util.hpp"

using namespace lowmach;
using testutil::max_abs;
using testutil::max_abs_diff;
using testutil::random_field;

namespace {

Vec3 direction(std::mt19937_64& rng) {
  std::normal_distribution<double> d(0.0, 1.0);
  Vec3 v{d(rng), d(rng), d(rng)};
  const double n = std::sqrt(v[0] * v[0] + v[1] * v[1] + v[2] * v[2]);
  return {v[0] / n, v[1] / n, v[2] / n};
}

Vec3 scaled(const Vec3& d, double k) { return {k * d[0], k * d[1], k * d[2]}; }

double entry_err(const Mat4& a, const Mat4& b) { return (a - b).cwiseAbs().maxCoeff(); }

}  // namespace

TEST_CASE("phi functions") {
  for (cplx z : {cplx(0.0), cplx(1e-3, 2e-3), cplx(0.5, -0.3), cplx(-2.0, 5.0), cplx(-40.0, 0.0), cplx(3.0, 0.0)}) {
    CHECK(std::abs(phi(0, z) - std::exp(z)) <= 1e-15 * std::abs(std::exp(z)) + 1e-300);
    if (std::abs(z) > 0.1) {
      CHECK(std::abs(phi(1, z) - (std::exp(z) - 1.0) / z) < 1e-13 * std::max(1.0, std::abs(phi(1, z))));
      CHECK(std::abs(phi(2, z) - (std::exp(z) - 1.0 - z) / (z * z)) < 1e-12 * std::max(1.0, std::abs(phi(2, z))));
    }
    const cplx h = 1e-6;
    for (int k = 0; k < 3; ++k) {
      const cplx fd = (phi(k, z + h) - phi(k, z - h)) / (2.0 * h);
      CHECK(std::abs(phi_prime(k, z) - fd) < 1e-7 * std::max(1.0, std::abs(fd)));
    }
  }
  CHECK(phi(2, 0.0) == cplx(0.5));
  CHECK(phi(3, 0.0).real() == doctest::Approx(1.0 / 6.0));
  // Continuity across the series/recurrence switch.
  CHECK(std::abs(phi(3, 0.999999) - phi(3, 1.000001)) < 1e-6);
}

TEST_CASE("divided differences") {
  AnalyticFn e = scaled_phi(0, 2.0);
  const cplx x(-1.0, 0.3), y(-1.0 + 1e-9, 0.3);
  CHECK(std::abs(divided_difference(e, x, y) - 2.0 * std::exp(2.0 * x)) < 1e-8);
  CHECK(std::abs(divided_difference(e, x, x) - 2.0 * std::exp(2.0 * x)) < 1e-15);
  const cplx a(-0.3, 0.2), b(-0.5, -0.1);
  CHECK(std::abs(divided_difference(e, a, b) - (std::exp(2.0 * a) - std::exp(2.0 * b)) / (a - b)) < 1e-14);
}

TEST_CASE("eigenvalues against a numeric eigensolver") {
  auto eig_check = [](double k, double eps, double mu0) {
    Vec3 xi{k, 0.0, 0.0};
    auto [lp, lm] = eigenvalues(xi, eps, mu0);
    Eigen::ComplexEigenSolver<Mat4> es(symbol_matrix(xi, eps, mu0));
    for (cplx l : {lp, lm}) {
      double best = 1e300;
      for (int i = 0; i < 4; ++i) best = std::min(best, std::abs(es.eigenvalues()(i) - l));
      CHECK(best < 1e-7 * std::max(1.0, std::abs(l)));
      const cplx res = l * l + 2.0 * mu0 * k * k * l + k * k / (eps * eps);
      CHECK(std::abs(res) < 1e-10 * std::max(std::norm(l), k * k / (eps * eps)));
    }
    return std::pair{lp, lm};
  };
  auto [a, b] = eig_check(1.0, 1.0, 1.0);
  CHECK(std::abs(a + 1.0) < 1e-12);
  CHECK(std::abs(b + 1.0) < 1e-12);
  auto [c, d] = eig_check(2.0, 1.0, 1.0);
  CHECK(std::abs(c - (-4.0 + 2.0 * std::sqrt(3.0))) < 1e-12);
  CHECK(std::abs(d - (-4.0 - 2.0 * std::sqrt(3.0))) < 1e-12);
  auto [e, f] = eig_check(0.5, 1.0, 1.0);
  CHECK(std::abs(e - cplx(-0.25, std::sqrt(0.25 - 1.0 / 16.0))) < 1e-12);
  CHECK(std::abs(f - cplx(-0.25, -std::sqrt(0.25 - 1.0 / 16.0))) < 1e-12);
  CHECK_THROWS_AS(eigenvalues({0.0, 0.0, 0.0}, 1.0, 1.0), std::invalid_argument);
}

TEST_CASE("projections are complementary idempotents") {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> U(0.0, 1.0);
  int tested = 0;
  for (int k = 0; k < 1000; ++k) {
    const double eps = std::exp(std::log(1.0 / 64) + U(rng) * std::log(64.0 / 0.25 / 4));
    const double mu0 = 0.5 + 1.5 * U(rng);
    const double kn = std::exp(std::log(0.05) + U(rng) * std::log(200.0));
    Vec3 xi = scaled(direction(rng), kn);
    if (is_degenerate(kn, eps, mu0)) {
      CHECK_THROWS_AS(projections(xi, eps, mu0), DegenerateSymbol);
      continue;
    }
    ++tested;
    auto [Pp, Pm] = projections(xi, eps, mu0);
    const double scale = std::max(1.0, std::max(Pp.cwiseAbs().maxCoeff(), Pm.cwiseAbs().maxCoeff()));
    CHECK(entry_err(Pp * Pp, Pp) < 1e-9 * scale * scale);
    CHECK(entry_err(Pm * Pm, Pm) < 1e-9 * scale * scale);
    CHECK((Pp * Pm).cwiseAbs().maxCoeff() < 1e-9 * scale * scale);
    // Identity on the longitudinal subspace, annihilation of transverse vectors.
    Eigen::Vector4cd ea = Eigen::Vector4cd::Zero(), eq = Eigen::Vector4cd::Zero(), et = Eigen::Vector4cd::Zero();
    ea(0) = 1.0;
    for (int i = 0; i < 3; ++i) eq(i + 1) = xi[i] / kn;
    Vec3 w{xi[1], -xi[0], 0.0};
    for (int i = 0; i < 3; ++i) et(i + 1) = w[i];
    CHECK(((Pp + Pm) * ea - ea).cwiseAbs().maxCoeff() < 1e-9 * scale);
    CHECK(((Pp + Pm) * eq - eq).cwiseAbs().maxCoeff() < 1e-9 * scale);
    CHECK((Pp * et).cwiseAbs().maxCoeff() < 1e-12 * kn * scale);
    CHECK((Pm * et).cwiseAbs().maxCoeff() < 1e-12 * kn * scale);
  }
  CHECK(tested > 900);
}

TEST_CASE("symbol record") {
  AcousticSymbol s = AcousticSymbol::make({1.0, 0.0, 0.0}, 1.0, 1.0);
  CHECK(s.degenerate);
  CHECK(s.P_plus.isZero());
  AcousticSymbol t = AcousticSymbol::make({0.0, 2.0, 0.0}, 0.1, 1.0);
  CHECK(!t.degenerate);
  CHECK(entry_err(t.P_plus * t.P_plus, t.P_plus) < 1e-12);
}

TEST_CASE("propagator matches the matrix exponential") {
  std::mt19937_64 rng(23);
  std::uniform_real_distribution<double> U(0.0, 1.0);
  const double mus[3] = {0.5, 1.0, 2.0};
  double worst = 0.0;
  for (int k = 0; k < 1000; ++k) {
    const double eps = std::exp(std::log(1e-3) + U(rng) * std::log(1e3));
    const double mu0 = mus[k % 3];
    double kn;
    if (k % 5 == 0) {
      // Band around the degeneracy threshold.
      const double delta = (2.0 * U(rng) - 1.0) * (k % 10 == 0 ? 1e-6 : 2e-3);
      kn = (1.0 + delta) / (eps * mu0);
    } else {
      kn = std::exp(std::log(0.05) + U(rng) * std::log(100.0));
    }
    // Keep the oscillation count kappa t moderate so the oracle itself is accurate.
    double t = 10.0 * U(rng);
    t = std::min(t, 200.0 * eps / kn);
    Vec3 xi = scaled(direction(rng), kn);
    Mat4 A = symbol_matrix(xi, eps, mu0);
    Mat4 oracle = (A * t).exp();
    Mat4 ours = propagator_mode(xi, t, eps, mu0);
    const double err = entry_err(ours, oracle);
    worst = std::max(worst, err);
    CHECK(err < 1e-9);
  }
  MESSAGE("max entry error vs expm: " << worst);
  CHECK(propagator_mode({0.3, -0.2, 1.0}, 0.0, 0.1, 1.0).isApprox(Mat4::Identity(), 1e-14));
}

TEST_CASE("closed form at the degeneracy threshold") {
  Vec3 xi{1.0, 0.0, 0.0};
  Mat4 A = symbol_matrix(xi, 1.0, 1.0);
  Mat4 d = degenerate_propagator(xi, 1.0, 1.0, 1.0);
  CHECK(entry_err(d, A.exp()) < 1e-12);
  CHECK(entry_err(d, propagator_mode(xi, 1.0, 1.0, 1.0)) < 1e-12);
  const double e = std::exp(-1.0);
  CHECK(std::abs(d(0, 0) - 2.0 * e) < 1e-14);
  CHECK(std::abs(d(0, 1) - cplx(0.0, -e)) < 1e-14);
  CHECK(std::abs(d(1, 1)) < 1e-14);
  CHECK(std::abs(d(2, 2) - 1.0) < 1e-14);
  Vec3 xi2{0.0, 0.6, 0.8};
  CHECK(entry_err(degenerate_propagator(xi2, 2.5, 0.5, 2.0), (2.5 * symbol_matrix(xi2, 0.5, 2.0)).exp()) < 1e-12);
}

TEST_CASE("longitudinal kernel embeds to the full propagator") {
  std::mt19937_64 rng(29);
  std::uniform_real_distribution<double> U(0.0, 1.0);
  for (int k = 0; k < 200; ++k) {
    const double eps = 0.01 + U(rng), mu0 = 0.5 + U(rng), t = 3.0 * U(rng);
    const double kn = 0.1 + 5.0 * U(rng);
    Vec3 xi = scaled(direction(rng), kn);
    Mat2 m = longitudinal_function(kn / eps, mu0 * kn * kn, is_degenerate(kn, eps, mu0), scaled_phi(0, t));
    CHECK(entry_err(embed(m, xi, 1.0), propagator_mode(xi, t, eps, mu0)) < 1e-12);
    // phi_1 of the block against the oracle t phi_1(tA) = A^{-1}(e^{tA} - I) on the longitudinal part.
    Mat2 p1 = longitudinal_function(kn / eps, mu0 * kn * kn, false, scaled_phi(1, t));
    Eigen::Matrix2cd M;
    M << 0.0, cplx(0, -kn / eps), cplx(0, -kn / eps), -2.0 * mu0 * kn * kn;
    Eigen::Matrix2cd ref = M.inverse() * ((M * t).exp() - Eigen::Matrix2cd::Identity());
    Eigen::Matrix2cd got;
    got << p1.a00, p1.a01, p1.a10, p1.a11;
    CHECK((got - ref).cwiseAbs().maxCoeff() < 1e-9 * std::max(1.0, ref.cwiseAbs().maxCoeff()));
    Mat2 p1d = longitudinal_function(kn / eps, mu0 * kn * kn, true, scaled_phi(1, t));
    got << p1d.a00, p1d.a01, p1d.a10, p1d.a11;
    CHECK((got - ref).cwiseAbs().maxCoeff() < 1e-9 * std::max(1.0, ref.cwiseAbs().maxCoeff()));
  }
}

TEST_CASE("field-level semigroup") {
  Grid g(16, 6.0);
  SpectralField f = random_field(g, 4, 3, 7);
  remove_mean(f);
  const double eps = 0.2, mu0 = 0.7;
  CHECK(max_abs_diff(apply_acoustic(f, 0.0, eps, mu0), f) < 1e-15 * max_abs(f));
  SpectralField two = apply_acoustic(apply_acoustic(f, 0.3, eps, mu0), 0.7, eps, mu0);
  SpectralField one = apply_acoustic(f, 1.0, eps, mu0);
  CHECK(max_abs_diff(two, one) < 1e-9 * max_abs(one));
  CHECK(l2_norm(two - one) < 1e-9 * l2_norm(one));

  // Per-mode agreement with the 4x4 propagator.
  for (std::size_t i : {g.index_of(1, 2, 3), g.index_of(-4, 0, 1), g.index_of(0, 0, 5)}) {
    Eigen::Vector4cd v;
    for (int c = 0; c < 4; ++c) v(c) = f.at(c, i);
    Eigen::Vector4cd w = propagator_mode(g.xi(i), 1.0, eps, mu0) * v;
    for (int c = 0; c < 4; ++c) CHECK(std::abs(one.at(c, i) - w(c)) < 1e-12);
  }

  // Large Mach parameter: oracle on a few modes.
  SpectralField big = apply_acoustic(f, 0.4, 1e6, mu0);
  for (std::size_t i : {g.index_of(1, 0, 0), g.index_of(2, -3, 1)}) {
    Eigen::Vector4cd v;
    for (int c = 0; c < 4; ++c) v(c) = f.at(c, i);
    Eigen::Vector4cd w = (0.4 * symbol_matrix(g.xi(i), 1e6, mu0)).exp() * v;
    for (int c = 0; c < 4; ++c) CHECK(std::abs(big.at(c, i) - w(c)) < 1e-9);
  }
}

TEST_CASE("wave and heat multipliers") {
  Grid g(16, 6.0);
  SpectralField f = random_field(g, 1, 4, 7);
  SpectralField w = apply_wave(f, 1.3, 0.1, 1);
  CHECK(l2_norm(w) == doctest::Approx(l2_norm(f)).epsilon(1e-12));
  CHECK(max_abs_diff(apply_wave(f, 0.0, 0.1, 1), f) == 0.0);
  CHECK(max_abs_diff(apply_wave(w, 1.3, 0.1, -1), f) < 1e-12 * max_abs(f));
  CHECK_THROWS_AS(apply_wave(f, 1.0, 1.0, 0), std::invalid_argument);

  CHECK(max_abs_diff(apply_heat(f, 0.0, 1.0), f) == 0.0);
  CHECK_THROWS_AS(apply_heat(f, -1.0, 1.0), std::invalid_argument);
  FilterBank bank(g);
  const double nu = 0.3, t = 0.2;
  for (int j = bank.j_min(); j <= bank.j_max(); ++j) {
    SpectralField b = dyadic_block(j, f, bank);
    const double n0 = l2_norm(b);
    if (n0 == 0.0) continue;
    const double r = l2_norm(apply_heat(b, t, nu)) / n0;
    CHECK(r <= std::exp(-nu * std::pow(0.75, 2) * std::pow(4.0, j) * t) * (1 + 1e-12));
    CHECK(r >= std::exp(-nu * std::pow(8.0 / 3.0, 2) * std::pow(4.0, j) * t) * (1 - 1e-12));
  }
  for (int s = 0; s < 50; ++s) {
    SpectralField r = random_field(g, 1, 500 + s, 7);
    CHECK(lp_norm(apply_heat(r, 0.05, 1.0), kInf) <= lp_norm(r, kInf) * (1 + 1e-12));
  }
}

TEST_CASE("field projections") {
  Grid g(16, 6.0);
  SpectralField f = random_field(g, 4, 8, 7);
  remove_mean(f);
  const double eps = 0.05, mu0 = 1.0;
  SpectralField pp = apply_projection(f, eps, mu0, 1), pm = apply_projection(f, eps, mu0, -1);
  SpectralField again = apply_projection(pp, eps, mu0, 1);
  CHECK(max_abs_diff(again, pp) < 1e-12 * max_abs(pp));
  CHECK(max_abs(apply_projection(pp, eps, mu0, -1)) < 1e-12 * max_abs(pp));
  // P+ + P- is the longitudinal part: density plus Q of the velocity.
  SpectralField lon = pp + pm;
  SpectralField vel(g, 3);
  for (int c = 0; c < 3; ++c) vel.set_component(c, f.component(c + 1));
  SpectralField qv = helmholtz_Q(vel);
  CHECK(max_abs_diff(lon.component(0), f.component(0)) < 1e-12 * max_abs(f));
  for (int c = 0; c < 3; ++c) CHECK(max_abs_diff(lon.component(c + 1), qv.component(c)) < 1e-12 * max_abs(f));
}

TEST_CASE("cached propagator matches the per-call operator") {
  Grid g(16, 2 * M_PI);
  SpectralField f = testutil::random_field(g, 4, 77, 7);
  // eps mu0 = 1/|xi| for |xi| = 2 puts lattice modes exactly on the threshold.
  for (double eps : {0.5, 0.05, 1e-3})
    for (double t : {0.0, 0.01, 0.3, 2.0}) {
      AcousticPropagator P(g, eps, 1.0);
      SpectralField a = P.apply(f, t);
      SpectralField b = t == 0.0 ? f : ModeOperator(g, eps, 1.0, 0.0, scaled_phi(0, t)).apply(f);
      CHECK(testutil::max_abs_diff(a, b) <= 1e-13 * testutil::max_abs(f));
    }
  AcousticPropagator P(g, 0.1, 1.0);
  CHECK_THROWS_AS(P.apply(f, -1.0), std::invalid_argument);
  CHECK_THROWS_AS(P.apply(f.component(0), 1.0), std::invalid_argument);
}
