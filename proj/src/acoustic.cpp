#include "lowmach/acoustic.hpp"

#include <cmath>

namespace lowmach {

namespace {

constexpr cplx I(0.0, 1.0);

double norm3(const Vec3& xi) { return std::sqrt(xi[0] * xi[0] + xi[1] * xi[1] + xi[2] * xi[2]); }

// Longitudinal eigenvalues from kappa = |xi|/eps and damp = mu0|xi|^2. In
// the overdamped branch the small root comes from the product l+ l- = kappa^2.
std::pair<cplx, cplx> roots(double kappa, double damp) {
  const double disc = (damp - kappa) * (damp + kappa);
  if (disc >= 0.0) {
    const double lm = -damp - std::sqrt(disc);
    return {cplx(kappa * kappa / lm), cplx(lm)};
  }
  const double w = std::sqrt(-disc);
  return {cplx(-damp, w), cplx(-damp, -w)};
}

// Basis of the longitudinal subspace: (1,0,0,0) and (0, xi_hat).
Eigen::Matrix<double, 4, 2> long_basis(const Vec3& xi) {
  const double k = norm3(xi);
  Eigen::Matrix<double, 4, 2> B = Eigen::Matrix<double, 4, 2>::Zero();
  B(0, 0) = 1.0;
  for (int i = 0; i < 3; ++i) B(i + 1, 1) = xi[i] / k;
  return B;
}

Mat4 projection_from(const Vec3& xi, double eps, cplx lambda) {
  const double k = norm3(xi);
  Eigen::Vector4cd E;
  E(0) = -I * k * k / (lambda * eps);
  for (int i = 0; i < 3; ++i) E(i + 1) = xi[i];
  const cplx dot = (E.transpose() * E)(0, 0);
  return E * E.transpose() / dot;
}

}  // namespace

std::pair<cplx, cplx> eigenvalues(const Vec3& xi, double eps, double mu0) {
  const double k = norm3(xi);
  if (k == 0.0) throw std::invalid_argument("eigenvalues: |xi| = 0 (zero mode has eigenvalue 0)");
  return roots(k / eps, mu0 * k * k);
}

bool is_degenerate(double xi_norm, double eps, double mu0, double tol) {
  return std::abs(xi_norm * eps * mu0 - 1.0) < tol;
}

Mat4 symbol_matrix(const Vec3& xi, double eps, double mu0) {
  Mat4 A = Mat4::Zero();
  for (int i = 0; i < 3; ++i) {
    A(0, i + 1) = -I * xi[i] / eps;
    A(i + 1, 0) = -I * xi[i] / eps;
    for (int j = 0; j < 3; ++j) A(i + 1, j + 1) = -2.0 * mu0 * xi[i] * xi[j];
  }
  return A;
}

std::pair<Mat4, Mat4> projections(const Vec3& xi, double eps, double mu0) {
  const double k = norm3(xi);
  if (is_degenerate(k, eps, mu0))
    throw DegenerateSymbol("projections: |xi| eps mu0 within the degeneracy window of 1");
  auto [lp, lm] = eigenvalues(xi, eps, mu0);
  return {projection_from(xi, eps, lp), projection_from(xi, eps, lm)};
}

AcousticSymbol AcousticSymbol::make(const Vec3& xi, double eps, double mu0) {
  AcousticSymbol s;
  s.xi = xi;
  s.eps = eps;
  s.mu0 = mu0;
  std::tie(s.lambda_plus, s.lambda_minus) = eigenvalues(xi, eps, mu0);
  s.degenerate = is_degenerate(norm3(xi), eps, mu0);
  if (!s.degenerate) std::tie(s.P_plus, s.P_minus) = projections(xi, eps, mu0);
  return s;
}

Mat2 longitudinal_function(double kappa, double damp, bool degenerate, const AnalyticFn& fn) {
  auto [lp, lm] = roots(kappa, damp);
  Mat2 r;
  if (kappa == 0.0) {
    // Zero mode: M = 0.
    const cplx f0 = fn.f(0.0);
    r.a00 = r.a11 = f0;
    return r;
  }
  if (degenerate) {
    // f(M) = f(l-) I + f[l+, l-] (M - l- I), exact for any 2x2 M.
    const cplx fm = fn.f(lm), d = divided_difference(fn, lp, lm);
    r.a00 = fm + d * (-lm);
    r.a01 = d * (-I * kappa);
    r.a10 = d * (-I * kappa);
    r.a11 = fm + d * (-2.0 * damp - lm);
    return r;
  }
  for (cplx l : {lp, lm}) {
    // e = (-i kappa / l, 1), P = e e^T / (e . e).
    const cplx e0 = -I * kappa / l;
    const cplx den = e0 * e0 + 1.0;
    const cplx w = fn.f(l) / den;
    r.a00 += w * e0 * e0;
    r.a01 += w * e0;
    r.a10 += w * e0;
    r.a11 += w;
  }
  return r;
}

Mat4 embed(const Mat2& m, const Vec3& xi, cplx transverse) {
  const auto B = long_basis(xi);
  Eigen::Matrix2cd M;
  M << m.a00, m.a01, m.a10, m.a11;
  const Eigen::Matrix4d BBt = B * B.transpose();
  return B.cast<cplx>() * M * B.transpose().cast<cplx>() +
         transverse * (Eigen::Matrix4d::Identity() - BBt).cast<cplx>();
}

Mat4 propagator_mode(const Vec3& xi, double t, double eps, double mu0) {
  if (t < 0.0) throw std::invalid_argument("propagator_mode: t must be >= 0");
  const double k = norm3(xi);
  if (k == 0.0 || t == 0.0) return Mat4::Identity();
  if (is_degenerate(k, eps, mu0))
    return embed(longitudinal_function(k / eps, mu0 * k * k, true, scaled_phi(0, t)), xi, 1.0);
  auto [lp, lm] = eigenvalues(xi, eps, mu0);
  auto [Pp, Pm] = projections(xi, eps, mu0);
  const auto B = long_basis(xi);
  const Eigen::Matrix4d T = Eigen::Matrix4d::Identity() - B * B.transpose();
  return std::exp(lp * t) * Pp + std::exp(lm * t) * Pm + T.cast<cplx>();
}

Mat4 degenerate_propagator(const Vec3& xi, double t, double eps, double mu0) {
  const double k = norm3(xi);
  if (k == 0.0) return Mat4::Identity();
  const double at = mu0 * k * k * t;
  const double e = std::exp(-at);
  Mat2 m;
  m.a00 = e * (1.0 + at);
  m.a01 = m.a10 = -I * (k / eps) * t * e;
  m.a11 = e * (1.0 - at);
  return embed(m, xi, 1.0);
}

// ---------------------------------------------------------------------------

ModeOperator::ModeOperator(const Grid& g, double eps, double mu0, double nu_t, const AnalyticFn& fn)
    : grid_(g), lon_(g.size()), tr_(g.size()) {
  if (!(eps > 0.0)) throw std::invalid_argument("mode operator: eps must be positive");
  for (std::size_t i = 0; i < g.size(); ++i) {
    const double k = g.xi_norm(i);
    lon_[i] = longitudinal_function(k / eps, mu0 * k * k, is_degenerate(k, eps, mu0), fn);
    tr_[i] = fn.f(-nu_t * k * k);
  }
}

namespace {

// Applies lon(i) on (density, xi_hat . velocity) and tr(i) on the transverse
// velocity; the zero mode gets the diagonal of lon(0).
template <class Lon, class Tr>
SpectralField apply_blocks(const Grid& grid, const SpectralField& f, Lon&& lon, Tr&& tr) {
  SpectralField out(grid, 4);
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const Mat2 m = lon(i);
    const cplx a = f.at(0, i);
    const double k = grid.xi_norm(i);
    if (k == 0.0) {
      out.at(0, i) = m.a00 * a;
      for (int c = 1; c < 4; ++c) out.at(c, i) = m.a11 * f.at(c, i);
      continue;
    }
    const auto& xi = grid.xi(i);
    const double h[3] = {xi[0] / k, xi[1] / k, xi[2] / k};
    const cplx q = h[0] * f.at(1, i) + h[1] * f.at(2, i) + h[2] * f.at(3, i);
    const cplx a2 = m.a00 * a + m.a01 * q;
    const cplx q2 = m.a10 * a + m.a11 * q;
    const cplx t = tr(i);
    out.at(0, i) = a2;
    for (int c = 0; c < 3; ++c) out.at(c + 1, i) = t * (f.at(c + 1, i) - h[c] * q) + h[c] * q2;
  }
  return out;
}

void check_four(const SpectralField& f, const Grid& g, const char* who) {
  if (f.components() != 4) throw std::invalid_argument(std::string(who) + ": 4-component field expected");
  if (f.grid() != g) throw std::invalid_argument(std::string(who) + ": grid mismatch");
}

}  // namespace

SpectralField ModeOperator::apply(const SpectralField& f) const {
  check_four(f, grid_, "mode operator");
  return apply_blocks(
      grid_, f, [&](std::size_t i) -> const Mat2& { return lon_[i]; }, [&](std::size_t i) { return tr_[i]; });
}

AcousticPropagator::AcousticPropagator(const Grid& g, double eps, double mu0)
    : grid_(g), eps_(eps), mu0_(mu0), lp_(g.size()), lm_(g.size()), pp_(g.size()), pm_(g.size()),
      degenerate_(g.size(), 0) {
  if (!(eps > 0.0)) throw std::invalid_argument("acoustic propagator: eps must be positive");
  for (std::size_t i = 1; i < g.size(); ++i) {
    const double k = g.xi_norm(i), kappa = k / eps;
    if (is_degenerate(k, eps, mu0)) {
      degenerate_[i] = 1;
      continue;
    }
    std::tie(lp_[i], lm_[i]) = roots(kappa, mu0 * k * k);
    auto proj = [&](cplx l) {
      const cplx e0 = -I * kappa / l;
      const cplx den = e0 * e0 + 1.0;
      return Mat2{e0 * e0 / den, e0 / den, e0 / den, 1.0 / den};
    };
    pp_[i] = proj(lp_[i]);
    pm_[i] = proj(lm_[i]);
  }
}

SpectralField AcousticPropagator::apply(const SpectralField& f, double t) const {
  if (t < 0.0) throw std::invalid_argument("acoustic propagator: t must be >= 0");
  check_four(f, grid_, "acoustic propagator");
  if (t == 0.0) return f;
  const AnalyticFn fn = scaled_phi(0, t);
  auto lon = [&](std::size_t i) {
    if (i == 0) return Mat2{1.0, 0.0, 0.0, 1.0};
    if (degenerate_[i]) {
      const double k = grid_.xi_norm(i);
      return longitudinal_function(k / eps_, mu0_ * k * k, true, fn);
    }
    cplx ep, em;
    if (lp_[i].imag() != 0.0) {
      // Conjugate pair: one real exponential and one rotation.
      ep = std::exp(lp_[i].real() * t) * std::polar(1.0, lp_[i].imag() * t);
      em = std::conj(ep);
    } else {
      ep = std::exp(lp_[i].real() * t);
      em = std::exp(lm_[i].real() * t);
    }
    const Mat2 &a = pp_[i], &b = pm_[i];
    return Mat2{ep * a.a00 + em * b.a00, ep * a.a01 + em * b.a01, ep * a.a10 + em * b.a10,
                ep * a.a11 + em * b.a11};
  };
  return apply_blocks(grid_, f, lon, [](std::size_t) { return cplx(1.0); });
}

SpectralField apply_acoustic(const SpectralField& f, double t, double eps, double mu0) {
  if (t < 0.0) throw std::invalid_argument("apply_acoustic: t must be >= 0");
  if (t == 0.0) return f;
  return AcousticPropagator(f.grid(), eps, mu0).apply(f, t);
}

SpectralField apply_wave(const SpectralField& f, double t, double eps, int sign) {
  if (sign != 1 && sign != -1) throw std::invalid_argument("apply_wave: sign must be +1 or -1");
  const double c = sign * t / eps;
  SpectralField out = f;
  const Grid& g = f.grid();
  for (std::size_t i = 0; i < g.size(); ++i) {
    const cplx m = std::polar(1.0, c * g.xi_norm(i));
    for (int k = 0; k < f.components(); ++k) out.at(k, i) *= m;
  }
  return out;
}

SpectralField apply_heat(const SpectralField& f, double t, double nu) {
  if (t < 0.0) throw std::invalid_argument("apply_heat: t must be >= 0");
  if (!(nu > 0.0)) throw std::invalid_argument("apply_heat: nu must be positive");
  SpectralField out = f;
  const Grid& g = f.grid();
  for (std::size_t i = 0; i < g.size(); ++i) {
    const double m = std::exp(-nu * t * g.xi_norm2(i));
    for (int k = 0; k < f.components(); ++k) out.at(k, i) *= m;
  }
  return out;
}

SpectralField apply_projection(const SpectralField& f, double eps, double mu0, int sign) {
  if (sign != 1 && sign != -1) throw std::invalid_argument("apply_projection: sign must be +1 or -1");
  if (f.components() != 4) throw std::invalid_argument("apply_projection: 4-component field expected");
  const Grid& g = f.grid();
  SpectralField out(g, 4);
  for (std::size_t i = 1; i < g.size(); ++i) {
    const double k = g.xi_norm(i);
    if (f.at(0, i) == 0.0 && f.at(1, i) == 0.0 && f.at(2, i) == 0.0 && f.at(3, i) == 0.0) continue;
    if (is_degenerate(k, eps, mu0))
      throw DegenerateSymbol("apply_projection: an occupied mode lies in the degeneracy window");
    auto [lp, lm] = roots(k / eps, mu0 * k * k);
    const cplx e0 = -I * (k / eps) / (sign > 0 ? lp : lm);
    const cplx den = e0 * e0 + 1.0;
    const auto& xi = g.xi(i);
    const double h[3] = {xi[0] / k, xi[1] / k, xi[2] / k};
    const cplx a = f.at(0, i);
    const cplx q = h[0] * f.at(1, i) + h[1] * f.at(2, i) + h[2] * f.at(3, i);
    const cplx s = (e0 * a + q) / den;
    out.at(0, i) = e0 * s;
    for (int c = 0; c < 3; ++c) out.at(c + 1, i) = h[c] * s;
  }
  return out;
}

}  // namespace lowmach
