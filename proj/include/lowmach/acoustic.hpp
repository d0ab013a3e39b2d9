#pragma once

#include <array>
#include <stdexcept>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "lowmach/field.hpp"
#include "lowmach/phi_functions.hpp"

namespace lowmach {

using Mat4 = Eigen::Matrix4cd;
using Vec3 = std::array<double, 3>;

// Relative half-width of the window around |xi| eps mu0 = 1 in which the
// two-projection resolution is replaced by the confluent Newton form.
inline constexpr double kDegeneracyTol = 1e-3;

struct DegenerateSymbol : std::domain_error {
  using std::domain_error::domain_error;
};

// Roots of l^2 + 2 mu0 |xi|^2 l + |xi|^2 / eps^2 = 0, (lambda_+, lambda_-).
std::pair<cplx, cplx> eigenvalues(const Vec3& xi, double eps, double mu0);
bool is_degenerate(double xi_norm, double eps, double mu0, double tol = kDegeneracyTol);

// Explicit 4x4 symbol on (density, velocity):
//   [[0, -i xi^T / eps], [-i xi / eps, -2 mu0 xi xi^T]].
Mat4 symbol_matrix(const Vec3& xi, double eps, double mu0);

// Longitudinal projections E E^T / (E . E), E = (-i |xi|^2 / (lambda eps), xi),
// with the bilinear (unconjugated) product. Throws DegenerateSymbol inside
// the degeneracy window.
std::pair<Mat4, Mat4> projections(const Vec3& xi, double eps, double mu0);

struct AcousticSymbol {
  Vec3 xi{};
  double eps = 1.0, mu0 = 1.0;
  cplx lambda_plus, lambda_minus;
  Mat4 P_plus = Mat4::Zero(), P_minus = Mat4::Zero();  // zero when degenerate
  bool degenerate = false;

  static AcousticSymbol make(const Vec3& xi, double eps, double mu0);
};

// e^{t A(xi)}: spectral resolution on the longitudinal subspace (Newton form in
// the degeneracy window), identity on transverse velocities.
Mat4 propagator_mode(const Vec3& xi, double t, double eps, double mu0);
// Closed form valid exactly on the threshold |xi| = 1/(eps mu0).
Mat4 degenerate_propagator(const Vec3& xi, double t, double eps, double mu0);

// 2x2 matrices on the longitudinal coordinates (density, xi_hat . velocity).
struct Mat2 {
  cplx a00{}, a01{}, a10{}, a11{};
};

// fn(M) for M = [[0, -i kappa], [-i kappa, -2 damp]] (kappa = |xi|/eps,
// damp = mu0 |xi|^2); degenerate decides between the resolution and the
// Newton form.
Mat2 longitudinal_function(double kappa, double damp, bool degenerate, const AnalyticFn& fn);
// Direct sum of a longitudinal 2x2 block and a transverse scalar.
Mat4 embed(const Mat2& m, const Vec3& xi, cplx transverse);

// Per-mode linear operator on 4-component fields (density, velocity):
// fn of the acoustic block on (density, xi_hat . velocity) and
// fn(-nu_t |xi|^2) on the transverse velocity.
class ModeOperator {
public:
  ModeOperator(const Grid& g, double eps, double mu0, double nu_t, const AnalyticFn& fn);
  SpectralField apply(const SpectralField& f) const;
  const Mat2& longitudinal(std::size_t idx) const { return lon_[idx]; }
  cplx transverse(std::size_t idx) const { return tr_[idx]; }

private:
  Grid grid_;
  std::vector<Mat2> lon_;
  std::vector<cplx> tr_;
};

// e^{tA_eps} for arbitrary t from per-mode eigen-data computed once.
class AcousticPropagator {
public:
  AcousticPropagator(const Grid& g, double eps, double mu0);
  SpectralField apply(const SpectralField& f, double t) const;
  const Grid& grid() const { return grid_; }
  double eps() const { return eps_; }
  double mu0() const { return mu0_; }

private:
  Grid grid_;
  double eps_, mu0_;
  std::vector<cplx> lp_, lm_;
  std::vector<Mat2> pp_, pm_;
  std::vector<char> degenerate_;
};

// e^{tA_eps} on a 4-component field.
SpectralField apply_acoustic(const SpectralField& f, double t, double eps, double mu0);
// Multiplier e^{sign i |xi| t / eps}.
SpectralField apply_wave(const SpectralField& f, double t, double eps, int sign);
// Multiplier e^{-nu t |xi|^2}; t < 0 rejected.
SpectralField apply_heat(const SpectralField& f, double t, double nu);
// F^{-1}[P_sign f^] on a 4-component field (sign = +1 or -1); degenerate modes
// are rejected.
SpectralField apply_projection(const SpectralField& f, double eps, double mu0, int sign);

}  // namespace lowmach
