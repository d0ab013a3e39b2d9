#pragma once

#include <climits>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "lowmach/besov.hpp"
#include "lowmach/field.hpp"
#include "lowmach/physics.hpp"
#include "lowmach/rate_fit.hpp"

namespace lowmach {

// Fixed-point iteration failed to contract ("force too large").
struct SolverFailure : std::runtime_error {
  using std::runtime_error::runtime_error;
};
// rho_inf + eps b <= 0 somewhere on the grid.
struct DensityFailure : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Physical density rho_inf + eps b on the grid; throws DensityFailure if not positive.
RealGrid density(const SpectralField& b, double eps, const PhysicalParams& prm);

// ||F||_{B^{-3/2}_{2,inf}} + ||F||_{H^3}.
double force_norm(const SpectralField& F, const FilterBank& bank);
// Mean-free real vector field with shells j_lo..j_hi (|k|_inf within the
// 2/3 band), scaled so that force_norm equals amplitude.
SpectralField make_force(const Grid& g, std::uint64_t seed, double amplitude, int j_lo, int j_hi);

struct IncompressibleStationary {
  SpectralField u;
  double residual = 0.0;  // ||P[mu Lap u - rho div(u u) + rho F]||_{B^{-3/2}_{2,inf}}
  int iterations = 0;
  std::vector<double> updates;
};

IncompressibleStationary solve_incompressible_stationary(const SpectralField& F, const PhysicalParams& prm,
                                                         double tol = 1e-10, int max_iter = 200);

// Right-hand side g of the stationary momentum balance.
SpectralField eval_g_eps(const SpectralField& b, const SpectralField& v, const SpectralField& F, double eps,
                         const PhysicalParams& prm);

struct StationaryOptions {
  double tol = 1e-10;
  int max_iter = 200;
  int j_cut = INT_MAX;  // truncation of the transport term; INT_MAX: none
  bool relax = true;    // damping 0.5 once the update norm oscillates
};

struct StationaryPair {
  SpectralField b_star, v_star;
  double residual_mass = 0.0;      // B^{-1/2}_{2,inf}
  double residual_momentum = 0.0;  // B^{-3/2}_{2,inf}
  int iterations = 0;
  bool relaxed = false;
  std::vector<double> updates;
};

struct StationaryResiduals {
  double mass = 0.0, momentum = 0.0;
};
// Substitutes (rho_inf + eps b, v) into the original stationary system.
StationaryResiduals stationary_residuals(const SpectralField& b, const SpectralField& v, const SpectralField& F,
                                         double eps, const PhysicalParams& prm);

StationaryPair solve_compressible_stationary(const SpectralField& F, double eps, const PhysicalParams& prm,
                                             const StationaryOptions& opt = {},
                                             const StationaryPair* guess = nullptr);

struct StationaryLimit {
  std::vector<double> eps, b_norm, q_norm, p_norm, total, residual;
  RateFit fit, q_fit, p_fit, b_fit;
  std::string json() const;
};

// Per eps: ||b*||_{B^{-1/2}_{2,inf}} + ||Qv*|| + ||Pv* - u*|| in B^{1/2}_{2,inf}, fitted log-log.
StationaryLimit measure_stationary_limit(const SpectralField& F, const std::vector<double>& eps_list,
                                         const PhysicalParams& prm, const StationaryOptions& opt = {});

// Largest amplitude (bisection on a multiple of the force shape) at which
// the compressible solve still contracts.
double force_threshold(const SpectralField& shape, double eps, const PhysicalParams& prm, double lo, double hi,
                       int steps = 12);

std::string stationary_report_json(const StationaryPair& s, double eps, const SpectralField& F,
                                   const PhysicalParams& prm);

}  // namespace lowmach
