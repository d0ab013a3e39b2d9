#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "lowmach/acoustic.hpp"
#include "lowmach/besov.hpp"
#include "lowmach/rate_fit.hpp"

namespace lowmach {

// Constants that the estimates leave unquantified, frozen in
// calibration/constants.json. Viscosity enters through mu0-normalized forms.
struct Calibration {
  std::string version;
  double c_per_mu0 = 0.5;            // heat rate of case (i) blocks, c = c_per_mu0 * mu0 * 4^j
  double slow_rate_times_mu0 = 0.5;  // case (ii) decay rate times mu0 eps^2
  double d2_times_mu0 = 0.375;
  double d0_times_mu0 = 0.3;
  double eps0 = 0.25;
  double envelope_constant = 2.0;     // localized estimate, case (i)
  double envelope_constant_ii = 2.0;  // localized estimate, case (ii)
  double heat_constant = 2.0;         // bound of heat_envelope_ratio
  double upper_constant = 2.0;        // bound on (|P+V|^2 + |P-V|^2) / |V|^2
  double multiplier_constant = 2.0;   // bound of multiplier_ratio below d0

  double c(double mu0) const { return c_per_mu0 * mu0; }
  double slow_rate(double eps, double mu0) const { return slow_rate_times_mu0 / (mu0 * eps * eps); }
  double d2(double mu0) const { return d2_times_mu0 / mu0; }
  double d0(double mu0) const { return d0_times_mu0 / mu0; }
};

std::string default_calibration_path();
Calibration load_calibration(const std::string& path = default_calibration_path());
void save_calibration(const Calibration& c, const std::string& path);
// Recomputes every constant on an n^3 grid (mu0 = 1); deterministic.
Calibration calibrate(int n = 32);

struct SweepResult {
  std::string kind;
  // One row per sample: eps, t (or j), measured value, envelope, ratio.
  std::vector<double> eps, x, lhs, rhs, ratio;
  RateFit fit;
  double target = 0.0;
  std::string params_json;
  std::string extra_json;  // kind-specific diagnostics
};

std::string sweep_csv(const SweepResult& r);
std::string sweep_summary_json(const SweepResult& r, const Calibration& cal);

// Periodic images of a front leaving the origin meet at |x| = L/2; wave
// speed 1/eps. Time-domain measurements stay below 0.4 eps L.
double recurrence_guard(double eps, double L);
// Start of the far-field regime of the frequency-2^j wave kernel.
double near_field_end(double eps, int j);

// Density-only Gaussian bump of the given width centred in the box
// (4 components, zero mean, Nyquist-free).
SpectralField gaussian_bump(const Grid& g, double width);
// Density-only lattice delta at the origin.
SpectralField lattice_delta(const Grid& g);

struct DispersiveSpec {
  int n = 64;
  double L = 70.0;
  int j = 0;
  double eps = 1.0;
  std::vector<double> t_list;  // empty: 16 geometric times over the far-field window
};

// sup-norm / L^1 ratio of the block of e^{i|D|t/eps} applied to a lattice delta.
double dispersive_ratio(const Grid& g, const FilterBank& bank, int j, double eps, double t);
// Samples in t, fitted log-log slope (target -1); extra_json carries the L^2 drift.
SweepResult measure_dispersive(const DispersiveSpec& spec);

struct LocalizedSpec {
  int n = 32;
  double L = 16.0;
  int j = 0;
  double eps = 1.0 / 16;
  double p = 2.0;
  double mu0 = 1.0;
  std::vector<double> t_list;
  int regime = 0;  // 0: infer from eps 2^j; 1 or 2: required regime
};

// Block L^p norm of e^{tA_eps} psi against the envelope of the matching
// regime; fit is log(lhs) against t, i.e. slope = -(decay rate).
SweepResult measure_localized(const LocalizedSpec& spec, const Calibration& cal);

struct StrichartzSpec {
  int n = 32;
  double L = 32.0;
  double mu0 = 1.0;
  double p = 4.0, r = 4.0, s = 0.6, s1 = 0.0, s2 = 0.7;
  std::vector<double> eps_list{0.25, 0.125, 0.0625, 0.03125, 0.015625};
  int nt = 28;
  double width = 1.0;
  double T = 0.0;  // 0: 0.4 * min(eps) * L
};

void validate_strichartz(const StrichartzSpec& spec);
// Time norm over [0, T]: trapezoid on a geometric grid plus t = 0 (max for r = inf).
double time_norm(const std::vector<double>& t, const std::vector<double>& v, double r);
SweepResult measure_strichartz(const StrichartzSpec& spec, const SpectralField* psi = nullptr);

// Source Psi(tau) as a function of (tau, eps).
using SourceGenerator = std::function<SpectralField(double tau, double eps)>;

struct DuhamelSpec {
  int n = 32;
  double L = 32.0;
  double mu0 = 0.5;
  double p = 4.0, r = 4.0, s = 0.6;
  std::vector<double> eps_list{0.25, 0.125, 0.0625, 0.03125, 0.015625};
  int nt = 33;
  double width = 1.0;
  double T = 0.0;
  int max_panels = 64;
};

void validate_duhamel(const DuhamelSpec& spec);
// Psi(tau) = e^{tau A_eps} phi: the source travels with the semigroup.
SourceGenerator resonant_source(const SpectralField& phi, double mu0);
// int_0^t e^{tau A} Psi(t - tau) dtau by composite Gauss-Legendre panels,
// doubled until two successive levels agree to rel_tol.
SpectralField duhamel_integral(const SourceGenerator& psi, double t, double eps, double mu0,
                               int max_panels = 64, double rel_tol = 1e-8);
// ratio = L^r_t(B^s_{p,1}) norm of the integral over the L^r_t norm of Psi in
// B^{s+2-8/p}_{p',1} + B^{s+3/2-3/p}_{2,1}; fit of ratio against eps.
SweepResult measure_duhamel(const DuhamelSpec& spec, const SourceGenerator* gen = nullptr);

// max over samples of (|P+V|^2 + |P-V|^2)/|V|^2 at fixed wavenumbers.
double upper_bound_constant(double eps, double mu0, int samples, std::uint64_t seed);
// max over random psi of ||Delta_j F^{-1}[P_sign psi^]||_p / ||Delta_j psi||_p.
double multiplier_ratio(const Grid& g, int j, double eps, double mu0, double p, int members,
                        std::uint64_t seed);
// max over t of ||Delta_j e^{tA} psi||_2 / (e^{-c 4^j t} ||Delta_j psi||_2).
double heat_envelope_ratio(const Grid& g, int j, double eps, double mu0, double c,
                           const std::vector<double>& t_list);

}  // namespace lowmach
