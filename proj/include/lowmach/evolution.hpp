#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <stdexcept>
#include <string>
#include <vector>

#include "lowmach/acoustic.hpp"
#include "lowmach/besov.hpp"
#include "lowmach/physics.hpp"
#include "lowmach/rate_fit.hpp"

namespace lowmach {

struct StepRejected : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Stationary compressible pair (b*, v*) at one eps and the incompressible u*.
struct StationaryBackground {
  SpectralField b_star, v_star, u_star;
  static StationaryBackground zero(const Grid& g);
};

struct PerturbationState {
  SpectralField sigma, w;
  double t = 0.0;
};

struct IncompressibleState {
  SpectralField u_tilde;
  double t = 0.0;
};

struct NonlinearFG {
  SpectralField f, g;
};

struct HTerms {
  SpectralField h1, h2, h3, h4, g2;
  SpectralField total() const;
};

// Rates (db/dt, dv/dt) of the full compressible system at rho = rho_inf + eps b.
struct FullRate {
  SpectralField b, v;
};

// Nonlinear terms of the perturbation system around a fixed background, with
// the background's physical-space data computed once.
class PerturbationModel {
public:
  PerturbationModel(const StationaryBackground& bg, double eps, const PhysicalParams& prm);
  NonlinearFG fg(const SpectralField& sigma, const SpectralField& w) const;
  // Forcing of Pw - u~ before projection (pressure-composition part included).
  HTerms h(const SpectralField& sigma, const SpectralField& w, const SpectralField& u_tilde) const;
  // -P div(u~ (x) u + u* (x) u~), u = u* + u~.
  SpectralField incompressible_forcing(const SpectralField& u_tilde) const;
  const StationaryBackground& background() const { return bg_; }
  double eps() const { return eps_; }
  const PhysicalParams& params() const { return prm_; }

private:
  StationaryBackground bg_;
  double eps_;
  PhysicalParams prm_;
  RealGrid b_star_r_;
  std::vector<RealGrid> v_star_r_, u_star_r_, grad_b_star_r_, a_v_star_r_;
};

NonlinearFG eval_nonlinear_fg(const PerturbationState& s, const StationaryBackground& bg, double eps,
                              const PhysicalParams& prm);
HTerms eval_h_terms(const PerturbationState& s, const SpectralField& u_tilde, const StationaryBackground& bg,
                    double eps, const PhysicalParams& prm);
// A v = mu Lap v + (mu + mu') grad div v.
SpectralField lame(const SpectralField& v, const PhysicalParams& prm);
FullRate full_system_rate(const SpectralField& b, const SpectralField& v, const SpectralField& F, double eps,
                          const PhysicalParams& prm);
// Mass and (mean-free) momentum rates of the full system at (b*, v*), in
// B^{-1/2}_{2,inf} and B^{-3/2}_{2,inf}.
double equilibrium_defect(const SpectralField& b, const SpectralField& v, const SpectralField& F, double eps,
                          const PhysicalParams& prm);

struct StepControl {
  double atol = 1e-8, rtol = 1e-6;
  double dt_max = 0.5;
  double dt_min = 1e-9;
  double nonlinear_scale = 1.0;  // theta: N -> theta N
  int max_steps = 200000;
};

// ETDRK2 (two-stage exponential Runge-Kutta) on u' = L u + N(u). The first
// `acoustic` components (0 or 4) carry (density, velocity) of an acoustic
// block with parameter eps_tilde and damping mu0 and transverse heat rate nu;
// the remaining components follow the heat flow with rate nu.
class Etdrk2 {
public:
  using Rhs = std::function<SpectralField(const SpectralField&)>;
  Etdrk2(const Grid& g, double eps_tilde, double mu0, double nu, int acoustic, Rhs N);

  struct Step {
    SpectralField u, error;
  };
  Step step(const SpectralField& u, double h, double theta = 1.0) const;
  // phi_k(hL) h^k applied to u.
  SpectralField linear(const SpectralField& u, int k, double h) const;

private:
  struct Ops {
    std::vector<std::unique_ptr<ModeOperator>> k;  // phi_0, phi_1, phi_2
  };
  const Ops& ops(double h) const;

  Grid grid_;
  double eps_tilde_, mu0_, nu_;
  int acoustic_;
  Rhs N_;
  mutable std::mutex mu_;
  mutable std::map<double, std::shared_ptr<Ops>> cache_;
};

// Root-mean-square of the coefficients, i.e. the L^2 mean in physical space.
double coefficient_rms(const SpectralField& f);

struct AdvanceStats {
  int accepted = 0, rejected = 0;
  double dt = 0.0;  // last accepted step, the next step's proposal
};

// Adaptive integration from t0 to t1 (dt halves on rejection, doubles when
// the error is below an eighth of the tolerance; steps stay on dt_max 2^{-k}).
SpectralField advance(const Etdrk2& integ, SpectralField u, double t0, double t1, const StepControl& ctl,
                      AdvanceStats& stats, const std::function<void(SpectralField&)>& after_step = {});

// Single steps; StepRejected when the embedded estimate exceeds the tolerance.
PerturbationState step_compressible(const PerturbationState& s, const StationaryBackground& bg, double eps,
                                    double dt, const PhysicalParams& prm, const StepControl& ctl = {});
IncompressibleState step_incompressible(const IncompressibleState& s, const SpectralField& u_star, double dt,
                                        const PhysicalParams& prm, const StepControl& ctl = {});

// Joint state layout: (gamma2 sigma, w) | u~ | w1 (optional).
struct JointSystem {
  std::shared_ptr<PerturbationModel> model;
  std::unique_ptr<Etdrk2> integ;
  bool track_w1 = false;
  int components() const { return track_w1 ? 10 : 7; }
  SpectralField pack(const SpectralField& sigma, const SpectralField& w, const SpectralField& u_tilde) const;
  SpectralField sigma(const SpectralField& u) const;
  SpectralField w(const SpectralField& u) const;
  SpectralField u_tilde(const SpectralField& u) const;
  SpectralField w1(const SpectralField& u) const;
  // Re-projects the divergence-free slots after a step.
  void project(SpectralField& u) const;
};
JointSystem make_joint_system(const StationaryBackground& bg, double eps, const PhysicalParams& prm,
                              bool track_w1);

// Initial perturbation for a given eps.
struct InitialData {
  SpectralField sigma, w;
};
using InitGenerator = std::function<InitialData(double eps)>;
// Localized data: sigma^_0 = G and w_0 = G e for a Gaussian G of the given
// width centred in the box and a seeded unit vector e (both Helmholtz parts
// nonzero), truncated to the 2/3 band and scaled to amplitude in
// B^{1/2}_{2,inf} cap H^4. sigma_0 = sigma^_0, or eps sigma^_0 when eps_scaled_density.
InitGenerator ill_prepared_data(const Grid& g, std::uint64_t seed, double amplitude, double width,
                                bool eps_scaled_density = false);

struct LowMachSpec {
  int n = 32;
  double L = 32.0;
  PhysicalParams prm;
  double delta = 1.0;  // force size and data size
  std::uint64_t seed = 1;
  int force_j_lo = -1, force_j_hi = 0;
  double data_width = 1.0;
  bool eps_scaled_density = false;
  std::vector<double> eps_list{0.25, 0.125, 0.0625, 0.03125, 0.015625};
  double p = 4.0, r = 4.0, s = 0.6;
  double T = 0.0;  // 0: 0.4 * min(eps) * L
  int nt = 24;
  StepControl ctl;
  int workers = 1;
  bool track_w1 = false;
  // Measure even when 1/2 + 2/r < s fails; the summary records it.
  bool allow_outside_hypotheses = false;
};
// Hypotheses of the rate estimate and of its L^p corollary.
bool low_mach_hypotheses_hold(double p, double r, double s);
bool lp_corollary_hypotheses_hold(double p, double r);
void validate_low_mach(const LowMachSpec& spec);

struct LowMachEps {
  double eps = 0.0;
  std::string status = "ok";
  std::vector<double> t, sigma_norm, q_norm, w1_norm, lp_sum, bounded;
  double sigma_lr = 0.0, q_lr = 0.0, w1_lr = 0.0, total = 0.0, lp_total = 0.0;
  double tail_bound = 0.0;  // < 0: not integrable under the measured decay
  double sup_bound = 0.0;   // sup_t (||u~|| + ||sigma|| + ||w||) / delta
  double equilibrium = 0.0;         // |one unit-time step of the zero perturbation|
  double full_system_defect = 0.0;  // equilibrium_defect of (b*, v*)
  double sigma_mean_drift = 0.0;
  double w1_mismatch = 0.0;  // max_t ||w1 - (Pw - u~)|| / max_t ||Pw - u~||, when tracked
  int steps = 0, rejected = 0;
};

struct LowMachResult {
  LowMachSpec spec;
  std::vector<LowMachEps> per_eps;
  RateFit fit, sigma_fit, q_fit, w1_fit, lp_fit;
  double target = 0.0;
  std::string json() const;
  std::string csv() const;
};

LowMachResult run_low_mach_experiment(const LowMachSpec& spec, const SpectralField* F = nullptr,
                                      const InitGenerator* init = nullptr);

struct TimeDecaySpec {
  int n = 32;
  double L = 200.0;
  double eps = 0.5;
  double s = 0.5;
  PhysicalParams prm;
  double force_amplitude = 0.0;
  double amplitude = 1.0;
  std::uint64_t seed = 1;
  int j_lo = -5, j_hi = -2;
  // Fit window [fit_from, T]; 0 picks the heat times of the data shells:
  // fit_from = 1 / (nu 4^{j_hi}), T = 1 / (nu ((8/3) 2^{j_lo})^2).
  double T = 0.0;
  double fit_from = 0.0;
  int nt = 24;
  StepControl ctl{1e-8, 1e-6, 16.0};
};
// Spec with the fit window filled in.
TimeDecaySpec resolve_time_decay(TimeDecaySpec spec);
void validate_time_decay(const TimeDecaySpec& spec);

struct TimeDecayResult {
  TimeDecaySpec spec;
  std::vector<double> t, norm;
  RateFit fit;
  double target = 0.0;
  int steps = 0, rejected = 0;
  std::string json() const;
  std::string csv() const;
};

// ||(sigma, w)(t)||_{B^s_{2,inf} cap H^4} against 1 + t, slope fitted log-log.
TimeDecayResult measure_time_decay(const TimeDecaySpec& spec, const InitialData* data = nullptr,
                                   const SpectralField* F = nullptr);

}  // namespace lowmach
