#pragma once

#include <cstdint>
#include <functional>
#include <limits>
#include <string>
#include <vector>

#include "lowmach/dyadic.hpp"
#include "lowmach/field.hpp"

namespace lowmach {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

struct NormSpec {
  enum class Kind { besov, sobolev };
  double s = 0.0;
  double p = 2.0;
  double r = 2.0;
  Kind kind = Kind::besov;

  static NormSpec besov(double s, double p, double r) { return {s, p, r, Kind::besov}; }
  static NormSpec sobolev(double s) { return {s, 2.0, 2.0, Kind::sobolev}; }
  void validate() const;
};

// Discrete L^p norm (rectangle rule) of the pointwise Euclidean magnitude of
// all components; p = inf is the grid maximum.
double lp_norm(const SpectralField& f, double p);

// Per-block values 2^{js} ||Delta_j f||_{L^p}, j = j_min..j_max.
std::vector<double> block_norms(const SpectralField& f, double s, double p, const FilterBank& bank);
double lr_aggregate(const std::vector<double>& terms, double r);

double besov_norm(const SpectralField& f, const NormSpec& spec, const FilterBank& bank);
double besov_norm(const SpectralField& f, double s, double p, double r, const FilterBank& bank);
// Norm of the intersection X cap Y, taken as the sum of the two norms.
double intersection_norm(const SpectralField& f, const NormSpec& a, const NormSpec& b,
                         const FilterBank& bank);

// ---------------------------------------------------------------------------
// Empirical checks of the product, commutator and composition estimates.

struct RatioReport {
  std::string lemma;
  std::vector<double> ratios;
  double max_ratio = 0.0;
  double resolution_growth = 0.0;  // max_ratio(2n) / max_ratio(n); 0 when not measured
  std::uint64_t seed = 0;
  int n = 0;
  std::string params_json;  // exponent parameters, JSON object text
};

// Single-pair ratios. They throw std::invalid_argument when the exponents
// violate the hypotheses of the corresponding estimate.
double ratio_bi0(const SpectralField& u, const SpectralField& v, double s1, double s2, double r1,
                 double r2, const FilterBank& bank);
double ratio_bi1(const SpectralField& u, const SpectralField& v, double s1, double s2, double p,
                 double r, const FilterBank& bank);
double ratio_bi2(const SpectralField& u, const SpectralField& v, double s1, double s2, double p,
                 double r, const FilterBank& bank);
double ratio_commutator(const SpectralField& h, const SpectralField& u, double s, double r,
                        const FilterBank& bank);
using ScalarMap = std::function<double(double)>;
double ratio_composition(const ScalarMap& Phi, const SpectralField& u, const SpectralField& v,
                         double s, double r, const FilterBank& bank);

// Pointwise Phi(u) for a scalar field, transformed back. Throws
// std::range_error when the result carries more than `budget` of its L^2
// energy outside the 2/3 band.
SpectralField compose(const ScalarMap& Phi, const SpectralField& u, double budget = 1e-4);
// Transform of pointwise composite samples with the same band check.
SpectralField band_checked(const Grid& g, const RealGrid& x, double budget = 1e-4, const char* who = "compose");

// Random real scalar field: complex Gaussian coefficients on the modes of
// shells j_lo..j_hi with |k|_inf <= k_cap, scaled per shell by 2^{-j(s+3/2)}.
SpectralField random_shell_field(const Grid& g, const FilterBank& bank, std::uint64_t seed,
                                 int j_lo, int j_hi, double s, int k_cap);

struct SuiteSpec {
  std::string lemma;  // bi0 | bi1 | bi2 | commu | compos
  double s1 = 0.5, s2 = 0.5, s = 0.5;
  double p = 2.0, r = kInf, r1 = kInf, r2 = kInf;
  int members = 200;
  double L = 8.0;
  double amplitude = 0.05;  // compos only: pointwise size of u, v
  double rho_inf = 1.0;     // compos only: Phi(z) = 1/(rho_inf + z)
};

void validate_suite(const SuiteSpec& spec);
// Ensemble maximum at resolution n.
RatioReport run_ratio_ensemble(const SuiteSpec& spec, int n, std::uint64_t seed);
// Ensembles at n and 2n with the same seed; growth = max(2n)/max(n).
RatioReport run_ratio_suite(const SuiteSpec& spec, int n, std::uint64_t seed);
std::string ratio_report_json(const RatioReport& rep);

}  // namespace lowmach
