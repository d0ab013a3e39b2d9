#pragma once

#include <functional>
#include <vector>

#include "lowmach/fft.hpp"
#include "lowmach/field.hpp"

namespace lowmach {

using Symbol = std::function<cplx(const std::array<double, 3>& xi)>;

// Pointwise multiplication of every component by symbol(xi); the zero mode
// receives zero_value instead of symbol(0).
SpectralField apply_multiplier(const SpectralField& f, const Symbol& symbol, cplx zero_value);
// Per-mode table variant; table.size() must equal the mode count.
SpectralField apply_multiplier(const SpectralField& f, const std::vector<cplx>& table);

SpectralField grad(const SpectralField& scalar);
SpectralField div(const SpectralField& vec);
SpectralField laplacian(const SpectralField& f);
// d/dx_k of every component (k = 0, 1, 2).
SpectralField partial(const SpectralField& f, int k);

// Helmholtz projections on a 3-component field: Pv = v - Delta^{-1} grad div v,
// Q = I - P. The zero mode is left in P.
SpectralField helmholtz_P(const SpectralField& v);
SpectralField helmholtz_Q(const SpectralField& v);

// (-|xi|^2)^{-power} off the zero mode. A nonzero zero mode is an error unless
// annihilate_zero_mode is set, in which case it is mapped to zero.
SpectralField inv_laplacian(const SpectralField& f, int power, bool annihilate_zero_mode = false);

// Zero every mode outside the 2/3-rule band.
void dealias(SpectralField& f);
SpectralField dealiased(SpectralField f);
void truncate_to_band(SpectralField& f, double xi_cut);

cplx zero_mode(const SpectralField& f, int c);
void remove_mean(SpectralField& f);

// Conjugate symmetry residual max |c(xi) - conj(c(-xi))|.
double conjugate_asymmetry(const SpectralField& f);
void enforce_real(SpectralField& f);

// Euclidean L^2 norm over all components, via Parseval.
double l2_norm(const SpectralField& f);
double sobolev_norm(const SpectralField& f, double s);

// Products of real fields, returned dealiased in spectral space.
SpectralField product(const RealGrid& a, const RealGrid& b, const Grid& g);
// div(a (x) b)_i = sum_j d_j(a_i b_j) for 3-component real samples a, b.
SpectralField div_tensor(const std::vector<RealGrid>& a, const std::vector<RealGrid>& b,
                         const Grid& g);
// (a . grad) b_i for physical a and spectral b; result dealiased.
SpectralField advect(const std::vector<RealGrid>& a, const SpectralField& b);

}  // namespace lowmach
