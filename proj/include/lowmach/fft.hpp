#pragma once

#include <vector>

#include "lowmach/field.hpp"

namespace lowmach {

// Normalized forward transform: out = n^{-3} sum_x in(x) exp(-i xi.x).
void fft_forward(const Grid& g, const cplx* in, cplx* out);
// Inverse: out(x) = sum_xi in(xi) exp(i xi.x).
void fft_inverse(const Grid& g, const cplx* in, cplx* out);

RealGrid to_real(const SpectralField& f, int c);
std::vector<cplx> to_complex_samples(const SpectralField& f, int c);
std::vector<RealGrid> to_real_all(const SpectralField& f);

// Transforms real samples into component c; the Nyquist planes are zeroed.
void set_from_real(SpectralField& f, int c, const RealGrid& v);
SpectralField from_real(const Grid& g, const RealGrid& v);
SpectralField from_real(const Grid& g, const std::vector<RealGrid>& comps);

}  // namespace lowmach
