#pragma once

#include <complex>
#include <functional>
#include <vector>

namespace lowmach {

using cplx = std::complex<double>;

// phi_0(z) = e^z, phi_{k+1}(z) = (phi_k(z) - 1/k!) / z, phi_k(0) = 1/k!.
cplx phi(int k, cplx z);
// d/dz phi_k(z) = phi_k(z) - k phi_{k+1}(z).
cplx phi_prime(int k, cplx z);

// Scalar analytic function together with its derivative.
struct AnalyticFn {
  std::function<cplx(cplx)> f;
  std::function<cplx(cplx)> df;
  double scale = 1.0;  // typical rate: f varies on the length 1/scale
};

// f(lambda) = phi_k(h lambda) * h^k; k = 0 gives e^{h lambda}.
AnalyticFn scaled_phi(int k, double h);

// Divided difference f[x, y]; confluent (f'(x)) when x == y. Close points use
// Gauss-Legendre quadrature of f' along the segment, which avoids cancellation.
cplx divided_difference(const AnalyticFn& fn, cplx x, cplx y);

// Gauss-Legendre nodes and weights on [0, 1].
struct Quadrature {
  std::vector<double> x, w;
};
Quadrature gauss_legendre(int n);

}  // namespace lowmach
