#include "lowmach/phi_functions.hpp"

#include <array>
#include <cmath>
#include <stdexcept>

namespace lowmach {

namespace {

double inv_factorial(int k) {
  double r = 1.0;
  for (int i = 2; i <= k; ++i) r /= i;
  return r;
}

const Quadrature& gl16() {
  static const Quadrature q = gauss_legendre(16);
  return q;
}

}  // namespace

Quadrature gauss_legendre(int n) {
  if (n < 1) throw std::invalid_argument("gauss_legendre: n must be positive");
  Quadrature q;
  q.x.resize(n);
  q.w.resize(n);
  for (int i = 0; i < n; ++i) {
    double z = std::cos(M_PI * (i + 0.75) / (n + 0.5));
    double dp = 1.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = z;
      for (int k = 2; k <= n; ++k) {
        const double p2 = ((2.0 * k - 1.0) * z * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      dp = n * (z * p1 - p0) / (z * z - 1.0);
      const double dz = p1 / dp;
      z -= dz;
      if (std::abs(dz) < 1e-16) break;
    }
    q.x[i] = 0.5 * (1.0 - z);
    q.w[i] = 1.0 / ((1.0 - z * z) * dp * dp);
  }
  return q;
}

cplx phi(int k, cplx z) {
  if (k < 0) throw std::invalid_argument("phi: negative index");
  if (std::abs(z) < 1.0) {
    cplx sum = 0.0, term = inv_factorial(k);
    for (int m = 0; m < 40; ++m) {
      sum += term;
      term *= z / static_cast<double>(m + k + 1);
      if (std::abs(term) < 1e-18 * std::abs(sum)) break;
    }
    return sum;
  }
  cplx p = std::exp(z);
  for (int j = 0; j < k; ++j) p = (p - inv_factorial(j)) / z;
  return p;
}

cplx phi_prime(int k, cplx z) { return phi(k, z) - static_cast<double>(k) * phi(k + 1, z); }

AnalyticFn scaled_phi(int k, double h) {
  const double hk = std::pow(h, k);
  return {[k, h, hk](cplx l) { return hk * phi(k, h * l); },
          [k, h, hk](cplx l) { return hk * h * phi_prime(k, h * l); }, h};
}

cplx divided_difference(const AnalyticFn& fn, cplx x, cplx y) {
  const cplx d = x - y;
  if (std::abs(d) * fn.scale > 1.0) return (fn.f(x) - fn.f(y)) / d;
  if (d == cplx(0.0)) return fn.df(x);
  const auto& g = gl16();
  cplx acc = 0.0;
  for (std::size_t i = 0; i < g.x.size(); ++i) acc += g.w[i] * fn.df(y + g.x[i] * d);
  return acc;
}

}  // namespace lowmach
