#pragma once

#include <cmath>
#include <random>

#include "lowmach/field_ops.hpp"

namespace testutil {

using namespace lowmach;

// Real random field with modes |k|_inf <= kmax (zero mean, no Nyquist).
inline SpectralField random_field(const Grid& g, int m, std::uint64_t seed, int kmax) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> d(0.0, 1.0);
  SpectralField f(g, m);
  for (int c = 0; c < m; ++c)
    for (std::size_t i = 1; i < g.size(); ++i) {
      const double a = d(rng), b = d(rng);
      auto k = g.mode_k(i);
      if (g.is_nyquist(i) || std::abs(k[0]) > kmax || std::abs(k[1]) > kmax || std::abs(k[2]) > kmax)
        continue;
      f.at(c, i) = cplx(a, b);
    }
  enforce_real(f);
  return f;
}

inline double max_abs_diff(const SpectralField& a, const SpectralField& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.data().size(); ++i) m = std::max(m, std::abs(a.data()[i] - b.data()[i]));
  return m;
}

inline double max_abs(const SpectralField& a) {
  double m = 0.0;
  for (auto z : a.data()) m = std::max(m, std::abs(z));
  return m;
}

// Sample of a scalar function on the lattice.
template <class F>
RealGrid sample(const Grid& g, F fn) {
  RealGrid v(g.size());
  const int n = g.n();
  const double h = g.dx();
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b)
      for (int c = 0; c < n; ++c) v[(static_cast<std::size_t>(a) * n + b) * n + c] = fn(a * h, b * h, c * h);
  return v;
}

}  // namespace testutil
