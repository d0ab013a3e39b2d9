#include "lowmach/fft.hpp"

#include <fftw3.h>

#include <map>
#include <mutex>
#include <stdexcept>

namespace lowmach {

namespace {

struct Plans {
  fftw_plan fwd;
  fftw_plan bwd;
};

// FFTW planning is not thread safe; execution through the new-array
// interface is. ESTIMATE keeps the chosen algorithm (and so the rounding)
// identical from run to run.
Plans plans_for(int n) {
  static std::mutex mu;
  static std::map<int, Plans> cache;
  std::lock_guard<std::mutex> lock(mu);
  auto it = cache.find(n);
  if (it != cache.end()) return it->second;
  const std::size_t N = static_cast<std::size_t>(n) * n * n;
  fftw_complex* a = fftw_alloc_complex(N);
  fftw_complex* b = fftw_alloc_complex(N);
  const unsigned flags = FFTW_ESTIMATE | FFTW_UNALIGNED;
  Plans p{fftw_plan_dft_3d(n, n, n, a, b, FFTW_FORWARD, flags),
          fftw_plan_dft_3d(n, n, n, a, b, FFTW_BACKWARD, flags)};
  fftw_free(a);
  fftw_free(b);
  if (!p.fwd || !p.bwd) throw std::runtime_error("fft: plan creation failed");
  cache.emplace(n, p);
  return p;
}

fftw_complex* as_fftw(cplx* p) { return reinterpret_cast<fftw_complex*>(p); }

}  // namespace

void fft_forward(const Grid& g, const cplx* in, cplx* out) {
  const std::size_t N = g.size();
  std::vector<cplx> tmp(in, in + N);
  fftw_execute_dft(plans_for(g.n()).fwd, as_fftw(tmp.data()), as_fftw(out));
  const double s = 1.0 / static_cast<double>(N);
  for (std::size_t i = 0; i < N; ++i) out[i] *= s;
}

void fft_inverse(const Grid& g, const cplx* in, cplx* out) {
  std::vector<cplx> tmp(in, in + g.size());
  fftw_execute_dft(plans_for(g.n()).bwd, as_fftw(tmp.data()), as_fftw(out));
}

std::vector<cplx> to_complex_samples(const SpectralField& f, int c) {
  std::vector<cplx> out(f.modes());
  fft_inverse(f.grid(), f.comp(c), out.data());
  return out;
}

RealGrid to_real(const SpectralField& f, int c) {
  auto z = to_complex_samples(f, c);
  RealGrid r(z.size());
  for (std::size_t i = 0; i < z.size(); ++i) r[i] = z[i].real();
  return r;
}

std::vector<RealGrid> to_real_all(const SpectralField& f) {
  std::vector<RealGrid> out;
  out.reserve(f.components());
  for (int c = 0; c < f.components(); ++c) out.push_back(to_real(f, c));
  return out;
}

void set_from_real(SpectralField& f, int c, const RealGrid& v) {
  const Grid& g = f.grid();
  if (v.size() != g.size()) throw std::invalid_argument("fft: sample count does not match grid");
  std::vector<cplx> z(v.begin(), v.end());
  fft_forward(g, z.data(), f.comp(c));
  for (std::size_t i = 0; i < g.size(); ++i)
    if (g.is_nyquist(i)) f.at(c, i) = 0.0;
}

SpectralField from_real(const Grid& g, const RealGrid& v) {
  SpectralField f(g, 1);
  set_from_real(f, 0, v);
  return f;
}

SpectralField from_real(const Grid& g, const std::vector<RealGrid>& comps) {
  SpectralField f(g, static_cast<int>(comps.size()));
  for (std::size_t c = 0; c < comps.size(); ++c) set_from_real(f, static_cast<int>(c), comps[c]);
  return f;
}

}  // namespace lowmach
