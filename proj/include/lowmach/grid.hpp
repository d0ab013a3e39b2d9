#pragma once

#include <array>
#include <complex>
#include <cstddef>
#include <memory>
#include <vector>

namespace lowmach {

using cplx = std::complex<double>;

// Periodic cube [0, L)^3 with n modes per axis.
//
// Mode order is the FFTW row-major order: flat index (a*n + b)*n + c, where
// axis index a carries the integer wavenumber a for a < n/2 and a - n
// otherwise, i.e. k in {-n/2, ..., n/2-1}; the physical wavenumber is 2*pi*k/L.
// The Nyquist planes (k = -n/2 on any axis) are kept at zero in every field.
class Grid {
public:
  Grid(int n, double L);

  int n() const { return n_; }
  double L() const { return L_; }
  std::size_t size() const { return size_; }
  double dk() const { return dk_; }
  double dx() const { return L_ / n_; }
  double cell_volume() const { return dx() * dx() * dx(); }

  int axis_k(int a) const { return a < n_ / 2 ? a : a - n_; }
  std::array<int, 3> mode_k(std::size_t idx) const;
  const std::array<double, 3>& xi(std::size_t idx) const { return (*tables_).xi[idx]; }
  double xi_norm2(std::size_t idx) const { return (*tables_).k2[idx]; }
  double xi_norm(std::size_t idx) const { return (*tables_).k[idx]; }
  std::size_t index_of(int kx, int ky, int kz) const;

  bool is_nyquist(std::size_t idx) const;
  // Largest |k| per axis kept by the 2/3 rule; products of two fields in the
  // band are then alias-free.
  int dealias_k() const { return dealias_k_; }
  bool in_dealias_band(std::size_t idx) const;

  double xi_min() const { return dk_; }
  double xi_max() const;  // largest |xi| over non-Nyquist modes

  bool operator==(const Grid& o) const { return n_ == o.n_ && L_ == o.L_; }
  bool operator!=(const Grid& o) const { return !(*this == o); }

private:
  int n_;
  double L_;
  std::size_t size_;
  double dk_;
  int dealias_k_;
  struct Tables {
    std::vector<std::array<double, 3>> xi;
    std::vector<double> k2, k;
  };
  std::shared_ptr<const Tables> tables_;
};

}  // namespace lowmach
