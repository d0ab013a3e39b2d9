#pragma once

#include <vector>

#include "lowmach/grid.hpp"

namespace lowmach {

// Multi-component field stored as Fourier-series coefficients:
//   f(x) = sum_xi c(xi) exp(i xi.x),   c(xi) = n^{-3} sum_x f(x) exp(-i xi.x).
// With this normalization ||f||_{L^2(T^3)}^2 = L^3 sum |c|^2.
class SpectralField {
public:
  SpectralField(const Grid& g, int m);

  const Grid& grid() const { return grid_; }
  int components() const { return m_; }
  std::size_t modes() const { return grid_.size(); }

  cplx* comp(int c) { return data_.data() + c * grid_.size(); }
  const cplx* comp(int c) const { return data_.data() + c * grid_.size(); }
  cplx& at(int c, std::size_t idx) { return data_[c * grid_.size() + idx]; }
  cplx at(int c, std::size_t idx) const { return data_[c * grid_.size() + idx]; }
  std::vector<cplx>& data() { return data_; }
  const std::vector<cplx>& data() const { return data_; }

  SpectralField component(int c) const;
  void set_component(int c, const SpectralField& scalar);

  SpectralField& operator+=(const SpectralField& o);
  SpectralField& operator-=(const SpectralField& o);
  SpectralField& operator*=(double a);
  SpectralField& operator*=(cplx a);
  // this += a * o
  SpectralField& axpy(double a, const SpectralField& o);

  void set_zero();
  bool is_zero() const;

private:
  Grid grid_;
  int m_;
  std::vector<cplx> data_;
};

SpectralField operator+(SpectralField a, const SpectralField& b);
SpectralField operator-(SpectralField a, const SpectralField& b);
SpectralField operator*(double s, SpectralField a);

// Real-valued samples of one component on the n^3 lattice x = (a,b,c) L/n.
using RealGrid = std::vector<double>;

}  // namespace lowmach
