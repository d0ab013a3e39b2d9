#include "lowmach/field_ops.hpp"

#include <cmath>
#include <stdexcept>

namespace lowmach {

SpectralField::SpectralField(const Grid& g, int m) : grid_(g), m_(m), data_(g.size() * m) {
  if (m < 1) throw std::invalid_argument("field: component count must be positive");
}

SpectralField SpectralField::component(int c) const {
  SpectralField s(grid_, 1);
  std::copy(comp(c), comp(c) + grid_.size(), s.comp(0));
  return s;
}

void SpectralField::set_component(int c, const SpectralField& scalar) {
  if (scalar.grid() != grid_ || scalar.components() != 1)
    throw std::invalid_argument("field: set_component expects a scalar on the same grid");
  std::copy(scalar.comp(0), scalar.comp(0) + grid_.size(), comp(c));
}

namespace {
void check_same(const SpectralField& a, const SpectralField& b) {
  if (a.grid() != b.grid() || a.components() != b.components())
    throw std::invalid_argument("field: shape mismatch");
}
}  // namespace

SpectralField& SpectralField::operator+=(const SpectralField& o) {
  check_same(*this, o);
  for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += o.data_[i];
  return *this;
}

SpectralField& SpectralField::operator-=(const SpectralField& o) {
  check_same(*this, o);
  for (std::size_t i = 0; i < data_.size(); ++i) data_[i] -= o.data_[i];
  return *this;
}

SpectralField& SpectralField::operator*=(double a) {
  for (auto& z : data_) z *= a;
  return *this;
}

SpectralField& SpectralField::operator*=(cplx a) {
  for (auto& z : data_) z *= a;
  return *this;
}

SpectralField& SpectralField::axpy(double a, const SpectralField& o) {
  check_same(*this, o);
  for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += a * o.data_[i];
  return *this;
}

void SpectralField::set_zero() { std::fill(data_.begin(), data_.end(), cplx(0.0)); }

bool SpectralField::is_zero() const {
  for (const auto& z : data_)
    if (z != cplx(0.0)) return false;
  return true;
}

SpectralField operator+(SpectralField a, const SpectralField& b) { return a += b; }
SpectralField operator-(SpectralField a, const SpectralField& b) { return a -= b; }
SpectralField operator*(double s, SpectralField a) { return a *= s; }

SpectralField apply_multiplier(const SpectralField& f, const Symbol& symbol, cplx zero_value) {
  const Grid& g = f.grid();
  std::vector<cplx> table(g.size());
  for (std::size_t i = 0; i < g.size(); ++i) table[i] = i == 0 ? zero_value : symbol(g.xi(i));
  return apply_multiplier(f, table);
}

SpectralField apply_multiplier(const SpectralField& f, const std::vector<cplx>& table) {
  if (table.size() != f.modes())
    throw std::invalid_argument("apply_multiplier: symbol table does not match grid");
  SpectralField out(f.grid(), f.components());
  for (int c = 0; c < f.components(); ++c) {
    const cplx* in = f.comp(c);
    cplx* o = out.comp(c);
    for (std::size_t i = 0; i < table.size(); ++i) o[i] = table[i] * in[i];
  }
  return out;
}

SpectralField partial(const SpectralField& f, int k) {
  const Grid& g = f.grid();
  SpectralField out(g, f.components());
  for (std::size_t i = 0; i < g.size(); ++i) {
    const cplx m(0.0, g.xi(i)[k]);
    for (int c = 0; c < f.components(); ++c) out.at(c, i) = m * f.at(c, i);
  }
  return out;
}

SpectralField grad(const SpectralField& s) {
  if (s.components() != 1) throw std::invalid_argument("grad: scalar field expected");
  const Grid& g = s.grid();
  SpectralField out(g, 3);
  for (std::size_t i = 0; i < g.size(); ++i) {
    auto x = g.xi(i);
    const cplx v = s.at(0, i);
    for (int k = 0; k < 3; ++k) out.at(k, i) = cplx(0.0, x[k]) * v;
  }
  return out;
}

SpectralField div(const SpectralField& v) {
  if (v.components() != 3) throw std::invalid_argument("div: vector field expected");
  const Grid& g = v.grid();
  SpectralField out(g, 1);
  for (std::size_t i = 0; i < g.size(); ++i) {
    auto x = g.xi(i);
    out.at(0, i) = cplx(0.0, 1.0) * (x[0] * v.at(0, i) + x[1] * v.at(1, i) + x[2] * v.at(2, i));
  }
  return out;
}

SpectralField laplacian(const SpectralField& f) {
  const Grid& g = f.grid();
  SpectralField out(g, f.components());
  for (std::size_t i = 0; i < g.size(); ++i) {
    const double k2 = g.xi_norm2(i);
    for (int c = 0; c < f.components(); ++c) out.at(c, i) = -k2 * f.at(c, i);
  }
  return out;
}

SpectralField helmholtz_Q(const SpectralField& v) {
  if (v.components() != 3) throw std::invalid_argument("helmholtz: vector field expected");
  const Grid& g = v.grid();
  SpectralField out(g, 3);
  for (std::size_t i = 1; i < g.size(); ++i) {
    auto x = g.xi(i);
    const double k2 = x[0] * x[0] + x[1] * x[1] + x[2] * x[2];
    const cplx d = (x[0] * v.at(0, i) + x[1] * v.at(1, i) + x[2] * v.at(2, i)) / k2;
    for (int k = 0; k < 3; ++k) out.at(k, i) = x[k] * d;
  }
  return out;
}

SpectralField helmholtz_P(const SpectralField& v) { return v - helmholtz_Q(v); }

SpectralField inv_laplacian(const SpectralField& f, int power, bool annihilate_zero_mode) {
  if (power < 1) throw std::invalid_argument("inv_laplacian: power must be positive");
  if (!annihilate_zero_mode)
    for (int c = 0; c < f.components(); ++c)
      if (f.at(c, 0) != cplx(0.0))
        throw std::domain_error("inv_laplacian: field has a nonzero zero mode");
  const Grid& g = f.grid();
  SpectralField out(g, f.components());
  for (std::size_t i = 1; i < g.size(); ++i) {
    const double m = std::pow(-g.xi_norm2(i), -power);
    for (int c = 0; c < f.components(); ++c) out.at(c, i) = m * f.at(c, i);
  }
  return out;
}

void dealias(SpectralField& f) {
  const Grid& g = f.grid();
  for (std::size_t i = 0; i < g.size(); ++i)
    if (!g.in_dealias_band(i))
      for (int c = 0; c < f.components(); ++c) f.at(c, i) = 0.0;
}

SpectralField dealiased(SpectralField f) {
  dealias(f);
  return f;
}

void truncate_to_band(SpectralField& f, double xi_cut) {
  const Grid& g = f.grid();
  for (std::size_t i = 0; i < g.size(); ++i)
    if (g.xi_norm(i) > xi_cut)
      for (int c = 0; c < f.components(); ++c) f.at(c, i) = 0.0;
}

cplx zero_mode(const SpectralField& f, int c) { return f.at(c, 0); }

void remove_mean(SpectralField& f) {
  for (int c = 0; c < f.components(); ++c) f.at(c, 0) = 0.0;
}

double conjugate_asymmetry(const SpectralField& f) {
  const Grid& g = f.grid();
  double worst = 0.0;
  for (std::size_t i = 0; i < g.size(); ++i) {
    if (g.is_nyquist(i)) continue;
    auto k = g.mode_k(i);
    const std::size_t j = g.index_of(-k[0], -k[1], -k[2]);
    for (int c = 0; c < f.components(); ++c)
      worst = std::max(worst, std::abs(f.at(c, i) - std::conj(f.at(c, j))));
  }
  return worst;
}

void enforce_real(SpectralField& f) {
  const Grid& g = f.grid();
  for (std::size_t i = 0; i < g.size(); ++i) {
    if (g.is_nyquist(i)) {
      for (int c = 0; c < f.components(); ++c) f.at(c, i) = 0.0;
      continue;
    }
    auto k = g.mode_k(i);
    const std::size_t j = g.index_of(-k[0], -k[1], -k[2]);
    if (j < i) continue;
    for (int c = 0; c < f.components(); ++c) {
      const cplx avg = 0.5 * (f.at(c, i) + std::conj(f.at(c, j)));
      f.at(c, i) = avg;
      f.at(c, j) = std::conj(avg);
    }
  }
}

double l2_norm(const SpectralField& f) {
  double s = 0.0;
  for (const auto& z : f.data()) s += std::norm(z);
  const double L = f.grid().L();
  return std::sqrt(s * L * L * L);
}

double sobolev_norm(const SpectralField& f, double s) {
  const Grid& g = f.grid();
  double acc = 0.0;
  for (std::size_t i = 1; i < g.size(); ++i) {
    const double w = std::pow(g.xi_norm2(i), s);
    for (int c = 0; c < f.components(); ++c) acc += w * std::norm(f.at(c, i));
  }
  const double L = g.L();
  return std::sqrt(acc * L * L * L);
}

SpectralField product(const RealGrid& a, const RealGrid& b, const Grid& g) {
  RealGrid p(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) p[i] = a[i] * b[i];
  SpectralField out = from_real(g, p);
  dealias(out);
  return out;
}

SpectralField div_tensor(const std::vector<RealGrid>& a, const std::vector<RealGrid>& b,
                         const Grid& g) {
  // Assemble the nine products a_i b_j, then contract with i xi_j in Fourier space.
  SpectralField out(g, 3);
  RealGrid p(g.size());
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) {
      for (std::size_t q = 0; q < g.size(); ++q) p[q] = a[i][q] * b[j][q];
      SpectralField pij = from_real(g, p);
      for (std::size_t q = 0; q < g.size(); ++q)
        out.at(i, q) += cplx(0.0, g.xi(q)[j]) * pij.at(0, q);
    }
  }
  dealias(out);
  return out;
}

SpectralField advect(const std::vector<RealGrid>& a, const SpectralField& b) {
  const Grid& g = b.grid();
  std::vector<RealGrid> acc(b.components(), RealGrid(g.size(), 0.0));
  for (int k = 0; k < 3; ++k) {
    SpectralField db = partial(b, k);
    for (int c = 0; c < b.components(); ++c) {
      RealGrid d = to_real(db, c);
      for (std::size_t q = 0; q < g.size(); ++q) acc[c][q] += a[k][q] * d[q];
    }
  }
  SpectralField out = from_real(g, acc);
  dealias(out);
  return out;
}

}  // namespace lowmach
