#include "lowmach/grid.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace lowmach {

Grid::Grid(int n, double L) : n_(n), L_(L) {
  if (n < 8 || n % 2 != 0)
    throw std::invalid_argument("grid: n must be even and >= 8, got " + std::to_string(n));
  if (!(L > 0.0) || !std::isfinite(L))
    throw std::invalid_argument("grid: box length must be positive");
  size_ = static_cast<std::size_t>(n) * n * n;
  dk_ = 2.0 * std::numbers::pi / L;
  dealias_k_ = (n + 2) / 3 - 1;
  if (3 * dealias_k_ >= n) --dealias_k_;
  auto t = std::make_shared<Tables>();
  t->xi.resize(size_);
  t->k2.resize(size_);
  t->k.resize(size_);
  for (std::size_t i = 0; i < size_; ++i) {
    auto k = mode_k(i);
    t->xi[i] = {dk_ * k[0], dk_ * k[1], dk_ * k[2]};
    t->k2[i] = t->xi[i][0] * t->xi[i][0] + t->xi[i][1] * t->xi[i][1] + t->xi[i][2] * t->xi[i][2];
    t->k[i] = std::sqrt(t->k2[i]);
  }
  tables_ = t;
}

std::array<int, 3> Grid::mode_k(std::size_t idx) const {
  const std::size_t nn = n_;
  const int c = static_cast<int>(idx % nn);
  const int b = static_cast<int>((idx / nn) % nn);
  const int a = static_cast<int>(idx / (nn * nn));
  return {axis_k(a), axis_k(b), axis_k(c)};
}

std::size_t Grid::index_of(int kx, int ky, int kz) const {
  auto wrap = [this](int k) { return static_cast<std::size_t>(k < 0 ? k + n_ : k); };
  return (wrap(kx) * n_ + wrap(ky)) * n_ + wrap(kz);
}

bool Grid::is_nyquist(std::size_t idx) const {
  auto k = mode_k(idx);
  const int h = -n_ / 2;
  return k[0] == h || k[1] == h || k[2] == h;
}

bool Grid::in_dealias_band(std::size_t idx) const {
  auto k = mode_k(idx);
  return std::abs(k[0]) <= dealias_k_ && std::abs(k[1]) <= dealias_k_ &&
         std::abs(k[2]) <= dealias_k_;
}

double Grid::xi_max() const { return std::sqrt(3.0) * (n_ / 2 - 1) * dk_; }

}  // namespace lowmach
