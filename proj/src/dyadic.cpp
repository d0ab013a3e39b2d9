#include "lowmach/dyadic.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace lowmach {

namespace {
double bump(double x) { return x > 0.0 ? std::exp(-1.0 / x) : 0.0; }
}  // namespace

double lp_chi(double r) {
  constexpr double a = 0.75, b = 4.0 / 3.0;
  if (r <= a) return 1.0;
  if (r >= b) return 0.0;
  const double t = (r - a) / (b - a);
  const double u = bump(1.0 - t), v = bump(t);
  return u / (u + v);
}

double lp_phi2(double r) {
  const double w = lp_chi(0.5 * r) - lp_chi(r);
  return w > 0.0 ? w : 0.0;
}

int FilterBank::covering_j_min(const Grid& g) {
  return static_cast<int>(std::floor(std::log2(0.75 * g.xi_min())));
}

int FilterBank::covering_j_max(const Grid& g) {
  return static_cast<int>(std::ceil(std::log2(4.0 * g.xi_max() / 3.0))) - 1;
}

FilterBank::FilterBank(const Grid& g)
    : FilterBank(g, covering_j_min(g), covering_j_max(g)) {}

FilterBank::FilterBank(const Grid& g, int j_min, int j_max)
    : grid_(g), j_min_(j_min), j_max_(j_max) {
  if (j_max < j_min) throw std::invalid_argument("filter bank: empty range");
  blocks_.resize(j_max - j_min + 1);
  for (std::size_t i = 1; i < g.size(); ++i) {
    if (g.is_nyquist(i)) continue;
    const double k = g.xi_norm(i);
    const int hi = static_cast<int>(std::floor(std::log2(k / 0.75)));
    for (int j = hi - 2; j <= hi + 1; ++j) {
      if (j < j_min || j > j_max) continue;
      const double w = lp_phi2(std::ldexp(k, -j));
      if (w > 0.0) blocks_[j - j_min].emplace_back(i, w);
    }
  }
}

const std::vector<std::pair<std::size_t, double>>& FilterBank::entries(int j) const {
  if (!has_block(j))
    throw std::out_of_range("filter bank: block " + std::to_string(j) + " outside [" +
                            std::to_string(j_min_) + ", " + std::to_string(j_max_) + "]");
  return blocks_[j - j_min_];
}

double FilterBank::weight(int j, std::size_t idx) const {
  if (!has_block(j) || idx == 0 || grid_.is_nyquist(idx)) return 0.0;
  return lp_phi2(std::ldexp(grid_.xi_norm(idx), -j));
}

double FilterBank::partition_sum(std::size_t idx) const {
  double s = 0.0;
  for (int j = j_min_; j <= j_max_; ++j) s += weight(j, idx);
  return s;
}

SpectralField dyadic_block(int j, const SpectralField& f, const FilterBank& bank) {
  if (f.grid() != bank.grid()) throw std::invalid_argument("dyadic_block: grid mismatch");
  SpectralField out(f.grid(), f.components());
  for (const auto& [i, w] : bank.entries(j))
    for (int c = 0; c < f.components(); ++c) out.at(c, i) = w * f.at(c, i);
  return out;
}

SpectralField half_block(int j, const SpectralField& f, const FilterBank& bank) {
  if (f.grid() != bank.grid()) throw std::invalid_argument("half_block: grid mismatch");
  SpectralField out(f.grid(), f.components());
  for (const auto& [i, w] : bank.entries(j)) {
    const double s = std::sqrt(w);
    for (int c = 0; c < f.components(); ++c) out.at(c, i) = s * f.at(c, i);
  }
  return out;
}

SpectralField low_cut(int j, const SpectralField& f, const FilterBank& bank) {
  if (j > bank.j_max() + 1) throw std::out_of_range("low_cut: index above j_max + 1");
  SpectralField out(f.grid(), f.components());
  for (int l = bank.j_min(); l < j; ++l)
    for (const auto& [i, w] : bank.entries(l))
      for (int c = 0; c < f.components(); ++c) out.at(c, i) += w * f.at(c, i);
  return out;
}

}  // namespace lowmach
