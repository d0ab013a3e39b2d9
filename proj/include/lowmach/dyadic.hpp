#pragma once

#include <utility>
#include <vector>

#include "lowmach/field.hpp"

namespace lowmach {

// Radial cutoff: 1 on [0, 3/4], 0 on [4/3, inf), smooth exp(-1/t) transition.
double lp_chi(double r);
// Squared annular weight phi^2(r) = chi(r/2) - chi(r), supported in [3/4, 8/3].
double lp_phi2(double r);

// Realizes the blocks Delta_j f = F^{-1}[phi^2(2^{-j} xi) f^] for
// j in [j_min, j_max]. Each mode lies in at most two consecutive blocks, so
// the weights are stored sparsely per block.
class FilterBank {
public:
  // Range chosen so that every nonzero non-Nyquist mode of the grid lies where
  // the telescoping sum of the bank equals one exactly.
  explicit FilterBank(const Grid& g);
  FilterBank(const Grid& g, int j_min, int j_max);

  const Grid& grid() const { return grid_; }
  int j_min() const { return j_min_; }
  int j_max() const { return j_max_; }
  bool has_block(int j) const { return j >= j_min_ && j <= j_max_; }

  // (mode index, phi^2 weight) pairs with positive weight.
  const std::vector<std::pair<std::size_t, double>>& entries(int j) const;
  double weight(int j, std::size_t idx) const;
  // Sum over the bank of phi^2(2^{-j} xi) at a mode.
  double partition_sum(std::size_t idx) const;

  static int covering_j_min(const Grid& g);
  static int covering_j_max(const Grid& g);

private:
  Grid grid_;
  int j_min_, j_max_;
  std::vector<std::vector<std::pair<std::size_t, double>>> blocks_;
};

SpectralField dyadic_block(int j, const SpectralField& f, const FilterBank& bank);
// phi(2^{-j} D) f, the square root of the block multiplier.
SpectralField half_block(int j, const SpectralField& f, const FilterBank& bank);
// S_j f = sum_{j' < j} Delta_{j'} f, for j <= j_max + 1.
SpectralField low_cut(int j, const SpectralField& f, const FilterBank& bank);

}  // namespace lowmach
