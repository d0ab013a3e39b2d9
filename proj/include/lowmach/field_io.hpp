#pragma once

#include <stdexcept>
#include <string>

#include "lowmach/field.hpp"

namespace lowmach {

struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Binary field layout, all little-endian:
//   int32 n, float64 L, int32 m,
//   then m n^3 complex64 coefficients (float32 real, float32 imaginary),
//   component-major, each component in the Grid mode order.
// Coefficients use the SpectralField normalization; complex64 rounds them to
// single precision.
void write_field(const std::string& path, const SpectralField& f);
SpectralField read_field(const std::string& path);

}  // namespace lowmach
