#include "lowmach/field_io.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <vector>

namespace lowmach {

namespace {

static_assert(std::endian::native == std::endian::little, "field_io assumes a little-endian host");

template <class T>
void put(std::ofstream& os, T v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof v);
}

template <class T>
T get(std::ifstream& is, const std::string& path) {
  T v;
  if (!is.read(reinterpret_cast<char*>(&v), sizeof v)) throw IoError("read_field: truncated header in " + path);
  return v;
}

}  // namespace

void write_field(const std::string& path, const SpectralField& f) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw IoError("write_field: cannot open " + path);
  put<std::int32_t>(os, f.grid().n());
  put<double>(os, f.grid().L());
  put<std::int32_t>(os, f.components());
  std::vector<float> buf(2 * f.data().size());
  for (std::size_t i = 0; i < f.data().size(); ++i) {
    buf[2 * i] = static_cast<float>(f.data()[i].real());
    buf[2 * i + 1] = static_cast<float>(f.data()[i].imag());
  }
  os.write(reinterpret_cast<const char*>(buf.data()), std::streamsize(buf.size() * sizeof(float)));
  if (!os) throw IoError("write_field: write failed for " + path);
}

SpectralField read_field(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("read_field: cannot open " + path);
  const auto n = get<std::int32_t>(is, path);
  const auto L = get<double>(is, path);
  const auto m = get<std::int32_t>(is, path);
  if (m < 1 || m > 64) throw IoError("read_field: bad component count in " + path);
  Grid g = [&] {
    try {
      return Grid(n, L);
    } catch (const std::invalid_argument& e) {
      throw IoError("read_field: bad grid in " + path + ": " + e.what());
    }
  }();
  SpectralField f(g, m);
  std::vector<float> buf(2 * f.data().size());
  if (!is.read(reinterpret_cast<char*>(buf.data()), std::streamsize(buf.size() * sizeof(float))))
    throw IoError("read_field: truncated coefficients in " + path);
  if (is.peek() != std::char_traits<char>::eof()) throw IoError("read_field: trailing bytes in " + path);
  for (std::size_t i = 0; i < f.data().size(); ++i) f.data()[i] = cplx(buf[2 * i], buf[2 * i + 1]);
  return f;
}

}  // namespace lowmach
