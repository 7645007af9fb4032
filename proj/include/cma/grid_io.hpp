#pragma once

// CMAG binary grid format:
//   bytes 0..3   "CMAG"
//   u32          version (1)
//   u32          n
//   u32          N
//   f64 * N^(2n) values, row-major over (x1, y1, x2, y2)
// All integers and floats are little-endian.

#include <cstdint>
#include <filesystem>
#include <iosfwd>

#include "cma/geometry.hpp"

namespace cma {

inline constexpr std::uint32_t kCmagVersion = 1;

void write_cmag(std::ostream& out, const GridFunction& f);
GridFunction read_cmag(std::istream& in);

void write_cmag(const std::filesystem::path& path, const GridFunction& f);
GridFunction read_cmag(const std::filesystem::path& path);

}  // namespace cma
