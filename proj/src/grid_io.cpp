#include "cma/grid_io.hpp"

#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>

#include "cma/error.hpp"

namespace cma {
namespace {

template <typename T>
void put_le(std::ostream& out, T value) {
  using U = std::conditional_t<sizeof(T) == 8, std::uint64_t, std::uint32_t>;
  U bits = std::bit_cast<U>(value);
  std::array<char, sizeof(U)> buf{};
  for (std::size_t i = 0; i < sizeof(U); ++i) buf[i] = static_cast<char>((bits >> (8 * i)) & 0xffu);
  out.write(buf.data(), buf.size());
}

template <typename T>
T get_le(std::istream& in) {
  using U = std::conditional_t<sizeof(T) == 8, std::uint64_t, std::uint32_t>;
  std::array<unsigned char, sizeof(U)> buf{};
  in.read(reinterpret_cast<char*>(buf.data()), buf.size());
  if (!in) throw InvalidInput("CMAG: truncated stream");
  U bits = 0;
  for (std::size_t i = 0; i < sizeof(U); ++i) bits |= static_cast<U>(buf[i]) << (8 * i);
  return std::bit_cast<T>(bits);
}

}  // namespace

void write_cmag(std::ostream& out, const GridFunction& f) {
  out.write("CMAG", 4);
  put_le<std::uint32_t>(out, kCmagVersion);
  put_le<std::uint32_t>(out, static_cast<std::uint32_t>(f.torus().n()));
  put_le<std::uint32_t>(out, static_cast<std::uint32_t>(f.torus().points_per_axis()));
  for (double v : f.values()) put_le<double>(out, v);
  if (!out) throw Error("CMAG: write failed");
}

GridFunction read_cmag(std::istream& in) {
  char magic[4];
  in.read(magic, 4);
  if (!in || std::memcmp(magic, "CMAG", 4) != 0) throw InvalidInput("CMAG: bad magic");
  auto version = get_le<std::uint32_t>(in);
  if (version != kCmagVersion) throw InvalidInput("CMAG: unsupported version");
  auto n = get_le<std::uint32_t>(in);
  auto N = get_le<std::uint32_t>(in);
  Torus torus(static_cast<int>(n), static_cast<int>(N));
  std::vector<double> values(torus.size());
  for (double& v : values) v = get_le<double>(in);
  return GridFunction(torus, std::move(values));
}

void write_cmag(const std::filesystem::path& path, const GridFunction& f) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("CMAG: cannot open " + path.string());
  write_cmag(out, f);
}

GridFunction read_cmag(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("CMAG: cannot open " + path.string());
  return read_cmag(in);
}

}  // namespace cma
