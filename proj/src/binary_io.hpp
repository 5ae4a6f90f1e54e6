#pragma once

// Little-endian binary helpers shared by the dataset and weights formats.

#include <bit>
#include <cstdint>
#include <istream>
#include <ostream>
#include <string>

#include "rtsmooth/voxel_grid.hpp"

namespace rtsmooth::binio {

static_assert(std::endian::native == std::endian::little, "binary formats assume a little-endian host");

class Writer {
 public:
  explicit Writer(std::ostream& out) : out_(out) {}
  void bytes(const void* p, std::size_t n) { out_.write(static_cast<const char*>(p), static_cast<std::streamsize>(n)); }
  void u8(std::uint8_t v) { bytes(&v, 1); }
  void u32(std::uint32_t v) { bytes(&v, 4); }
  void i32(std::int32_t v) { bytes(&v, 4); }
  void u64(std::uint64_t v) { bytes(&v, 8); }
  void f32(float v) { bytes(&v, 4); }
  void f64(double v) { bytes(&v, 8); }
  void f32_array(const float* p, std::size_t n) { bytes(p, n * sizeof(float)); }

 private:
  std::ostream& out_;
};

class Reader {
 public:
  Reader(std::istream& in, std::string name) : in_(in), name_(std::move(name)) {}
  void bytes(void* p, std::size_t n) {
    if (!in_.read(static_cast<char*>(p), static_cast<std::streamsize>(n)))
      throw FormatError(name_ + ": truncated file");
  }
  std::uint8_t u8() { return get<std::uint8_t>(); }
  std::uint32_t u32() { return get<std::uint32_t>(); }
  std::int32_t i32() { return get<std::int32_t>(); }
  std::uint64_t u64() { return get<std::uint64_t>(); }
  float f32() { return get<float>(); }
  double f64() { return get<double>(); }
  void f32_array(float* p, std::size_t n) { bytes(p, n * sizeof(float)); }
  bool at_eof() { return in_.peek() == std::char_traits<char>::eof(); }

 private:
  template <class T>
  T get() {
    T v;
    bytes(&v, sizeof v);
    return v;
  }
  std::istream& in_;
  std::string name_;
};

inline void write_grid(Writer& w, const VoxelGrid& g) {
  w.i32(g.dim());
  for (int k = 0; k < 3; ++k) w.f64(g.origin()[k]);
  w.f64(g.edge());
  for (int d : g.dims()) w.i32(d);
}

inline VoxelGrid read_grid(Reader& r) {
  const int dim = r.i32();
  Vec3 origin;
  for (int k = 0; k < 3; ++k) origin[k] = r.f64();
  const double edge = r.f64();
  std::array<int, 3> dims{};
  for (auto& d : dims) d = r.i32();
  try {
    return VoxelGrid(dim, origin, edge, dims);
  } catch (const InvalidArgument& e) {
    throw FormatError(std::string("grid header: ") + e.what());
  }
}

}  // namespace rtsmooth::binio
