#pragma once

#include <array>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "rtsmooth/geometry.hpp"
#include "rtsmooth/types.hpp"

namespace rtsmooth {

/// Regular workspace discretization. Cell index = x + nx * (y + ny * z).
///
/// Planar grids (dim 2) have dims[2] == 1; their cell centres sit at z = 0 and
/// their cells are treated as edge-high slabs centred on z = 0, so every planar
/// query reduces exactly to its 2D counterpart.
class VoxelGrid {
 public:
  VoxelGrid(int dim, Vec3 origin, double edge, std::array<int, 3> dims);

  /// 32 x 32 cells over [0, 2] m squared.
  static VoxelGrid desk_planar();
  /// 24^3 cells over [0, 1.5] m cubed.
  static VoxelGrid desk_spatial();

  int dim() const { return dim_; }
  const Vec3& origin() const { return origin_; }
  double edge() const { return edge_; }
  const std::array<int, 3>& dims() const { return dims_; }
  int size() const { return dims_[0] * dims_[1] * dims_[2]; }

  std::array<int, 3> coords(int index) const;
  int index(const std::array<int, 3>& c) const;
  Vec3 center(int index) const;
  Box cell_box(int index) const;

  /// Cell containing p, or nullopt when p lies outside the grid.
  std::optional<int> locate(const Vec3& p) const;

  /// Inclusive cell-coordinate range touched by an axis-aligned region, clamped to the grid.
  /// Returns false when the region misses the grid entirely.
  bool cell_range(const Vec3& lo, const Vec3& hi, std::array<int, 3>& first, std::array<int, 3>& last) const;

  std::uint64_t signature() const;

 private:
  int dim_;
  Vec3 origin_;
  double edge_;
  std::array<int, 3> dims_;
};

/// V booleans, one per cell; true means the cell holds an obstacle.
class OccupancyVector {
 public:
  OccupancyVector() = default;
  explicit OccupancyVector(int size) : bits_(static_cast<std::size_t>(size), 0) {}

  int size() const { return static_cast<int>(bits_.size()); }
  bool operator[](int i) const { return bits_[static_cast<std::size_t>(i)] != 0; }
  void set(int i, bool v = true) { bits_.at(static_cast<std::size_t>(i)) = v ? 1 : 0; }
  int count() const;
  std::vector<int> occupied_indices() const;
  std::span<const std::uint8_t> raw() const { return bits_; }

  OccupancyVector operator|(const OccupancyVector& other) const;
  bool operator==(const OccupancyVector& other) const = default;

  /// LSB-first bit packing, ceil(V / 8) bytes.
  std::vector<std::uint8_t> pack_bits() const;
  static OccupancyVector unpack_bits(std::span<const std::uint8_t> bytes, int size);

 private:
  std::vector<std::uint8_t> bits_;
};

using PointCloud = std::vector<Vec3>;

/// Cell i is occupied iff at least count_threshold points fall inside it.
OccupancyVector occupancy_from_points(const VoxelGrid& grid, const PointCloud& cloud, int count_threshold);

/// Cell i is occupied iff its centre lies inside any shape.
OccupancyVector occupancy_from_shapes(const VoxelGrid& grid, std::span<const Shape> shapes);

/// One point per line, coordinates separated by commas or whitespace; '#' starts a comment.
/// Planar clouds may omit z.
PointCloud read_point_cloud(std::istream& in);
PointCloud load_point_cloud(const std::string& path);

/// 16-byte header ("OCCV", u32 V, u16 nx, u16 ny, u16 nz, u8 dim, u8 0) then packed bits.
void write_occupancy(std::ostream& out, const VoxelGrid& grid, const OccupancyVector& occ);
OccupancyVector read_occupancy(std::istream& in, const VoxelGrid& grid);

}  // namespace rtsmooth
