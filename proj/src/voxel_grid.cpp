#include "rtsmooth/voxel_grid.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

namespace rtsmooth {

VoxelGrid::VoxelGrid(int dim, Vec3 origin, double edge, std::array<int, 3> dims)
    : dim_(dim), origin_(std::move(origin)), edge_(edge), dims_(dims) {
  if (dim != 2 && dim != 3) throw InvalidArgument("VoxelGrid: dim must be 2 or 3");
  if (!(edge > 0.0) || !std::isfinite(edge)) throw InvalidArgument("VoxelGrid: edge must be > 0");
  if (dims[0] < 1 || dims[1] < 1 || dims[2] < 1) throw InvalidArgument("VoxelGrid: dims must be >= 1");
  if (dim == 2) {
    if (dims[2] != 1) throw InvalidArgument("VoxelGrid: planar grids have one layer");
    origin_.z() = 0.0;
  }
}

VoxelGrid VoxelGrid::desk_planar() { return VoxelGrid(2, Vec3::Zero(), 2.0 / 32.0, {32, 32, 1}); }

VoxelGrid VoxelGrid::desk_spatial() { return VoxelGrid(3, Vec3::Zero(), 1.5 / 24.0, {24, 24, 24}); }

std::array<int, 3> VoxelGrid::coords(int index) const {
  if (index < 0 || index >= size()) throw InvalidArgument("VoxelGrid: cell index out of range");
  const int x = index % dims_[0];
  const int y = (index / dims_[0]) % dims_[1];
  const int z = index / (dims_[0] * dims_[1]);
  return {x, y, z};
}

int VoxelGrid::index(const std::array<int, 3>& c) const {
  for (int k = 0; k < 3; ++k)
    if (c[static_cast<std::size_t>(k)] < 0 || c[static_cast<std::size_t>(k)] >= dims_[static_cast<std::size_t>(k)])
      throw InvalidArgument("VoxelGrid: cell coordinates out of range");
  return c[0] + dims_[0] * (c[1] + dims_[1] * c[2]);
}

Vec3 VoxelGrid::center(int index) const {
  const auto c = coords(index);
  Vec3 p;
  for (int k = 0; k < 3; ++k) p[k] = origin_[k] + (c[static_cast<std::size_t>(k)] + 0.5) * edge_;
  if (dim_ == 2) p.z() = 0.0;
  return p;
}

Box VoxelGrid::cell_box(int index) const {
  const Vec3 c = center(index);
  const Vec3 half = Vec3::Constant(0.5 * edge_);
  return Box{c - half, c + half};
}

std::optional<int> VoxelGrid::locate(const Vec3& p) const {
  std::array<int, 3> c{};
  const int axes = dim_;
  for (int k = 0; k < axes; ++k) {
    const double f = std::floor((p[k] - origin_[k]) / edge_);
    if (!(f >= 0.0) || f >= dims_[static_cast<std::size_t>(k)]) return std::nullopt;
    c[static_cast<std::size_t>(k)] = static_cast<int>(f);
  }
  return index(c);
}

bool VoxelGrid::cell_range(const Vec3& lo, const Vec3& hi, std::array<int, 3>& first,
                           std::array<int, 3>& last) const {
  for (int k = 0; k < 3; ++k) {
    const auto i = static_cast<std::size_t>(k);
    if (k == 2 && dim_ == 2) {
      first[i] = last[i] = 0;
      continue;
    }
    const double a = std::floor((lo[k] - origin_[k]) / edge_);
    const double b = std::floor((hi[k] - origin_[k]) / edge_);
    if (b < 0.0 || a >= dims_[i]) return false;
    first[i] = static_cast<int>(std::max(a, 0.0));
    last[i] = static_cast<int>(std::min(b, static_cast<double>(dims_[i] - 1)));
  }
  return true;
}

std::uint64_t VoxelGrid::signature() const {
  Fnv1a h;
  h.add(std::int64_t{dim_}).add(edge_);
  for (int k = 0; k < 3; ++k) h.add(origin_[k]).add(std::int64_t{dims_[static_cast<std::size_t>(k)]});
  return h.value();
}

int OccupancyVector::count() const {
  return static_cast<int>(std::count(bits_.begin(), bits_.end(), std::uint8_t{1}));
}

std::vector<int> OccupancyVector::occupied_indices() const {
  std::vector<int> out;
  for (std::size_t i = 0; i < bits_.size(); ++i)
    if (bits_[i]) out.push_back(static_cast<int>(i));
  return out;
}

OccupancyVector OccupancyVector::operator|(const OccupancyVector& other) const {
  if (other.size() != size()) throw InvalidArgument("OccupancyVector: size mismatch in OR");
  OccupancyVector out(size());
  for (std::size_t i = 0; i < bits_.size(); ++i) out.bits_[i] = bits_[i] | other.bits_[i];
  return out;
}

std::vector<std::uint8_t> OccupancyVector::pack_bits() const {
  std::vector<std::uint8_t> out((bits_.size() + 7) / 8, 0);
  for (std::size_t i = 0; i < bits_.size(); ++i)
    if (bits_[i]) out[i / 8] |= static_cast<std::uint8_t>(1u << (i % 8));
  return out;
}

OccupancyVector OccupancyVector::unpack_bits(std::span<const std::uint8_t> bytes, int size) {
  if (bytes.size() != (static_cast<std::size_t>(size) + 7) / 8)
    throw FormatError("occupancy: packed length does not match V");
  OccupancyVector out(size);
  for (std::size_t i = 0; i < static_cast<std::size_t>(size); ++i)
    out.bits_[i] = (bytes[i / 8] >> (i % 8)) & 1u;
  return out;
}

OccupancyVector occupancy_from_points(const VoxelGrid& grid, const PointCloud& cloud, int count_threshold) {
  if (count_threshold < 1) throw InvalidArgument("occupancy_from_points: count_threshold must be >= 1");
  std::vector<int> counts(static_cast<std::size_t>(grid.size()), 0);
  for (const auto& p : cloud) {
    if (auto cell = grid.locate(p)) ++counts[static_cast<std::size_t>(*cell)];
  }
  OccupancyVector occ(grid.size());
  for (int i = 0; i < grid.size(); ++i)
    if (counts[static_cast<std::size_t>(i)] >= count_threshold) occ.set(i);
  return occ;
}

OccupancyVector occupancy_from_shapes(const VoxelGrid& grid, std::span<const Shape> shapes) {
  OccupancyVector occ(grid.size());
  if (shapes.empty()) return occ;
  for (int i = 0; i < grid.size(); ++i) {
    const Vec3 c = grid.center(i);
    for (const auto& s : shapes) {
      if (shape_contains(s, c)) {
        occ.set(i);
        break;
      }
    }
  }
  return occ;
}

PointCloud read_point_cloud(std::istream& in) {
  PointCloud cloud;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    std::replace(line.begin(), line.end(), ',', ' ');
    std::istringstream fields(line);
    std::vector<double> v;
    double x;
    while (fields >> x) v.push_back(x);
    if (!fields.eof()) throw FormatError("point cloud line " + std::to_string(lineno) + ": not a number");
    if (v.empty()) continue;
    if (v.size() != 2 && v.size() != 3)
      throw FormatError("point cloud line " + std::to_string(lineno) + ": expected 2 or 3 coordinates");
    Vec3 p(v[0], v[1], v.size() == 3 ? v[2] : 0.0);
    if (!p.allFinite()) throw FormatError("point cloud line " + std::to_string(lineno) + ": non-finite value");
    cloud.push_back(p);
  }
  return cloud;
}

PointCloud load_point_cloud(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open point cloud " + path);
  return read_point_cloud(in);
}

namespace {
constexpr char kOccMagic[4] = {'O', 'C', 'C', 'V'};

template <class T>
void put_le(std::ostream& out, T v) {
  unsigned char buf[sizeof(T)];
  for (std::size_t i = 0; i < sizeof(T); ++i) buf[i] = static_cast<unsigned char>((static_cast<std::uint64_t>(v) >> (8 * i)) & 0xff);
  out.write(reinterpret_cast<const char*>(buf), sizeof(T));
}

template <class T>
T get_le(const unsigned char* p) {
  std::uint64_t v = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i) v |= static_cast<std::uint64_t>(p[i]) << (8 * i);
  return static_cast<T>(v);
}
}  // namespace

void write_occupancy(std::ostream& out, const VoxelGrid& grid, const OccupancyVector& occ) {
  if (occ.size() != grid.size()) throw InvalidArgument("write_occupancy: V mismatch");
  out.write(kOccMagic, 4);
  put_le<std::uint32_t>(out, static_cast<std::uint32_t>(grid.size()));
  for (int d : grid.dims()) put_le<std::uint16_t>(out, static_cast<std::uint16_t>(d));
  put_le<std::uint8_t>(out, static_cast<std::uint8_t>(grid.dim()));
  put_le<std::uint8_t>(out, 0);
  const auto packed = occ.pack_bits();
  out.write(reinterpret_cast<const char*>(packed.data()), static_cast<std::streamsize>(packed.size()));
}

OccupancyVector read_occupancy(std::istream& in, const VoxelGrid& grid) {
  unsigned char header[16];
  if (!in.read(reinterpret_cast<char*>(header), 16)) throw FormatError("occupancy: truncated header");
  if (std::memcmp(header, kOccMagic, 4) != 0) throw FormatError("occupancy: bad magic");
  const auto v = get_le<std::uint32_t>(header + 4);
  const std::array<int, 3> dims{get_le<std::uint16_t>(header + 8), get_le<std::uint16_t>(header + 10),
                                get_le<std::uint16_t>(header + 12)};
  if (static_cast<int>(v) != grid.size() || dims != grid.dims() || header[14] != grid.dim())
    throw SignatureMismatch("occupancy: grid dimensions differ from the expected grid");
  std::vector<std::uint8_t> packed((v + 7) / 8);
  if (!in.read(reinterpret_cast<char*>(packed.data()), static_cast<std::streamsize>(packed.size())))
    throw FormatError("occupancy: truncated payload");
  return OccupancyVector::unpack_bits(packed, static_cast<int>(v));
}

}  // namespace rtsmooth
