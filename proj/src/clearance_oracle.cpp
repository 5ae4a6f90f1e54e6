#include "rtsmooth/clearance_oracle.hpp"

#include <algorithm>
#include <bit>
#include <cstring>
#include <fstream>
#include <limits>
#include <thread>

#include "binary_io.hpp"

namespace rtsmooth {

namespace {

// 3 x V matrix of voxel centres.
Eigen::Matrix3Xd voxel_centers(const VoxelGrid& grid) {
  Eigen::Matrix3Xd c(3, grid.size());
  for (int i = 0; i < grid.size(); ++i) c.col(i) = grid.center(i);
  return c;
}

void field_into(const CapsuleChain& chain, const Eigen::Matrix3Xd& centers, Eigen::Ref<VecX> out) {
  out.setConstant(std::numeric_limits<double>::infinity());
  for (const auto& cap : chain) {
    const Vec3 ab = cap.b - cap.a;
    const double len2 = ab.squaredNorm();
    const Eigen::Matrix3Xd ap = centers.colwise() - cap.a;
    Eigen::ArrayXd t;
    if (len2 > 0.0) {
      t = ((ab.transpose() * ap).array() / len2).max(0.0).min(1.0).transpose();
    } else {
      t = Eigen::ArrayXd::Zero(centers.cols());
    }
    const Eigen::Matrix3Xd diff = ap - ab * t.matrix().transpose();
    const Eigen::ArrayXd d = diff.colwise().norm().transpose().array() - cap.radius;
    out = out.array().min(d).matrix();
  }
}

}  // namespace

ClearanceField exact_clearance_field(const RobotModel& model, const Configuration& q, const VoxelGrid& grid) {
  ClearanceField f(grid.size());
  field_into(forward_kinematics(model, q), voxel_centers(grid), f);
  return f;
}

ClearanceMatrix exact_clearance_batch(const RobotModel& model, const VoxelGrid& grid, const ConfigMatrix& q) {
  if (q.cols() != model.dof()) throw InvalidArgument("exact_clearance_batch: Q columns must equal dof");
  const auto centers = voxel_centers(grid);
  ClearanceMatrix out(q.rows(), grid.size());
  VecX row(grid.size());
  for (Eigen::Index r = 0; r < q.rows(); ++r) {
    field_into(forward_kinematics(model, q.row(r).transpose()), centers, row);
    out.row(r) = row.cast<float>().transpose();
  }
  return out;
}

CollisionChecker::CollisionChecker(const RobotModel& model, const VoxelGrid& grid, const OccupancyVector& occupancy)
    : model_(&model), grid_(&grid), occupancy_(&occupancy), any_occupied_(occupancy.count() > 0) {
  if (occupancy.size() != grid.size()) throw InvalidArgument("CollisionChecker: occupancy size differs from V");
}

bool CollisionChecker::in_collision(const CapsuleChain& chain) const {
  ++checks_;
  if (!any_occupied_) return false;
  const auto& occ = *occupancy_;
  const auto& dims = grid_->dims();
  for (const auto& cap : chain) {
    const Vec3 r = Vec3::Constant(cap.radius);
    std::array<int, 3> first{}, last{};
    if (!grid_->cell_range(cap.a.cwiseMin(cap.b) - r, cap.a.cwiseMax(cap.b) + r, first, last)) continue;
    for (int z = first[2]; z <= last[2]; ++z) {
      for (int y = first[1]; y <= last[1]; ++y) {
        const int row = dims[0] * (y + dims[1] * z);
        for (int x = first[0]; x <= last[0]; ++x) {
          const int idx = row + x;
          if (!occ[idx]) continue;
          if (segment_box_distance(cap.a, cap.b, grid_->cell_box(idx)) < cap.radius) return true;
        }
      }
    }
  }
  return false;
}

bool CollisionChecker::in_collision(const Configuration& q) const {
  if (!any_occupied_) {
    ++checks_;
    return false;
  }
  return in_collision(forward_kinematics(*model_, q));
}

std::optional<double> CollisionChecker::first_collision(const ParabolicSegment& seg, double dt) const {
  for (double tau : sample_times(seg.duration, dt))
    if (in_collision(seg.position(tau))) return tau;
  return std::nullopt;
}

std::optional<double> CollisionChecker::first_collision(const ParabolicTrajectory& traj, double dt) const {
  return first_collision_after(traj, 0.0, dt);
}

std::optional<double> CollisionChecker::first_collision_after(const ParabolicTrajectory& traj, double from,
                                                              double dt) const {
  if (!(dt > 0.0)) throw InvalidArgument("verify_trajectory: dt_check must be > 0");
  const auto& segs = traj.segments();
  for (std::size_t i = 0; i < segs.size(); ++i) {
    const double t0 = traj.start_times()[i];
    if (t0 + segs[i].duration < from) continue;
    for (double tau : sample_times(segs[i].duration, dt)) {
      if (t0 + tau < from) continue;
      if (in_collision(segs[i].position(tau))) return t0 + tau;
    }
  }
  return std::nullopt;
}

bool config_in_collision(const RobotModel& model, const Configuration& q, const VoxelGrid& grid,
                         const OccupancyVector& occupancy) {
  return CollisionChecker(model, grid, occupancy).in_collision(q);
}

std::optional<double> verify_trajectory(const RobotModel& model, const ParabolicTrajectory& traj,
                                        const VoxelGrid& grid, const OccupancyVector& occupancy, double dt_check) {
  return CollisionChecker(model, grid, occupancy).first_collision(traj, dt_check);
}

ClearanceDataset ClearanceDataset::slice(int first, int count) const {
  if (first < 0 || count < 0 || first + count > size()) throw InvalidArgument("ClearanceDataset::slice out of range");
  ClearanceDataset out = *this;
  out.q = q.middleRows(first, count);
  out.clearance = clearance.middleRows(first, count);
  return out;
}

ClearanceDataset generate_dataset(const RobotModel& model, const VoxelGrid& grid, int count, std::uint64_t seed,
                                  unsigned threads) {
  if (count < 0) throw InvalidArgument("generate_dataset: count must be >= 0");
  ClearanceDataset data;
  data.dof = model.dof();
  data.voxels = grid.size();
  data.robot_signature = model.signature();
  data.grid_signature = grid.signature();
  data.q.resize(count, model.dof());
  std::mt19937_64 rng(seed);
  for (int r = 0; r < count; ++r) data.q.row(r) = random_configuration(model, rng).transpose();

  data.clearance.resize(count, grid.size());
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = std::min<unsigned>(threads, static_cast<unsigned>(std::max(1, count)));
  const auto centers = voxel_centers(grid);
  auto work = [&](int begin, int end) {
    VecX row(grid.size());
    for (int r = begin; r < end; ++r) {
      field_into(forward_kinematics(model, data.q.row(r).transpose()), centers, row);
      data.clearance.row(r) = row.cast<float>().transpose();
    }
  };
  if (threads <= 1) {
    work(0, count);
  } else {
    std::vector<std::jthread> pool;
    const int chunk = (count + static_cast<int>(threads) - 1) / static_cast<int>(threads);
    for (unsigned w = 0; w < threads; ++w) {
      const int b = static_cast<int>(w) * chunk;
      const int e = std::min(count, b + chunk);
      if (b < e) pool.emplace_back(work, b, e);
    }
  }
  return data;
}

namespace {
constexpr char kDatasetMagic[4] = {'C', 'F', 'D', '1'};
constexpr std::uint32_t kDatasetVersion = 1;
}  // namespace

void save_dataset(const ClearanceDataset& data, const VoxelGrid& grid, const std::string& path) {
  if (grid.size() != data.voxels || grid.signature() != data.grid_signature)
    throw SignatureMismatch("save_dataset: grid does not match dataset");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot write " + path);
  binio::Writer w(out);
  w.bytes(kDatasetMagic, 4);
  w.u32(kDatasetVersion);
  w.u32(static_cast<std::uint32_t>(data.dof));
  w.u32(static_cast<std::uint32_t>(data.voxels));
  w.u64(data.robot_signature);
  w.u64(data.grid_signature);
  binio::write_grid(w, grid);
  w.u64(static_cast<std::uint64_t>(data.size()));
  for (int r = 0; r < data.size(); ++r) {
    for (int k = 0; k < data.dof; ++k) w.f64(data.q(r, k));
    w.f32_array(data.clearance.row(r).data(), static_cast<std::size_t>(data.voxels));
  }
  if (!out) throw FormatError("write failed for " + path);
}

ClearanceDataset load_dataset(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open " + path);
  binio::Reader r(in, path);
  char magic[4];
  r.bytes(magic, 4);
  if (std::memcmp(magic, kDatasetMagic, 4) != 0) throw FormatError(path + ": not a clearance dataset");
  if (r.u32() != kDatasetVersion) throw FormatError(path + ": unsupported dataset version");
  ClearanceDataset data;
  data.dof = static_cast<int>(r.u32());
  data.voxels = static_cast<int>(r.u32());
  data.robot_signature = r.u64();
  data.grid_signature = r.u64();
  const VoxelGrid grid = binio::read_grid(r);
  if (grid.size() != data.voxels || grid.signature() != data.grid_signature)
    throw FormatError(path + ": grid header inconsistent");
  const auto count = r.u64();
  if (data.dof < 1 || count > (1u << 26)) throw FormatError(path + ": implausible header");
  data.q.resize(static_cast<Eigen::Index>(count), data.dof);
  data.clearance.resize(static_cast<Eigen::Index>(count), data.voxels);
  for (Eigen::Index i = 0; i < static_cast<Eigen::Index>(count); ++i) {
    for (int k = 0; k < data.dof; ++k) data.q(i, k) = r.f64();
    r.f32_array(data.clearance.row(i).data(), static_cast<std::size_t>(data.voxels));
  }
  return data;
}

}  // namespace rtsmooth
