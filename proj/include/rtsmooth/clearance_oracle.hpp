#pragma once

#include <optional>
#include <string>

#include "rtsmooth/parabolic.hpp"
#include "rtsmooth/robot_model.hpp"
#include "rtsmooth/voxel_grid.hpp"

namespace rtsmooth {

/// V signed distances from voxel centres to the robot surface, in metres.
using ClearanceField = VecX;

ClearanceField exact_clearance_field(const RobotModel& model, const Configuration& q, const VoxelGrid& grid);

/// Row r holds exact_clearance_field(model, Q.row(r), grid) as float.
ClearanceMatrix exact_clearance_batch(const RobotModel& model, const VoxelGrid& grid, const ConfigMatrix& q);

/// Exact capsule-versus-voxel-cube checks against one occupancy snapshot.
///
/// A configuration collides iff some occupied cell's closed cube lies strictly
/// closer than a link radius to that link's axis segment; tangency is free.
class CollisionChecker {
 public:
  CollisionChecker(const RobotModel& model, const VoxelGrid& grid, const OccupancyVector& occupancy);

  bool in_collision(const Configuration& q) const;
  bool in_collision(const CapsuleChain& chain) const;

  /// Earliest sampled collision time within one segment, relative to the segment start.
  std::optional<double> first_collision(const ParabolicSegment& seg, double dt) const;

  /// Samples every segment on its own grid 0, dt, ..., segment duration, and
  /// returns the earliest colliding global time.
  std::optional<double> first_collision(const ParabolicTrajectory& traj, double dt) const;

  /// Same, ignoring samples before `from` (used when part of a trajectory has already run).
  std::optional<double> first_collision_after(const ParabolicTrajectory& traj, double from, double dt) const;

  /// Number of configuration checks performed so far.
  std::size_t checks() const { return checks_; }

  const RobotModel& model() const { return *model_; }
  const VoxelGrid& grid() const { return *grid_; }
  const OccupancyVector& occupancy() const { return *occupancy_; }

 private:
  const RobotModel* model_;
  const VoxelGrid* grid_;
  const OccupancyVector* occupancy_;
  bool any_occupied_;
  mutable std::size_t checks_ = 0;
};

bool config_in_collision(const RobotModel& model, const Configuration& q, const VoxelGrid& grid,
                         const OccupancyVector& occupancy);

/// Earliest sampled collision time of the trajectory, or nullopt when every sample is free.
std::optional<double> verify_trajectory(const RobotModel& model, const ParabolicTrajectory& traj,
                                        const VoxelGrid& grid, const OccupancyVector& occupancy, double dt_check);

/// Training data: configurations with their exact clearance fields.
struct ClearanceDataset {
  int dof = 0;
  int voxels = 0;
  std::uint64_t robot_signature = 0;
  std::uint64_t grid_signature = 0;
  ConfigMatrix q;
  ClearanceMatrix clearance;

  int size() const { return static_cast<int>(q.rows()); }

  /// Rows [first, first + count) as a new dataset.
  ClearanceDataset slice(int first, int count) const;
};

/// `count` uniform configurations from `seed`, with exact fields computed on up
/// to `threads` workers (0 = hardware concurrency). Output is independent of `threads`.
ClearanceDataset generate_dataset(const RobotModel& model, const VoxelGrid& grid, int count, std::uint64_t seed,
                                  unsigned threads = 0);

/// Little-endian binary: "CFD1", u32 version, u32 N, u32 V, u64 robot/grid signatures,
/// grid geometry, u64 count, then per record N float64 joints and V float32 clearances.
void save_dataset(const ClearanceDataset& data, const VoxelGrid& grid, const std::string& path);
ClearanceDataset load_dataset(const std::string& path);

}  // namespace rtsmooth
