#pragma once

#include <span>

#include "rtsmooth/robot_model.hpp"
#include "rtsmooth/types.hpp"
#include "rtsmooth/voxel_grid.hpp"

namespace rtsmooth {

/// Batched clearance source for the smoother: M configurations in, M x V clearances out.
class ClearanceProvider {
 public:
  virtual ~ClearanceProvider() = default;
  virtual int voxels() const = 0;
  virtual ClearanceMatrix infer(const ConfigMatrix& q) const = 0;

  /// Only the listed voxel columns, in the given order.
  virtual ClearanceMatrix infer_columns(const ConfigMatrix& q, std::span<const int> columns) const;
};

/// Exact geometric clearances; stands in for the network in oracle-equivalence runs.
class ExactClearance final : public ClearanceProvider {
 public:
  ExactClearance(const RobotModel& model, const VoxelGrid& grid) : model_(model), grid_(grid) {}
  int voxels() const override { return grid_.size(); }
  ClearanceMatrix infer(const ConfigMatrix& q) const override;
  ClearanceMatrix infer_columns(const ConfigMatrix& q, std::span<const int> columns) const override;

 private:
  RobotModel model_;
  VoxelGrid grid_;
};

}  // namespace rtsmooth
