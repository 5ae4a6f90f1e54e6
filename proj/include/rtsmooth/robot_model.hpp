#pragma once

#include <random>
#include <vector>

#include "rtsmooth/geometry.hpp"
#include "rtsmooth/types.hpp"

namespace rtsmooth {

/// Serial chain of revolute joints, each followed by one capsule link.
///
/// Joint k rotates about `joint_axes[k]` expressed in the frame produced by joints
/// 0..k-1; link k then extends `link_lengths[k]` along `link_directions[k]` in the
/// rotated frame. Planar models (workspace_dim 2) must keep every axis on +-z and
/// every direction in the xy-plane; their workspace points have z = 0.
struct RobotModel {
  int workspace_dim = 2;
  std::vector<double> link_lengths;
  std::vector<double> link_radii;
  std::vector<Vec3> joint_axes;
  std::vector<Vec3> link_directions;
  VecX joint_lower;
  VecX joint_upper;
  VecX vel_max;
  VecX acc_max;
  Eigen::Isometry3d base_pose = Eigen::Isometry3d::Identity();

  int dof() const { return static_cast<int>(link_lengths.size()); }

  /// Throws InvalidArgument when any structural invariant is violated.
  void validate() const;

  /// Stable hash of every geometric and kinematic parameter.
  std::uint64_t signature() const;

  bool within_limits(const Configuration& q, double tol = 0.0) const;

  /// Planar chain with z joint axes and x link directions.
  static RobotModel planar(std::vector<double> lengths, std::vector<double> radii,
                           VecX lower, VecX upper, VecX vel, VecX acc,
                           Vec3 base_position = Vec3::Zero());

  /// Default desk-scale profile: 3-DOF planar arm at the centre of a 2 m square.
  static RobotModel desk_planar();

  /// 6-DOF spatial profile sharing every code path with the planar one.
  static RobotModel desk_spatial();
};

using CapsuleChain = std::vector<Capsule>;

CapsuleChain forward_kinematics(const RobotModel& model, const Configuration& q);

/// Signed distance from p to the robot surface: negative inside some capsule.
double surface_signed_distance(const RobotModel& model, const Configuration& q, const Vec3& p);

/// Same as above with the capsule chain already computed.
double surface_signed_distance(const CapsuleChain& chain, const Vec3& p);

/// Uniform draw within joint limits. Degenerate limits (lower == upper) are
/// returned exactly.
Configuration random_configuration(const RobotModel& model, std::mt19937_64& rng);

}  // namespace rtsmooth
