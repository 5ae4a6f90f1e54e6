#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "rtsmooth/batch_smoother.hpp"
#include "rtsmooth/robot_model.hpp"
#include "rtsmooth/voxel_grid.hpp"

namespace rtsmooth {

/// Keyframe of a scripted obstacle: translation applied to the base shape at time t.
struct Keyframe {
  double t = 0.0;
  Vec3 offset = Vec3::Zero();
};

/// Obstacle moved by piecewise-linear interpolation of its keyframes; the first and
/// last offsets hold outside the keyframe range. With `period` > 0 the script repeats.
struct DynamicObstacle {
  std::string id;
  Shape shape;
  std::vector<Keyframe> script;
  double period = 0.0;

  Shape at(double t) const;
};

struct NamedShape {
  std::string id;
  Shape shape;
};

struct PointCloudSource {
  std::string path;
  int count_threshold = 50;
};

struct PlannerConfig {
  double resolution = 0.05;  // max joint step between edge samples [rad]
  double check_dt = 0.04;    // edges are also checked on the verification time grid [s]
  double step = 0.5;         // RRT extension length [rad]
  double goal_bias = 0.1;
  int max_samples = 4000;
  /// Link radii are inflated by this much for edges between intermediate nodes;
  /// edges touching the start or goal use the real geometry [m].
  double margin = 0.0;

  void validate() const;
};

struct Scene {
  std::string name;
  RobotModel robot;
  VoxelGrid grid = VoxelGrid::desk_planar();
  std::vector<NamedShape> static_shapes;
  std::vector<PointCloudSource> point_clouds;
  std::vector<DynamicObstacle> dynamic;
  std::map<std::string, Configuration> configs;
  /// Start/goal pairs by config name, used by the benchmark.
  std::vector<std::pair<std::string, std::string>> queries;
  SmoothingConfig smoothing;
  PlannerConfig planner;
  /// Weights file for the scene's robot and grid, resolved relative to the scene file.
  std::string weights;

  const Configuration& config(const std::string& name) const;
  /// Occupancy of the static shapes and point clouds.
  OccupancyVector static_occupancy() const;
  /// Throws InvalidArgument listing the first violated invariant.
  void validate() const;
};

RobotModel robot_from_json(const nlohmann::json& j);
nlohmann::json to_json(const RobotModel& model);
VoxelGrid grid_from_json(const nlohmann::json& j);
nlohmann::json to_json(const VoxelGrid& grid);
Shape shape_from_json(const nlohmann::json& j);
nlohmann::json to_json(const Shape& shape);

/// Relative paths inside the document resolve against `base_dir`.
Scene scene_from_json(const nlohmann::json& j, const std::string& base_dir = ".");
nlohmann::json to_json(const Scene& scene);
Scene load_scene(const std::string& path);

/// Interactive edits keyed by shape id: a shape adds or replaces, nullopt removes.
using ObstacleOverrides = std::map<std::string, std::optional<Shape>>;

/// Dynamic shapes at time t with the overrides applied, voxelized and OR-ed with `static_occ`.
OccupancyVector step_obstacles(const Scene& scene, const OccupancyVector& static_occ, double t,
                               const ObstacleOverrides& overrides = {});
OccupancyVector step_obstacles(const Scene& scene, double t, const ObstacleOverrides& overrides = {});

}  // namespace rtsmooth
