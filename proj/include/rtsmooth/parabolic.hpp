#pragma once

#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "rtsmooth/robot_model.hpp"

namespace rtsmooth {

/// Symmetric accelerate / cruise / decelerate profile for one joint.
///
/// `accel` and `peak_velocity` carry the sign of the displacement. A bang-bang
/// profile has cruise time zero. A joint that does not move has accel == 0.
struct JointProfile {
  double accel = 0.0;
  double accel_time = 0.0;
  double peak_velocity = 0.0;
};

/// Rest-to-rest motion between two configurations, all joints finishing together.
struct ParabolicSegment {
  Configuration start;
  Configuration end;
  double duration = 0.0;
  std::vector<JointProfile> joints;

  Configuration position(double tau) const;
  VecX velocity(double tau) const;
};

struct TrajectoryState {
  Configuration q;
  VecX qd;
};

class ParabolicTrajectory {
 public:
  ParabolicTrajectory() = default;
  explicit ParabolicTrajectory(std::vector<ParabolicSegment> segments);

  void append(ParabolicSegment seg);

  const std::vector<ParabolicSegment>& segments() const { return segments_; }
  /// Global start time of each segment.
  const std::vector<double>& start_times() const { return start_times_; }
  double duration() const { return duration_; }
  bool empty() const { return segments_.empty(); }
  int dof() const;

  /// Throws InvalidArgument when t lies outside [0, duration].
  TrajectoryState evaluate(double t) const;
  Configuration position(double t) const { return evaluate(t).q; }

  /// Index of the segment active at t (the later one at a shared boundary).
  std::size_t segment_at(double t) const;

  const Configuration& start() const { return segments_.front().start; }
  const Configuration& goal() const { return segments_.back().end; }

 private:
  std::vector<ParabolicSegment> segments_;
  std::vector<double> start_times_;
  double duration_ = 0.0;
};

/// Sample times 0, dt, 2dt, ... with the endpoint `duration` always included;
/// at least two entries (a zero-duration motion yields {0, 0}).
std::vector<double> sample_times(double duration, double dt);

/// Per-joint minimum time for displacement d under velocity and acceleration bounds.
double min_joint_time(double d, double vmax, double amax);

/// Minimum-time synchronized rest-to-rest segment from q0 to q1.
ParabolicSegment min_time_rest_to_rest(const RobotModel& model, const Configuration& q0,
                                       const Configuration& q1);

using PiecewiseLinearPath = std::vector<Configuration>;

/// Concatenation of rest-to-rest segments between consecutive waypoints.
ParabolicTrajectory time_parameterize_path(const RobotModel& model, const PiecewiseLinearPath& path);

nlohmann::json to_json(const ParabolicTrajectory& traj);
ParabolicTrajectory trajectory_from_json(const nlohmann::json& j);

}  // namespace rtsmooth
