#pragma once

#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "rtsmooth/clearance_oracle.hpp"
#include "rtsmooth/clearance_provider.hpp"
#include "rtsmooth/parabolic.hpp"

namespace rtsmooth {

struct SmoothingConfig {
  int waypoints = 8;                  // c: configurations sampled between start and goal
  double sample_dt = 0.04;            // candidate sub-sampling interval [s]
  double clearance_threshold = 0.02;  // inferred clearance below this marks a collision [m]
  int max_dijkstra_retries = 8;
  double check_dt = 0.04;  // geometric verification interval [s]
  /// Infer only the currently occupied voxel columns. The boolean product ignores
  /// every other column, so statuses are identical; only memory and time change.
  bool occupied_columns_only = true;

  void validate() const;
};

/// Rest-to-rest shortcut S(q_i, q_j) with its rows in the stacked sample matrix.
struct ShortcutCandidate {
  int i = 0;
  int j = 0;
  ParabolicSegment trajectory;
  int first_row = 0;
  int rows = 0;

  double duration() const { return trajectory.duration; }
};

struct CandidateSet {
  std::vector<Configuration> waypoints;  // q_0 .. q_{c+1}
  std::vector<ShortcutCandidate> candidates;

  int node_count() const { return static_cast<int>(waypoints.size()); }
  /// Position of S(q_i, q_j) in `candidates`.
  int candidate_index(int i, int j) const;
};

using Edge = std::pair<int, int>;
using CollisionMatrix = Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// q_0 = start, q_{c+1} = goal, q_k at time k T / (c + 1) for k = 1..c.
std::vector<Configuration> sample_waypoints(const ParabolicTrajectory& path_trajectory, int c);

/// All (c+2)(c+1)/2 shortcuts ordered S(q_0,q_1), S(q_0,q_2), ..., S(q_c,q_{c+1}).
CandidateSet enumerate_candidates(const RobotModel& model, const std::vector<Configuration>& waypoints);

/// Samples each candidate at 0, dt, ..., duration and stacks the rows in candidate
/// order into one M x N matrix; fills every candidate's row range.
ConfigMatrix subsample_and_stack(CandidateSet& set, double dt);

/// Entry true iff clearance < threshold.
CollisionMatrix inferred_collision_matrix(const ClearanceMatrix& clearances, double threshold);

/// Row r collides iff OR over v of (collision(r, v) AND occupied[v]).
std::vector<bool> row_collisions(const CollisionMatrix& collision, std::span<const std::uint8_t> occupied);

/// Candidate collides iff any of its rows does. Returns one flag per candidate (true = in collision).
std::vector<bool> candidate_status(const CollisionMatrix& collision, const OccupancyVector& occupancy,
                                   const CandidateSet& set);

/// Shortest-duration waypoint sequence 0 -> c+1 over free, unblocked candidates.
std::optional<std::vector<int>> shortest_free_composition(const CandidateSet& set, const std::vector<bool>& in_collision,
                                                          const std::set<Edge>& blocked);

ParabolicTrajectory compose(const CandidateSet& set, const std::vector<int>& sequence);

struct SmoothReport {
  std::string method = "batch";
  double unsmoothed_duration = 0.0;
  double smoothed_duration = 0.0;
  /// Dijkstra re-runs before acceptance (0 = first composition verified); -1 on fallback.
  int accepted_retry = -1;
  int dijkstra_runs = 0;
  /// Dijkstra run whose composition first passed geometric verification, whether or
  /// not it was shorter than the original; -1 when none did.
  int verified_retry = -1;
  bool fallback = false;
  std::string fallback_reason;
  std::vector<double> attempt_durations;
  std::vector<int> waypoint_sequence;
  int candidates = 0;
  long stacked_rows = 0;
  long stacked_bytes = 0;
  long geometric_checks = 0;
  long iterations = 0;
  double inference_ms = 0.0;
  double check_ms = 0.0;
  double total_ms = 0.0;

  double other_ms() const { return total_ms - inference_ms - check_ms; }
  double ratio() const { return unsmoothed_duration > 0.0 ? smoothed_duration / unsmoothed_duration : 1.0; }
};

nlohmann::json to_json(const SmoothReport& r);

struct SmoothResult {
  ParabolicTrajectory trajectory;
  SmoothReport report;
};

/// The original path itself collides: the environment changed under the planner.
class PathInCollision : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Batched shortcut smoothing with geometric re-verification.
SmoothResult smooth(const RobotModel& model, const VoxelGrid& grid, const OccupancyVector& occupancy,
                    const PiecewiseLinearPath& path, const ClearanceProvider& clearance, const SmoothingConfig& cfg);

}  // namespace rtsmooth
