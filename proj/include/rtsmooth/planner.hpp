#pragma once

#include <cstdint>
#include <optional>

#include "rtsmooth/clearance_oracle.hpp"
#include "rtsmooth/scene.hpp"

namespace rtsmooth {

/// True iff the rest-to-rest motion qa -> qb is free at every sample of two grids:
/// joint steps of at most `resolution` and the time grid 0, check_dt, ..., duration
/// that verify_trajectory uses.
bool edge_free(const CollisionChecker& checker, const Configuration& qa, const Configuration& qb,
               const PlannerConfig& cfg);

/// RRT with goal bias. Each new node also tries a direct edge to the goal.
/// Returns nullopt when max_samples draws do not connect. Deterministic in `seed`.
/// start == goal yields the single-waypoint path.
std::optional<PiecewiseLinearPath> plan(const RobotModel& model, const VoxelGrid& grid, const OccupancyVector& occupancy,
                                        const Configuration& start, const Configuration& goal, std::uint64_t seed,
                                        const PlannerConfig& cfg = {});

std::optional<PiecewiseLinearPath> plan(const Scene& scene, const OccupancyVector& occupancy, const Configuration& start,
                                        const Configuration& goal, std::uint64_t seed);

}  // namespace rtsmooth
