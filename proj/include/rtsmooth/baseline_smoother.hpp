#pragma once

#include <cstdint>

#include "rtsmooth/batch_smoother.hpp"

namespace rtsmooth {

/// Iterative random shortcutting with geometric checks.
///
/// Each iteration draws t1 < t2 uniformly on [0, T] and replaces the span from the
/// start of the segment holding t1 to the end of the segment holding t2 by up to
/// three rest-to-rest segments: (segment start -> q(t1)), (q(t1) -> q(t2)) and
/// (q(t2) -> segment end). Splice points are at rest. The splice is kept only if
/// every new segment verifies at `dt_check` and the span gets strictly shorter.
SmoothResult shortcut_iterative(const RobotModel& model, const VoxelGrid& grid, const OccupancyVector& occupancy,
                                const PiecewiseLinearPath& path, int max_iterations, double dt_check,
                                std::uint64_t seed);

}  // namespace rtsmooth
