#include "rtsmooth/baseline_smoother.hpp"

#include <chrono>
#include <random>

namespace rtsmooth {

namespace {

using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point t0) {
  return std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
}

}  // namespace

SmoothResult shortcut_iterative(const RobotModel& model, const VoxelGrid& grid, const OccupancyVector& occupancy,
                                const PiecewiseLinearPath& path, int max_iterations, double dt_check,
                                std::uint64_t seed) {
  const auto t_start = Clock::now();
  if (max_iterations < 0) throw InvalidArgument("shortcut_iterative: max_iterations must be >= 0");
  if (!(dt_check > 0.0)) throw InvalidArgument("shortcut_iterative: dt_check must be > 0");
  if (path.empty()) throw InvalidArgument("shortcut_iterative: empty path");
  if (occupancy.size() != grid.size()) throw InvalidArgument("shortcut_iterative: occupancy size differs from V");

  SmoothResult result;
  auto& rep = result.report;
  rep.method = "baseline";
  const CollisionChecker checker(model, grid, occupancy);
  ParabolicTrajectory traj = time_parameterize_path(model, path);
  rep.unsmoothed_duration = traj.duration();

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (int it = 0; it < max_iterations; ++it) {
    ++rep.iterations;
    const double T = traj.duration();
    if (T <= 0.0) break;
    double t1 = T * unit(rng);
    double t2 = T * unit(rng);
    if (t1 > t2) std::swap(t1, t2);
    if (t2 <= t1) continue;

    const std::size_t a = traj.segment_at(t1);
    const std::size_t b = traj.segment_at(t2);
    const auto& segs = traj.segments();
    const double span = traj.start_times()[b] + segs[b].duration - traj.start_times()[a];
    const Configuration q1 = traj.position(t1);
    const Configuration q2 = traj.position(t2);

    std::vector<ParabolicSegment> replacement;
    if (q1 != segs[a].start) replacement.push_back(min_time_rest_to_rest(model, segs[a].start, q1));
    replacement.push_back(min_time_rest_to_rest(model, q1, q2));
    if (q2 != segs[b].end) replacement.push_back(min_time_rest_to_rest(model, q2, segs[b].end));
    double replaced = 0.0;
    for (const auto& s : replacement) replaced += s.duration;
    if (!(replaced < span)) continue;

    const auto t_chk = Clock::now();
    bool free = true;
    for (const auto& s : replacement) {
      if (checker.first_collision(s, dt_check)) {
        free = false;
        break;
      }
    }
    rep.check_ms += ms_since(t_chk);
    if (!free) continue;

    ParabolicTrajectory next;
    for (std::size_t k = 0; k < a; ++k) next.append(segs[k]);
    for (auto& s : replacement) next.append(std::move(s));
    for (std::size_t k = b + 1; k < segs.size(); ++k) next.append(segs[k]);
    traj = std::move(next);
    rep.attempt_durations.push_back(traj.duration());
  }

  rep.accepted_retry = 0;
  rep.smoothed_duration = traj.duration();
  rep.geometric_checks = static_cast<long>(checker.checks());
  result.trajectory = std::move(traj);
  rep.total_ms = ms_since(t_start);
  return result;
}

}  // namespace rtsmooth
