#include "rtsmooth/planner.hpp"

#include <cmath>
#include <limits>
#include <random>

namespace rtsmooth {

bool edge_free(const CollisionChecker& checker, const Configuration& qa, const Configuration& qb,
               const PlannerConfig& cfg) {
  const ParabolicSegment seg = min_time_rest_to_rest(checker.model(), qa, qb);
  if (checker.first_collision(seg, cfg.check_dt)) return false;
  double vmax = 0.0;
  for (const auto& j : seg.joints) vmax = std::max(vmax, std::abs(j.peak_velocity));
  if (vmax == 0.0) return true;
  const int steps = static_cast<int>(std::ceil(seg.duration * vmax / cfg.resolution));
  for (int k = 1; k < steps; ++k)
    if (checker.in_collision(seg.position(seg.duration * k / steps))) return false;
  return true;
}

std::optional<PiecewiseLinearPath> plan(const RobotModel& model, const VoxelGrid& grid, const OccupancyVector& occupancy,
                                        const Configuration& start, const Configuration& goal, std::uint64_t seed,
                                        const PlannerConfig& cfg) {
  cfg.validate();
  if (start.size() != model.dof() || goal.size() != model.dof())
    throw InvalidArgument("plan: endpoint size does not match the robot");
  const CollisionChecker checker(model, grid, occupancy);
  RobotModel padded_model = model;
  for (auto& r : padded_model.link_radii) r += cfg.margin;
  const CollisionChecker padded(padded_model, grid, occupancy);
  if (checker.in_collision(start)) throw InvalidArgument("plan: start configuration is in collision");
  if (checker.in_collision(goal)) throw InvalidArgument("plan: goal configuration is in collision");
  if (start == goal) return PiecewiseLinearPath{start};

  std::vector<Configuration> nodes{start};
  std::vector<int> parent{-1};
  auto extract = [&](int leaf) {
    PiecewiseLinearPath path{goal};
    for (int n = leaf; n >= 0; n = parent[static_cast<std::size_t>(n)]) path.push_back(nodes[static_cast<std::size_t>(n)]);
    std::reverse(path.begin(), path.end());
    return path;
  };
  if (edge_free(checker, start, goal, cfg)) return extract(0);

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (int s = 0; s < cfg.max_samples; ++s) {
    const Configuration target = unit(rng) < cfg.goal_bias ? goal : random_configuration(model, rng);
    int nearest = 0;
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t n = 0; n < nodes.size(); ++n) {
      const double d = (nodes[n] - target).squaredNorm();
      if (d < best) {
        best = d;
        nearest = static_cast<int>(n);
      }
    }
    const Configuration& from = nodes[static_cast<std::size_t>(nearest)];
    const double dist = std::sqrt(best);
    if (dist == 0.0) continue;
    const Configuration next = dist <= cfg.step ? target : Configuration(from + (target - from) * (cfg.step / dist));
    if (!edge_free(nearest == 0 || next == goal ? checker : padded, from, next, cfg)) continue;
    nodes.push_back(next);
    parent.push_back(nearest);
    const int leaf = static_cast<int>(nodes.size()) - 1;
    if (next == goal) {
      parent.pop_back();
      nodes.pop_back();
      return extract(nearest);
    }
    if (edge_free(checker, next, goal, cfg)) return extract(leaf);
  }
  return std::nullopt;
}

std::optional<PiecewiseLinearPath> plan(const Scene& scene, const OccupancyVector& occupancy, const Configuration& start,
                                        const Configuration& goal, std::uint64_t seed) {
  return plan(scene.robot, scene.grid, occupancy, start, goal, seed, scene.planner);
}

}  // namespace rtsmooth
