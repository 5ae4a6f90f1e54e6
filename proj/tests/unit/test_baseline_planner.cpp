#include <doctest.h>

#include <cmath>

#include "oracles.hpp"
#include "rtsmooth/baseline_smoother.hpp"
#include "rtsmooth/bench.hpp"
#include "rtsmooth/planner.hpp"

using namespace rtsmooth;

namespace {

Scene open_desk() {
  Scene s;
  s.name = "open";
  s.robot = RobotModel::desk_planar();
  s.configs["A"] = VecX{{-0.4, 0.2, 0.1}};
  s.configs["B"] = VecX{{1.8, 0.2, 0.1}};
  s.planner.margin = 0.0625;
  return s;
}

/// A block in the sweep of the outstretched arm; the only way past is with the elbow folded.
OccupancyVector blocking_wall(const Scene& s) {
  const Vec3 c = s.robot.base_pose.translation() + 0.75 * Vec3(std::cos(0.7), std::sin(0.7), 0.0);
  const std::vector<Shape> shapes{Box{c - Vec3(0.12, 0.12, 0.1), c + Vec3(0.12, 0.12, 0.1)}};
  return occupancy_from_shapes(s.grid, shapes);
}

}  // namespace

TEST_SUITE("baseline") {
  TEST_CASE("zero iterations returns the original timing") {
    const Scene s = open_desk();
    const PiecewiseLinearPath path{s.config("A"), VecX{{0.5, 1.0, -1.0}}, s.config("B")};
    const auto r = shortcut_iterative(s.robot, s.grid, OccupancyVector(s.grid.size()), path, 0, 0.04, 1);
    CHECK(r.report.ratio() == 1.0);
    CHECK(r.trajectory.duration() == time_parameterize_path(s.robot, path).duration());
    CHECK(r.report.method == "baseline");
  }

  TEST_CASE("duration never increases and approaches the direct shortcut") {
    const Scene s = open_desk();
    const OccupancyVector empty(s.grid.size());
    const PiecewiseLinearPath path{s.config("A"), VecX{{0.5, 1.0, -1.0}}, VecX{{1.0, -1.0, 1.0}}, s.config("B")};
    const double direct = min_time_rest_to_rest(s.robot, path.front(), path.back()).duration;
    double prev = time_parameterize_path(s.robot, path).duration();
    for (int iters : {1, 5, 20, 100, 300}) {
      const auto r = shortcut_iterative(s.robot, s.grid, empty, path, iters, 0.04, 9);
      CHECK(r.trajectory.duration() <= prev + 1e-12);
      CHECK(r.trajectory.duration() >= direct - 1e-12);
      for (std::size_t k = 1; k < r.report.attempt_durations.size(); ++k)
        CHECK(r.report.attempt_durations[k] < r.report.attempt_durations[k - 1]);
      prev = r.trajectory.duration();
    }
    CHECK(prev < 0.9 * time_parameterize_path(s.robot, path).duration());
  }

  TEST_CASE("every accepted splice verifies under obstacles") {
    const Scene base = open_desk();
    for (const auto& p : randomized_problems(base, 8, 3)) {
      const auto r = shortcut_iterative(base.robot, base.grid, p.occupancy, p.path, 200, 0.04, p.seed);
      CHECK_FALSE(verify_trajectory(base.robot, r.trajectory, base.grid, p.occupancy, 0.04));
      CHECK(r.report.smoothed_duration <= r.report.unsmoothed_duration);
      CHECK(r.trajectory.start() == p.path.front());
      CHECK(r.trajectory.goal() == p.path.back());
    }
  }

  TEST_CASE("same seed, same result") {
    const Scene base = open_desk();
    const auto p = randomized_problems(base, 1, 4).front();
    const auto a = shortcut_iterative(base.robot, base.grid, p.occupancy, p.path, 50, 0.04, 8);
    const auto b = shortcut_iterative(base.robot, base.grid, p.occupancy, p.path, 50, 0.04, 8);
    CHECK(a.report.attempt_durations == b.report.attempt_durations);
    CHECK_THROWS_AS(shortcut_iterative(base.robot, base.grid, p.occupancy, p.path, -1, 0.04, 8), InvalidArgument);
  }
}

TEST_SUITE("planner") {
  TEST_CASE("empty occupancy gives the straight path") {
    const Scene s = open_desk();
    const auto path = plan(s, OccupancyVector(s.grid.size()), s.config("A"), s.config("B"), 1);
    REQUIRE(path);
    CHECK(path->size() == 2);
  }

  TEST_CASE("start equal to goal") {
    const Scene s = open_desk();
    const auto path = plan(s, OccupancyVector(s.grid.size()), s.config("A"), s.config("A"), 1);
    REQUIRE(path);
    CHECK(path->size() == 1);
    CHECK(time_parameterize_path(s.robot, *path).duration() == 0.0);
  }

  TEST_CASE("threads past a blocking obstacle") {
    const Scene s = open_desk();
    const OccupancyVector occ = blocking_wall(s);
    const CollisionChecker checker(s.robot, s.grid, occ);
    REQUIRE_FALSE(checker.in_collision(s.config("A")));
    REQUIRE_FALSE(checker.in_collision(s.config("B")));
    REQUIRE_FALSE(edge_free(checker, s.config("A"), s.config("B"), s.planner));
    for (std::uint64_t seed : {1, 2, 3}) {
      const auto path = plan(s, occ, s.config("A"), s.config("B"), seed);
      REQUIRE(path);
      CHECK(path->size() > 2);
      for (std::size_t k = 0; k + 1 < path->size(); ++k) CHECK(edge_free(checker, (*path)[k], (*path)[k + 1], s.planner));
      CHECK_FALSE(verify_trajectory(s.robot, time_parameterize_path(s.robot, *path), s.grid, occ, 0.04));
    }
    const auto again = plan(s, occ, s.config("A"), s.config("B"), 2);
    CHECK(*again == *plan(s, occ, s.config("A"), s.config("B"), 2));
  }

  TEST_CASE("colliding endpoints are rejected") {
    const Scene s = open_desk();
    OccupancyVector full(s.grid.size());
    for (int i = 0; i < s.grid.size(); ++i) full.set(i);
    CHECK_THROWS_AS(plan(s, full, s.config("A"), s.config("B"), 1), InvalidArgument);
  }

  TEST_CASE("edge checks reach the planning resolution") {
    const Scene s = open_desk();
    const OccupancyVector occ = blocking_wall(s);
    const CollisionChecker checker(s.robot, s.grid, occ);
    std::mt19937_64 rng(5);
    int checked = 0;
    for (int k = 0; k < 300 && checked < 40; ++k) {
      const auto a = oracle::random_config(s.robot, rng), b = oracle::random_config(s.robot, rng);
      if (!edge_free(checker, a, b, s.planner)) continue;
      ++checked;
      // Dense resampling of the same motion finds nothing either.
      const auto seg = min_time_rest_to_rest(s.robot, a, b);
      for (int i = 0; i <= 400; ++i) CHECK_FALSE(checker.in_collision(seg.position(seg.duration * i / 400.0)));
    }
    CHECK(checked > 10);
  }
}
