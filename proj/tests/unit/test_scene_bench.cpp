#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <numeric>
#include <sstream>

#include <nlohmann/json.hpp>

#include "rtsmooth/bench.hpp"
#include "rtsmooth/clearance_provider.hpp"
#include "rtsmooth/scene.hpp"

using namespace rtsmooth;

namespace {

const std::string kScenes = std::string(RTSMOOTH_TEST_DATA_DIR) + "/scenes/";

Scene open_desk() {
  Scene s;
  s.name = "open";
  s.robot = RobotModel::desk_planar();
  s.configs["A"] = VecX{{-0.4, 0.2, 0.1}};
  s.configs["B"] = VecX{{1.8, 0.2, 0.1}};
  s.planner.margin = 0.0625;
  s.smoothing.clearance_threshold = 0.0625;
  return s;
}

Scene sweeping_box(double y) {
  Scene s = open_desk();
  DynamicObstacle d;
  d.id = "sweeper";
  d.shape = Box{Vec3(-0.1, -0.1, -0.1), Vec3(0.1, 0.1, 0.1)};
  d.script = {{0.0, Vec3(0.0, y, 0.0)}, {2.0, Vec3(2.0, y, 0.0)}};
  s.dynamic.push_back(d);
  return s;
}

}  // namespace

TEST_SUITE("scene") {
  TEST_CASE("shipped scenes validate") {
    for (const char* name : {"desk_pillars", "desk_shelf", "desk_clutter", "desk_crossing"}) {
      CAPTURE(name);
      const Scene s = load_scene(kScenes + name + ".json");
      CHECK_NOTHROW(s.validate());
      CHECK(s.name == name);
      CHECK(s.configs.count("A") == 1);
      CHECK(s.configs.count("B") == 1);
      CHECK(std::filesystem::path(s.weights).filename() == "desk_planar.cfn");
    }
  }

  TEST_CASE("json round trip") {
    const Scene s = load_scene(kScenes + "desk_crossing.json");
    const Scene back = scene_from_json(to_json(s));
    CHECK(to_json(back) == to_json(s));
    CHECK(back.configs == s.configs);
    CHECK(back.static_occupancy() == s.static_occupancy());
    for (double t : {0.0, 1.3, 2.5}) CHECK(step_obstacles(back, t) == step_obstacles(s, t));
  }

  TEST_CASE("malformed documents are rejected") {
    auto j = to_json(open_desk());
    j["configs"]["A"] = "nope";
    CHECK_THROWS_AS(scene_from_json(j), InvalidArgument);
    auto k = to_json(open_desk());
    k["robot"] = {{"profile", "octopus"}};
    CHECK_THROWS_AS(scene_from_json(k), InvalidArgument);
    CHECK_THROWS_AS(load_scene(kScenes + "missing.json"), InvalidArgument);

    Scene colliding = open_desk();
    colliding.static_shapes.push_back({"slab", Box{Vec3(0, 0, -1), Vec3(2, 2, 1)}});
    CHECK_THROWS_AS(colliding.validate(), InvalidArgument);
  }

  TEST_CASE("static scenes do not change over time") {
    const Scene s = load_scene(kScenes + "desk_pillars.json");
    const auto occ = s.static_occupancy();
    for (double t : {0.0, 0.5, 10.0, 1000.0}) CHECK(step_obstacles(s, t) == occ);

    Scene away = open_desk();
    DynamicObstacle d;
    d.id = "far";
    d.shape = Sphere{Vec3(10, 10, 0), 0.2};
    d.script = {{0.0, Vec3::Zero()}, {5.0, Vec3(1, 0, 0)}};
    away.dynamic.push_back(d);
    for (double t : {0.0, 2.0, 6.0}) CHECK(step_obstacles(away, t) == away.static_occupancy());
    CHECK_THROWS_AS(step_obstacles(away, -1.0), InvalidArgument);
  }

  TEST_CASE("linear sweep matches analytic crossing times") {
    const Scene s = sweeping_box(1.03);
    const double step = 0.01;
    const VoxelGrid& g = s.grid;
    int transitions = 0;
    OccupancyVector prev = step_obstacles(s, 0.0);
    for (int k = 0; k * step <= 2.0; ++k) {
      const double t = k * step;
      const auto occ = step_obstacles(s, t);
      for (int i = 0; i < g.size(); ++i) {
        const Vec3 c = g.center(i);
        if (std::abs(c.y() - 1.03) > 0.1) {
          CHECK_FALSE(occ[i]);
          continue;
        }
        // Offset x(t) = t; centre inside while |c.x - t| <= 0.1.
        const double enter = c.x() - 0.1, leave = c.x() + 0.1;
        const bool expect = t >= enter && t <= leave;
        const bool near_edge = std::abs(t - enter) < step || std::abs(t - leave) < step;
        if (!near_edge) CHECK(occ[i] == expect);
        if (occ[i] != prev[i]) ++transitions;
      }
      prev = occ;
    }
    CHECK(transitions > 100);
  }

  TEST_CASE("overrides add, move and remove shapes") {
    const Scene s = sweeping_box(1.03);
    const auto before = step_obstacles(s, 0.5);
    ObstacleOverrides add{{"extra", Shape{Box{Vec3(0.1, 0.1, -0.1), Vec3(0.3, 0.3, 0.1)}}}};
    const auto with = step_obstacles(s, 0.5, add);
    CHECK(with.count() > before.count());
    ObstacleOverrides gone{{"sweeper", std::nullopt}};
    CHECK(step_obstacles(s, 0.5, gone) == s.static_occupancy());
  }

  TEST_CASE("periodic scripts repeat") {
    Scene s = sweeping_box(1.03);
    s.dynamic[0].period = 2.0;
    CHECK(step_obstacles(s, 0.3) == step_obstacles(s, 2.3));
    CHECK(step_obstacles(s, 0.3) == step_obstacles(s, 4.3));
  }
}

TEST_SUITE("bench") {
  TEST_CASE("csv round trip and version header") {
    std::vector<BenchRow> rows{{"a", "batch", 4, 0, 2.5, 1.25, 0.5, 10.125, 3.5, 1.5, 0, false},
                               {"b", "baseline", 30, 1, 2.0, 2.0, 1.0, 7.0, 0.0, 6.5, 0, true}};
    std::stringstream s;
    write_rows_csv(s, rows);
    const auto back = read_rows_csv(s);
    REQUIRE(back.size() == 2);
    CHECK(back[0].scene == "a");
    CHECK(back[0].ratio == doctest::Approx(0.5));
    CHECK(back[1].fallback);
    CHECK(back[1].parameter == 30);

    std::stringstream bad("scene,method\n");
    CHECK_THROWS_AS(read_rows_csv(bad), FormatError);
  }

  TEST_CASE("summary statistics") {
    std::vector<BenchRow> rows;
    for (int k = 0; k < 4; ++k) rows.push_back({"s", "batch", 2, k, 1.0, 0.5 + 0.1 * k, 0.5 + 0.1 * k, 10.0 + k, 1, 1, 0, false});
    rows.push_back({"s", "baseline", 10, 0, 1.0, 0.9, 0.9, 3.0, 0, 3, 0, false});
    const auto cells = summarize(rows);
    REQUIRE(cells.size() == 2);
    CHECK(cells[0].method == "batch");
    CHECK(cells[0].trials == 4);
    CHECK(cells[0].mean_ratio == doctest::Approx(0.65));
    CHECK(cells[0].std_ratio == doctest::Approx(std::sqrt(0.05 / 3.0)));
    CHECK(cells[1].std_ms == 0.0);
  }

  TEST_CASE("matched speedup interpolates along the baseline curve") {
    std::vector<BenchCell> cells;
    cells.push_back({"baseline", 10, 1, 0.8, 0, 10.0, 0, 0, 0});
    cells.push_back({"baseline", 30, 1, 0.6, 0, 30.0, 0, 0, 0});
    cells.push_back({"batch", 2, 1, 0.7, 0, 5.0, 0, 0, 0});
    cells.push_back({"batch", 4, 1, 0.9, 0, 2.0, 0, 0, 0});
    cells.push_back({"batch", 8, 1, 0.57, 0, 4.0, 0, 0, 0});
    cells.push_back({"batch", 16, 1, 0.4, 0, 4.0, 0, 0, 0});
    const auto pts = matched_speedup(cells, 0.05);
    REQUIRE(pts.size() == 4);
    CHECK(*pts[0].baseline_ms == doctest::Approx(20.0));
    CHECK(*pts[0].speedup() == doctest::Approx(4.0));
    // Between the unsmoothed point (1, 0) and the first baseline cell.
    CHECK(*pts[1].baseline_ms == doctest::Approx(5.0));
    // Beyond the baseline's best ratio but within tolerance.
    CHECK(*pts[2].baseline_ms == doctest::Approx(30.0));
    CHECK(pts[2].matched_ratio == doctest::Approx(0.6));
    CHECK_FALSE(pts[3].baseline_ms);
    CHECK_FALSE(pts[3].speedup());
  }

  TEST_CASE("sweep invariants on an open scene") {
    const Scene s = open_desk();
    const ExactClearance exact(s.robot, s.grid);
    BenchConfig cfg;
    cfg.c_values = {2, 4};
    cfg.iteration_values = {0, 20};
    cfg.repetitions = 3;
    auto lookup = [&](const Scene&) -> const ClearanceProvider& { return exact; };
    const auto rows = run_bench({s}, lookup, cfg);
    CHECK(rows.size() == 12);
    for (const auto& r : rows) {
      if (r.method == "batch") CHECK(r.ratio <= 1.0);
      if (r.method == "baseline" && r.parameter == 0) CHECK(r.ratio == 1.0);
    }
    const auto again = run_bench({s}, lookup, cfg);
    for (std::size_t k = 0; k < rows.size(); ++k) {
      CHECK(again[k].smoothed == rows[k].smoothed);
      CHECK(again[k].accepted_retry == rows[k].accepted_retry);
    }
  }

  TEST_CASE("first-candidate statistics with exact clearances") {
    const Scene s = open_desk();
    const ExactClearance exact(s.robot, s.grid);
    const auto problems = randomized_problems(s, 10, 12);
    REQUIRE(problems.size() == 10);
    for (const auto& p : problems) CHECK_FALSE(verify_trajectory(s.robot, time_parameterize_path(s.robot, p.path), s.grid, p.occupancy, 0.04));
    SmoothingConfig cfg = s.smoothing;
    cfg.waypoints = 8;
    const auto stats = stats_first_candidate(s, problems, exact, cfg);
    CHECK(stats.trials == 10);
    CHECK(stats.never_verified == 0);
    CHECK(stats.evaluated() > 0);
    CHECK(stats.fraction(0) == 1.0);
    const int total = std::accumulate(stats.counts.begin(), stats.counts.end(), 0) + stats.never_verified;
    CHECK(total == stats.evaluated());

    // Empty occupancy: the direct shortcut always verifies.
    std::vector<BenchProblem> open;
    for (auto p : problems) {
      p.occupancy = OccupancyVector(s.grid.size());
      open.push_back(p);
    }
    const auto empty_stats = stats_first_candidate(s, open, exact, cfg);
    CHECK(empty_stats.fraction(0) == 1.0);
    CHECK(empty_stats.evaluated() == 10);
  }

  TEST_CASE("problem generation is deterministic") {
    const Scene s = open_desk();
    const auto a = randomized_problems(s, 3, 5);
    const auto b = randomized_problems(s, 3, 5);
    for (std::size_t k = 0; k < a.size(); ++k) {
      CHECK(a[k].path == b[k].path);
      CHECK(a[k].occupancy == b[k].occupancy);
    }
    CHECK(mix_seed(1, 0) != mix_seed(1, 1));
  }
}
