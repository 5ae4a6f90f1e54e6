#include <doctest.h>

#include <chrono>
#include <thread>

#include <nlohmann/json.hpp>

#include "rtsmooth/clearance_provider.hpp"
#include "rtsmooth/realtime_loop.hpp"
#include "rtsmooth/service_protocol.hpp"

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

std::shared_ptr<const ClearanceProvider> exact_for(const Scene& s) {
  return std::make_shared<ExactClearance>(s.robot, s.grid);
}

int count_type(const std::vector<LoopEvent>& ev, const std::string& type) {
  return static_cast<int>(std::count_if(ev.begin(), ev.end(), [&](const LoopEvent& e) { return e.type == type; }));
}

ObstacleCommand add_box(const std::string& cmd_id, const std::string& shape_id, Vec3 lo, Vec3 hi) {
  return {cmd_id, ObstacleCommand::Kind::add, shape_id, Shape{Box{lo, hi}}};
}

}  // namespace

TEST_SUITE("realtime_loop") {
  TEST_CASE("without obstacles the robot shuttles between A and B") {
    const Scene s = open_desk();
    RealtimeLoop loop(s, exact_for(s));
    const auto first = loop.start();
    CHECK(count_type(first, "occupancy") == 1);
    REQUIRE(count_type(first, "trajectory") == 1);
    CHECK(loop.target() == "B");
    int arrivals = 0;
    for (int k = 0; k < 400; ++k) {
      for (const auto& e : loop.tick())
        if (e.type == "trajectory" && e.payload["reason"] == "arrived") ++arrivals;
    }
    CHECK(arrivals >= 2);
    CHECK(loop.replans() == 0);
    CHECK(loop.status() == LoopStatus::executing);
  }

  TEST_CASE("an obstacle dropped on the path triggers a verified replan") {
    const Scene s = open_desk();
    RealtimeLoop loop(s, exact_for(s));
    loop.start();
    loop.tick();
    // Across the outstretched sweep, well ahead of the arm.
    const Vec3 c = s.robot.base_pose.translation() + 0.75 * Vec3(std::cos(0.9), std::sin(0.9), 0.0);
    CHECK(loop.apply_obstacle_command(add_box("c1", "wall", c - Vec3(0.1, 0.1, 0.1), c + Vec3(0.1, 0.1, 0.1))).accepted);
    const auto ev = loop.tick();
    CHECK(count_type(ev, "occupancy") == 1);
    REQUIRE(count_type(ev, "trajectory") == 1);
    for (const auto& e : ev)
      if (e.type == "trajectory") CHECK(e.payload["reason"] == "obstacle");
    CHECK(loop.replans() == 1);
    CHECK(loop.verified_occupancy() == loop.occupancy());
    CHECK_FALSE(verify_trajectory(s.robot, loop.trajectory(), s.grid, loop.occupancy(), s.smoothing.check_dt));
  }

  TEST_CASE("a far obstacle does not cause a replan") {
    const Scene s = open_desk();
    RealtimeLoop loop(s, exact_for(s));
    loop.start();
    loop.apply_obstacle_command(add_box("c1", "corner", Vec3(1.85, 1.85, -0.1), Vec3(1.95, 1.95, 0.1)));
    const auto ev = loop.tick();
    CHECK(count_type(ev, "occupancy") == 1);
    CHECK(count_type(ev, "trajectory") == 0);
    CHECK(loop.replans() == 0);
    CHECK(loop.verified_occupancy() == loop.occupancy());
  }

  TEST_CASE("add then remove restores the occupancy") {
    const Scene s = open_desk();
    RealtimeLoop loop(s, exact_for(s));
    loop.start();
    const OccupancyVector before = loop.occupancy();
    loop.apply_obstacle_command(add_box("c1", "corner", Vec3(1.85, 1.85, -0.1), Vec3(1.95, 1.95, 0.1)));
    loop.tick();
    CHECK(loop.occupancy().count() > before.count());
    loop.apply_obstacle_command({"c2", ObstacleCommand::Kind::remove, "corner", std::nullopt});
    loop.tick();
    CHECK(loop.occupancy() == before);
  }

  TEST_CASE("duplicate command ids apply once") {
    const Scene s = open_desk();
    RealtimeLoop loop(s, exact_for(s));
    loop.start();
    const auto cmd = add_box("same", "corner", Vec3(1.85, 1.85, -0.1), Vec3(1.95, 1.95, 0.1));
    const auto a = loop.apply_obstacle_command(cmd);
    const auto b = loop.apply_obstacle_command(cmd);
    CHECK(a.accepted);
    CHECK_FALSE(a.duplicate);
    CHECK(b.accepted);
    CHECK(b.duplicate);
    const auto ev = loop.tick();
    CHECK(count_type(ev, "error") == 0);
  }

  TEST_CASE("bad shape references produce error events") {
    const Scene s = load_scene(kScenes + "desk_crossing.json");
    RealtimeLoop loop(s, exact_for(s));
    loop.start();
    loop.apply_obstacle_command({"m1", ObstacleCommand::Kind::move, "ghost", Shape{Sphere{Vec3(1, 1, 0), 0.1}}});
    loop.apply_obstacle_command({"m2", ObstacleCommand::Kind::remove, "post", std::nullopt});
    loop.apply_obstacle_command(add_box("m3", "cart", Vec3(0, 0, 0), Vec3(0.1, 0.1, 0.1)));
    std::vector<std::string> reasons;
    for (const auto& e : loop.tick())
      if (e.type == "error") reasons.push_back(e.payload["reason"]);
    REQUIRE(reasons.size() == 3);
    CHECK(reasons[0] == "unknown shape 'ghost'");
    CHECK(reasons[1] == "shape 'post' is static");
    CHECK(reasons[2] == "shape 'cart' already exists");
  }

  TEST_CASE("pause holds the clock") {
    const Scene s = open_desk();
    RealtimeLoop loop(s, exact_for(s));
    loop.start();
    loop.tick();
    loop.pause();
    const double t = loop.time(), clock = loop.trajectory_clock();
    for (int k = 0; k < 5; ++k) loop.tick();
    CHECK(loop.time() == t);
    CHECK(loop.trajectory_clock() == clock);
    loop.resume();
    loop.tick();
    CHECK(loop.trajectory_clock() > clock);
  }

  TEST_CASE("set_smoothing validates and applies") {
    const Scene s = open_desk();
    RealtimeLoop loop(s, exact_for(s));
    loop.set_smoothing(4, 0.1);
    CHECK(loop.smoothing().waypoints == 4);
    CHECK(loop.smoothing().clearance_threshold == 0.1);
    CHECK_THROWS_AS(loop.set_smoothing(std::nullopt, -1.0), InvalidArgument);
    CHECK(loop.smoothing().clearance_threshold == 0.1);
  }

  TEST_CASE("async planning lands within a few ticks") {
    const Scene s = open_desk();
    RealtimeLoop loop(s, exact_for(s), LoopConfig{0.05, 3, true});
    loop.start();
    CHECK(loop.status() == LoopStatus::replanning);
    bool landed = false;
    for (int k = 0; k < 200 && !landed; ++k) {
      std::this_thread::sleep_for(std::chrono::milliseconds(5));
      landed = count_type(loop.tick(), "trajectory") > 0;
    }
    CHECK(landed);
    CHECK(loop.status() == LoopStatus::executing);
  }

  TEST_CASE("the executed configuration never collides") {
    const Scene s = load_scene(kScenes + "desk_crossing.json");
    for (std::uint64_t seed : {1, 2, 3}) {
      RealtimeLoop loop(s, exact_for(s), LoopConfig{0.05, seed, false});
      loop.start();
      for (int k = 0; k < 160; ++k) {
        loop.tick();
        const CollisionChecker checker(s.robot, s.grid, loop.verified_occupancy());
        CHECK_FALSE(checker.in_collision(loop.configuration()));
      }
      CHECK(loop.replans() >= 1);
    }
  }
}

TEST_SUITE("service_protocol") {
  TEST_CASE("base64 round trip and rejects") {
    CHECK(base64_encode(std::vector<std::uint8_t>{}) == "");
    const std::string hello = "hello";
    const std::vector<std::uint8_t> bytes(hello.begin(), hello.end());
    CHECK(base64_encode(bytes) == "aGVsbG8=");
    CHECK(base64_decode("aGVsbG8=") == bytes);
    for (std::size_t n = 0; n < 20; ++n) {
      std::vector<std::uint8_t> v(n);
      for (std::size_t i = 0; i < n; ++i) v[i] = static_cast<std::uint8_t>(37 * i + 11);
      CHECK(base64_decode(base64_encode(v)) == v);
    }
    CHECK_THROWS_AS(base64_decode("abc"), InvalidArgument);
    CHECK_THROWS_AS(base64_decode("ab!d"), InvalidArgument);
  }

  TEST_CASE("outgoing sequence numbers increase") {
    MessageSequencer seq;
    std::uint64_t last = 0;
    for (int k = 0; k < 10; ++k) {
      const auto m = to_message({"state", {{"time", k}}}, seq);
      CHECK(m["seq"].get<std::uint64_t>() > last);
      last = m["seq"];
      CHECK(m["type"] == "state");
    }
    CHECK(seq.last() == last);
  }

  TEST_CASE("occupancy payload round trip") {
    const Scene s = load_scene(kScenes + "desk_pillars.json");
    const OccupancyVector occ = s.static_occupancy();
    MessageSequencer seq;
    const auto msg = to_message({"occupancy", {{"time", 0.0}, {"voxels", occ.size()}, {"occupied", occ.occupied_indices()}}}, seq);
    CHECK_FALSE(msg["payload"].contains("occupied"));
    CHECK(msg["payload"]["count"] == occ.count());
    CHECK(occupancy_from_payload(msg["payload"]) == occ);
  }

  TEST_CASE("client message parsing") {
    const auto ob = parse_client_message(
        R"({"seq": 3, "type": "obstacle", "payload": {"id": "x1", "op": "add", "shape_id": "s",
            "shape": {"sphere": {"center": [1, 1, 0], "radius": 0.1}}}})");
    CHECK(ob.seq == 3);
    REQUIRE(std::holds_alternative<ObstacleCommand>(ob.request));
    CHECK(std::get<ObstacleCommand>(ob.request).command_id == "x1");
    CHECK(std::holds_alternative<PauseRequest>(parse_client_message(R"({"seq": 1, "type": "pause"})").request));
    CHECK(std::holds_alternative<ResumeRequest>(parse_client_message(R"({"seq": 1, "type": "resume"})").request));
    const auto cfg = parse_client_message(R"({"seq": 2, "type": "set-config", "payload": {"c": 6}})");
    REQUIRE(std::holds_alternative<SetConfigRequest>(cfg.request));
    CHECK(*std::get<SetConfigRequest>(cfg.request).c == 6);
    CHECK_FALSE(std::get<SetConfigRequest>(cfg.request).threshold);

    for (const char* bad : {"not json", "[1]", R"({"type": "pause"})", R"({"seq": -1, "type": "pause"})",
                            R"({"seq": 1, "type": 4})", R"({"seq": 1, "type": "dance"})",
                            R"({"seq": 1, "type": "set-config", "payload": {"c": -2}})",
                            R"({"seq": 1, "type": "set-config", "payload": {"threshold": -0.1}})",
                            R"({"seq": 1, "type": "obstacle", "payload": {"id": "a", "op": "add", "shape_id": "s"}})"}) {
      CAPTURE(bad);
      CHECK_THROWS_AS(parse_client_message(bad), InvalidArgument);
    }
  }

  TEST_CASE("stale client sequence numbers are dropped") {
    ClientSequenceGuard guard;
    CHECK(guard.accept(1));
    CHECK(guard.accept(5));
    CHECK_FALSE(guard.accept(5));
    CHECK_FALSE(guard.accept(2));
    CHECK(guard.accept(6));
  }

  TEST_CASE("acknowledgements echo the client sequence") {
    const Scene s = open_desk();
    RealtimeLoop loop(s, exact_for(s));
    loop.start();
    const auto a = handle_client_message(loop, parse_client_message(R"({"seq": 7, "type": "pause"})"));
    CHECK(a["ack"] == 7);
    const auto cfg = handle_client_message(loop, parse_client_message(R"({"seq": 8, "type": "set-config", "payload": {"c": 5}})"));
    CHECK(cfg["c"] == 5);
    const std::string add =
        R"({"seq": 9, "type": "obstacle", "payload": {"id": "k", "op": "add", "shape_id": "s",
            "shape": {"box": {"lo": [1.8, 1.8, -0.1], "hi": [1.9, 1.9, 0.1]}}}})";
    CHECK(handle_client_message(loop, parse_client_message(add))["duplicate"] == false);
    CHECK(handle_client_message(loop, parse_client_message(add))["duplicate"] == true);
  }
}
