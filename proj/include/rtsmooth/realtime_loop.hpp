#pragma once

#include <cstdint>
#include <future>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "rtsmooth/batch_smoother.hpp"
#include "rtsmooth/scene.hpp"

namespace rtsmooth {

struct LoopConfig {
  double tick = 0.05;  // simulated seconds per tick
  std::uint64_t seed = 1;
  /// Plan and smooth on a worker thread; ticks hold position until the result lands.
  bool async = false;
};

enum class LoopStatus { executing, replanning, blocked, paused };

const char* to_string(LoopStatus s);

struct ObstacleCommand {
  enum class Kind { add, move, remove };
  std::string command_id;
  Kind kind = Kind::add;
  std::string shape_id;
  std::optional<Shape> shape;  // required for add and move
};

/// Throws InvalidArgument with the reason when the command is malformed.
ObstacleCommand obstacle_command_from_json(const nlohmann::json& j);

/// Server-side event; service_protocol wraps it into a sequenced wire message.
struct LoopEvent {
  std::string type;  // state | trajectory | occupancy | timing | error
  nlohmann::json payload;
};

struct CommandAck {
  bool accepted = false;
  bool duplicate = false;
  std::string reason;
};

/// Simulated robot looping between configurations A and B under changing occupancy.
///
/// All mutation happens inside tick(): queued obstacle commands are applied, the
/// occupancy refreshed, and the remaining trajectory re-verified; a collision
/// triggers plan + smooth from the current configuration, starting at rest.
class RealtimeLoop {
 public:
  RealtimeLoop(Scene scene, std::shared_ptr<const ClearanceProvider> clearance, LoopConfig cfg = {});
  ~RealtimeLoop();
  RealtimeLoop(const RealtimeLoop&) = delete;
  RealtimeLoop& operator=(const RealtimeLoop&) = delete;

  /// Occupancy at t = 0 and the first A -> B trajectory.
  std::vector<LoopEvent> start();
  std::vector<LoopEvent> tick();

  /// Queues the command for the next tick. Duplicate ids are acknowledged without effect.
  CommandAck apply_obstacle_command(const ObstacleCommand& cmd);
  void pause();
  void resume();
  /// Takes effect for the next smoothing call.
  void set_smoothing(std::optional<int> c, std::optional<double> threshold);

  double time() const { return time_; }
  LoopStatus status() const { return status_; }
  const std::string& target() const { return target_; }
  Configuration configuration() const;
  const ParabolicTrajectory& trajectory() const { return trajectory_; }
  double trajectory_clock() const { return clock_; }
  const OccupancyVector& occupancy() const { return occupancy_; }
  /// Occupancy under which the current trajectory was last verified.
  const OccupancyVector& verified_occupancy() const { return verified_occupancy_; }
  const Scene& scene() const { return scene_; }
  const SmoothingConfig& smoothing() const { return smoothing_; }
  int replans() const { return replans_; }

 private:
  struct PlanOutcome {
    std::optional<PiecewiseLinearPath> path;
    std::optional<SmoothResult> smoothed;
    OccupancyVector occupancy;
    double plan_ms = 0.0;
    double smooth_ms = 0.0;
    std::string error;
  };

  PlanOutcome plan_and_smooth(const Configuration& from, const std::string& target, const OccupancyVector& occ,
                              std::uint64_t seed, SmoothingConfig cfg) const;
  void request_plan(const std::string& reason, std::vector<LoopEvent>& events);
  void adopt(PlanOutcome outcome, const std::string& reason, std::vector<LoopEvent>& events);
  void apply_pending(std::vector<LoopEvent>& events);
  LoopEvent state_event() const;
  LoopEvent occupancy_event() const;
  void hold_at(const Configuration& q);

  Scene scene_;
  std::shared_ptr<const ClearanceProvider> clearance_;
  LoopConfig cfg_;
  SmoothingConfig smoothing_;
  OccupancyVector static_occ_;
  ObstacleOverrides overrides_;
  std::vector<ObstacleCommand> pending_;
  std::set<std::string> seen_commands_;

  double time_ = 0.0;
  double clock_ = 0.0;
  std::string target_ = "B";
  LoopStatus status_ = LoopStatus::executing;
  bool paused_ = false;
  ParabolicTrajectory trajectory_;
  OccupancyVector occupancy_;
  OccupancyVector verified_occupancy_;
  int replans_ = 0;
  std::uint64_t plan_counter_ = 0;
  std::string pending_reason_;
  std::future<PlanOutcome> worker_;
};

}  // namespace rtsmooth
