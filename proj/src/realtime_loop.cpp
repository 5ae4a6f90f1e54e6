#include "rtsmooth/realtime_loop.hpp"

#include <chrono>

#include "rtsmooth/bench.hpp"
#include "rtsmooth/planner.hpp"

namespace rtsmooth {

namespace {

using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point t0) {
  return std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
}

nlohmann::json config_json(const Configuration& q) { return std::vector<double>(q.data(), q.data() + q.size()); }

}  // namespace

const char* to_string(LoopStatus s) {
  switch (s) {
    case LoopStatus::executing: return "executing";
    case LoopStatus::replanning: return "replanning";
    case LoopStatus::blocked: return "blocked";
    case LoopStatus::paused: return "paused";
  }
  return "unknown";
}

ObstacleCommand obstacle_command_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw InvalidArgument("obstacle command must be an object");
  ObstacleCommand cmd;
  if (!j.contains("id") || !j["id"].is_string() || j["id"].get<std::string>().empty())
    throw InvalidArgument("obstacle command needs a non-empty string 'id'");
  if (!j.contains("shape_id") || !j["shape_id"].is_string() || j["shape_id"].get<std::string>().empty())
    throw InvalidArgument("obstacle command needs a non-empty string 'shape_id'");
  cmd.command_id = j["id"].get<std::string>();
  cmd.shape_id = j["shape_id"].get<std::string>();
  const std::string op = j.value("op", "");
  if (op == "add") {
    cmd.kind = ObstacleCommand::Kind::add;
  } else if (op == "move") {
    cmd.kind = ObstacleCommand::Kind::move;
  } else if (op == "remove") {
    cmd.kind = ObstacleCommand::Kind::remove;
  } else {
    throw InvalidArgument("obstacle command 'op' must be add, move or remove");
  }
  if (cmd.kind != ObstacleCommand::Kind::remove) {
    if (!j.contains("shape")) throw InvalidArgument("obstacle " + op + " needs a 'shape'");
    try {
      cmd.shape = shape_from_json(j["shape"]);
    } catch (const nlohmann::json::exception& e) {
      throw InvalidArgument(std::string("obstacle shape: ") + e.what());
    }
    if (const auto* b = std::get_if<Box>(&*cmd.shape); b && !(b->lo.array() <= b->hi.array()).all())
      throw InvalidArgument("obstacle box needs lo <= hi");
    if (const auto* s = std::get_if<Sphere>(&*cmd.shape); s && !(s->radius > 0.0))
      throw InvalidArgument("obstacle sphere needs radius > 0");
  }
  return cmd;
}

RealtimeLoop::RealtimeLoop(Scene scene, std::shared_ptr<const ClearanceProvider> clearance, LoopConfig cfg)
    : scene_(std::move(scene)), clearance_(std::move(clearance)), cfg_(cfg), smoothing_(scene_.smoothing) {
  if (!clearance_) throw InvalidArgument("RealtimeLoop: clearance provider required");
  if (!(cfg_.tick > 0.0)) throw InvalidArgument("RealtimeLoop: tick must be > 0");
  scene_.validate();
  (void)scene_.config("A");
  (void)scene_.config("B");
  static_occ_ = scene_.static_occupancy();
  occupancy_ = step_obstacles(scene_, static_occ_, 0.0, overrides_);
  verified_occupancy_ = occupancy_;
  hold_at(scene_.config("A"));
}

RealtimeLoop::~RealtimeLoop() {
  if (worker_.valid()) worker_.wait();
}

Configuration RealtimeLoop::configuration() const { return trajectory_.position(std::min(clock_, trajectory_.duration())); }

void RealtimeLoop::hold_at(const Configuration& q) {
  trajectory_ = ParabolicTrajectory({min_time_rest_to_rest(scene_.robot, q, q)});
  clock_ = 0.0;
}

LoopEvent RealtimeLoop::state_event() const {
  return {"state",
          {{"time", time_},
           {"q", config_json(configuration())},
           {"trajectory_time", clock_},
           {"status", to_string(paused_ ? LoopStatus::paused : status_)},
           {"target", target_}}};
}

LoopEvent RealtimeLoop::occupancy_event() const {
  return {"occupancy", {{"time", time_}, {"voxels", occupancy_.size()}, {"occupied", occupancy_.occupied_indices()}}};
}

std::vector<LoopEvent> RealtimeLoop::start() {
  std::vector<LoopEvent> events;
  events.push_back(occupancy_event());
  request_plan("start", events);
  events.push_back(state_event());
  return events;
}

CommandAck RealtimeLoop::apply_obstacle_command(const ObstacleCommand& cmd) {
  if (!seen_commands_.insert(cmd.command_id).second) return {true, true, ""};
  pending_.push_back(cmd);
  return {true, false, ""};
}

void RealtimeLoop::pause() { paused_ = true; }
void RealtimeLoop::resume() { paused_ = false; }

void RealtimeLoop::set_smoothing(std::optional<int> c, std::optional<double> threshold) {
  SmoothingConfig next = smoothing_;
  if (c) next.waypoints = *c;
  if (threshold) next.clearance_threshold = *threshold;
  next.validate();
  smoothing_ = next;
}

void RealtimeLoop::apply_pending(std::vector<LoopEvent>& events) {
  auto exists = [&](const std::string& id) {
    if (const auto it = overrides_.find(id); it != overrides_.end()) return it->second.has_value();
    return std::any_of(scene_.dynamic.begin(), scene_.dynamic.end(), [&](const auto& d) { return d.id == id; });
  };
  auto is_static = [&](const std::string& id) {
    return std::any_of(scene_.static_shapes.begin(), scene_.static_shapes.end(), [&](const auto& s) { return s.id == id; });
  };
  for (const auto& cmd : pending_) {
    std::string error;
    if (is_static(cmd.shape_id)) {
      error = "shape '" + cmd.shape_id + "' is static";
    } else if (cmd.kind == ObstacleCommand::Kind::add) {
      if (exists(cmd.shape_id))
        error = "shape '" + cmd.shape_id + "' already exists";
      else
        overrides_[cmd.shape_id] = cmd.shape;
    } else if (!exists(cmd.shape_id)) {
      error = "unknown shape '" + cmd.shape_id + "'";
    } else if (cmd.kind == ObstacleCommand::Kind::move) {
      overrides_[cmd.shape_id] = cmd.shape;
    } else {
      overrides_[cmd.shape_id] = std::nullopt;
    }
    if (!error.empty()) events.push_back({"error", {{"command_id", cmd.command_id}, {"reason", error}}});
  }
  pending_.clear();
}

RealtimeLoop::PlanOutcome RealtimeLoop::plan_and_smooth(const Configuration& from, const std::string& target,
                                                        const OccupancyVector& occ, std::uint64_t seed,
                                                        SmoothingConfig cfg) const {
  PlanOutcome out;
  out.occupancy = occ;
  try {
    const auto t0 = Clock::now();
    out.path = plan(scene_, occ, from, scene_.config(target), seed);
    out.plan_ms = ms_since(t0);
    if (!out.path) {
      out.error = "planner found no path to " + target;
      return out;
    }
    const auto t1 = Clock::now();
    out.smoothed = smooth(scene_.robot, scene_.grid, occ, *out.path, *clearance_, cfg);
    out.smooth_ms = ms_since(t1);
  } catch (const std::exception& e) {
    out.error = e.what();
  }
  return out;
}

void RealtimeLoop::request_plan(const std::string& reason, std::vector<LoopEvent>& events) {
  hold_at(configuration());
  const std::uint64_t seed = mix_seed(cfg_.seed, plan_counter_++);
  if (cfg_.async) {
    status_ = LoopStatus::replanning;
    pending_reason_ = reason;
    worker_ = std::async(std::launch::async, [this, q = configuration(), target = target_, occ = occupancy_, seed,
                                              cfg = smoothing_] { return plan_and_smooth(q, target, occ, seed, cfg); });
    return;
  }
  adopt(plan_and_smooth(configuration(), target_, occupancy_, seed, smoothing_), reason, events);
}

void RealtimeLoop::adopt(PlanOutcome outcome, const std::string& reason, std::vector<LoopEvent>& events) {
  if (!outcome.error.empty()) {
    status_ = LoopStatus::blocked;
    events.push_back({"error", {{"reason", outcome.error}, {"time", time_}}});
    return;
  }
  ParabolicTrajectory traj = std::move(outcome.smoothed->trajectory);
  if (!(outcome.occupancy == occupancy_)) {
    // Occupancy moved while the worker ran: the result must verify against the current one.
    const CollisionChecker checker(scene_.robot, scene_.grid, occupancy_);
    if (checker.first_collision(traj, smoothing_.check_dt)) {
      request_plan(reason, events);
      return;
    }
  }
  const SmoothReport& rep = outcome.smoothed->report;
  trajectory_ = std::move(traj);
  clock_ = 0.0;
  verified_occupancy_ = occupancy_;
  status_ = LoopStatus::executing;
  if (reason != "start" && reason != "arrived") ++replans_;
  nlohmann::json path = nlohmann::json::array();
  for (const auto& q : *outcome.path) path.push_back(config_json(q));
  events.push_back({"trajectory",
                    {{"time", time_},
                     {"reason", reason},
                     {"target", target_},
                     {"path", path},
                     {"trajectory", to_json(trajectory_)},
                     {"report", to_json(rep)}}});
  events.push_back({"timing",
                    {{"time", time_},
                     {"plan_ms", outcome.plan_ms},
                     {"smooth_ms", outcome.smooth_ms},
                     {"inference_ms", rep.inference_ms},
                     {"check_ms", rep.check_ms}}});
}

std::vector<LoopEvent> RealtimeLoop::tick() {
  std::vector<LoopEvent> events;
  apply_pending(events);
  if (!paused_) {
    time_ += cfg_.tick;
    if (status_ == LoopStatus::executing) clock_ = std::min(clock_ + cfg_.tick, trajectory_.duration());
  }
  const OccupancyVector next = step_obstacles(scene_, static_occ_, time_, overrides_);
  const bool changed = !(next == occupancy_);
  if (changed) {
    occupancy_ = next;
    events.push_back(occupancy_event());
  }

  if (worker_.valid()) {
    if (worker_.wait_for(std::chrono::seconds(0)) == std::future_status::ready) adopt(worker_.get(), pending_reason_, events);
  } else if (status_ == LoopStatus::blocked) {
    if (!paused_) request_plan("blocked", events);
  } else if (status_ == LoopStatus::executing) {
    const CollisionChecker checker(scene_.robot, scene_.grid, occupancy_);
    if (changed && checker.first_collision_after(trajectory_, clock_, smoothing_.check_dt)) {
      request_plan("obstacle", events);
    } else if (changed) {
      verified_occupancy_ = occupancy_;
    }
    if (!paused_ && status_ == LoopStatus::executing && clock_ >= trajectory_.duration() &&
        (configuration() - scene_.config(target_)).norm() < 1e-9) {
      target_ = target_ == "A" ? "B" : "A";
      request_plan("arrived", events);
    }
  }
  events.push_back(state_event());
  return events;
}

}  // namespace rtsmooth
