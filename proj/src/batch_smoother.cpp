#include "rtsmooth/batch_smoother.hpp"

#include <chrono>
#include <limits>
#include <queue>

#include <nlohmann/json.hpp>

namespace rtsmooth {

namespace {

using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point t0) {
  return std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
}

}  // namespace

void SmoothingConfig::validate() const {
  if (waypoints < 0) throw InvalidArgument("SmoothingConfig: waypoints (c) must be >= 0");
  if (!(sample_dt > 0.0)) throw InvalidArgument("SmoothingConfig: sample_dt must be > 0");
  if (!(check_dt > 0.0)) throw InvalidArgument("SmoothingConfig: check_dt must be > 0");
  if (!(clearance_threshold >= 0.0)) throw InvalidArgument("SmoothingConfig: threshold must be >= 0");
  if (max_dijkstra_retries < 0) throw InvalidArgument("SmoothingConfig: max_dijkstra_retries must be >= 0");
}

int CandidateSet::candidate_index(int i, int j) const {
  const int n = node_count();
  if (i < 0 || j <= i || j >= n) throw InvalidArgument("candidate_index: need 0 <= i < j <= c+1");
  // Rows 0..i-1 contribute (n-1) + (n-2) + ... + (n-i) candidates.
  return i * (2 * n - i - 1) / 2 + (j - i - 1);
}

std::vector<Configuration> sample_waypoints(const ParabolicTrajectory& path_trajectory, int c) {
  if (c < 0) throw InvalidArgument("sample_waypoints: c must be >= 0");
  if (path_trajectory.empty()) throw InvalidArgument("sample_waypoints: empty trajectory");
  const double T = path_trajectory.duration();
  std::vector<Configuration> out;
  out.reserve(static_cast<std::size_t>(c) + 2);
  out.push_back(path_trajectory.start());
  for (int k = 1; k <= c; ++k) out.push_back(path_trajectory.position(T * k / (c + 1)));
  out.push_back(path_trajectory.goal());
  return out;
}

CandidateSet enumerate_candidates(const RobotModel& model, const std::vector<Configuration>& waypoints) {
  if (waypoints.size() < 2) throw InvalidArgument("enumerate_candidates: need at least two waypoints");
  CandidateSet set;
  set.waypoints = waypoints;
  const int n = set.node_count();
  set.candidates.reserve(static_cast<std::size_t>(n * (n - 1) / 2));
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j)
      set.candidates.push_back({i, j, min_time_rest_to_rest(model, waypoints[static_cast<std::size_t>(i)],
                                                            waypoints[static_cast<std::size_t>(j)]),
                                0, 0});
  return set;
}

ConfigMatrix subsample_and_stack(CandidateSet& set, double dt) {
  if (!(dt > 0.0)) throw InvalidArgument("subsample_and_stack: dt must be > 0");
  std::vector<std::vector<double>> times;
  times.reserve(set.candidates.size());
  int total = 0;
  for (auto& cand : set.candidates) {
    times.push_back(sample_times(cand.duration(), dt));
    cand.first_row = total;
    cand.rows = static_cast<int>(times.back().size());
    total += cand.rows;
  }
  const auto n = set.waypoints.front().size();
  ConfigMatrix q(total, n);
  for (std::size_t c = 0; c < set.candidates.size(); ++c) {
    const auto& cand = set.candidates[c];
    int row = cand.first_row;
    for (double tau : times[c]) q.row(row++) = cand.trajectory.position(tau).transpose();
  }
  return q;
}

CollisionMatrix inferred_collision_matrix(const ClearanceMatrix& clearances, double threshold) {
  if (!(threshold >= 0.0)) throw InvalidArgument("inferred_collision_matrix: threshold must be >= 0");
  return clearances.array().cast<double>() < threshold;
}

std::vector<bool> row_collisions(const CollisionMatrix& collision, std::span<const std::uint8_t> occupied) {
  if (static_cast<std::size_t>(collision.cols()) != occupied.size())
    throw InvalidArgument("row_collisions: collision matrix has " + std::to_string(collision.cols()) +
                          " columns, occupancy has " + std::to_string(occupied.size()));
  std::vector<int> cols;
  for (std::size_t v = 0; v < occupied.size(); ++v)
    if (occupied[v]) cols.push_back(static_cast<int>(v));
  std::vector<bool> out(static_cast<std::size_t>(collision.rows()), false);
  for (Eigen::Index r = 0; r < collision.rows(); ++r) {
    for (int v : cols) {
      if (collision(r, v)) {
        out[static_cast<std::size_t>(r)] = true;
        break;
      }
    }
  }
  return out;
}

namespace {

std::vector<bool> fold_rows(const std::vector<bool>& rows, const CandidateSet& set) {
  std::vector<bool> status(set.candidates.size(), false);
  for (std::size_t c = 0; c < set.candidates.size(); ++c) {
    const auto& cand = set.candidates[c];
    if (cand.first_row < 0 || cand.first_row + cand.rows > static_cast<int>(rows.size()))
      throw InvalidArgument("candidate_status: candidate rows outside the collision matrix");
    for (int r = cand.first_row; r < cand.first_row + cand.rows; ++r) {
      if (rows[static_cast<std::size_t>(r)]) {
        status[c] = true;
        break;
      }
    }
  }
  return status;
}

}  // namespace

std::vector<bool> candidate_status(const CollisionMatrix& collision, const OccupancyVector& occupancy,
                                   const CandidateSet& set) {
  return fold_rows(row_collisions(collision, occupancy.raw()), set);
}

std::optional<std::vector<int>> shortest_free_composition(const CandidateSet& set, const std::vector<bool>& in_collision,
                                                          const std::set<Edge>& blocked) {
  if (in_collision.size() != set.candidates.size())
    throw InvalidArgument("shortest_free_composition: one status per candidate required");
  const int n = set.node_count();
  const int goal = n - 1;
  constexpr double inf = std::numeric_limits<double>::infinity();
  std::vector<double> dist(static_cast<std::size_t>(n), inf);
  std::vector<int> prev(static_cast<std::size_t>(n), -1);
  std::vector<bool> done(static_cast<std::size_t>(n), false);
  using Item = std::pair<double, int>;
  std::priority_queue<Item, std::vector<Item>, std::greater<>> open;
  dist[0] = 0.0;
  open.emplace(0.0, 0);
  while (!open.empty()) {
    const auto [d, u] = open.top();
    open.pop();
    if (done[static_cast<std::size_t>(u)]) continue;
    done[static_cast<std::size_t>(u)] = true;
    if (u == goal) break;
    for (int v = u + 1; v < n; ++v) {
      const int c = set.candidate_index(u, v);
      if (in_collision[static_cast<std::size_t>(c)] || blocked.contains({u, v})) continue;
      const double nd = d + set.candidates[static_cast<std::size_t>(c)].duration();
      if (nd < dist[static_cast<std::size_t>(v)]) {
        dist[static_cast<std::size_t>(v)] = nd;
        prev[static_cast<std::size_t>(v)] = u;
        open.emplace(nd, v);
      }
    }
  }
  if (dist[static_cast<std::size_t>(goal)] == inf) return std::nullopt;
  std::vector<int> seq{goal};
  while (seq.back() != 0) seq.push_back(prev[static_cast<std::size_t>(seq.back())]);
  std::reverse(seq.begin(), seq.end());
  return seq;
}

ParabolicTrajectory compose(const CandidateSet& set, const std::vector<int>& sequence) {
  ParabolicTrajectory traj;
  for (std::size_t k = 0; k + 1 < sequence.size(); ++k)
    traj.append(set.candidates[static_cast<std::size_t>(set.candidate_index(sequence[k], sequence[k + 1]))].trajectory);
  return traj;
}

nlohmann::json to_json(const SmoothReport& r) {
  return {{"method", r.method},
          {"unsmoothed_duration", r.unsmoothed_duration},
          {"smoothed_duration", r.smoothed_duration},
          {"ratio", r.ratio()},
          {"accepted_retry", r.accepted_retry},
          {"dijkstra_runs", r.dijkstra_runs},
          {"verified_retry", r.verified_retry},
          {"fallback", r.fallback},
          {"fallback_reason", r.fallback_reason},
          {"attempt_durations", r.attempt_durations},
          {"waypoint_sequence", r.waypoint_sequence},
          {"candidates", r.candidates},
          {"stacked_rows", r.stacked_rows},
          {"stacked_bytes", r.stacked_bytes},
          {"geometric_checks", r.geometric_checks},
          {"iterations", r.iterations},
          {"timing_ms", {{"inference", r.inference_ms}, {"geometric_check", r.check_ms}, {"other", r.other_ms()},
                         {"total", r.total_ms}}}};
}

SmoothResult smooth(const RobotModel& model, const VoxelGrid& grid, const OccupancyVector& occupancy,
                    const PiecewiseLinearPath& path, const ClearanceProvider& clearance, const SmoothingConfig& cfg) {
  const auto t_start = Clock::now();
  cfg.validate();
  if (path.empty()) throw InvalidArgument("smooth: empty path");
  if (occupancy.size() != grid.size()) throw InvalidArgument("smooth: occupancy size differs from V");
  if (clearance.voxels() != grid.size()) throw InvalidArgument("smooth: clearance provider bound to another grid");

  SmoothResult result;
  auto& rep = result.report;
  const CollisionChecker checker(model, grid, occupancy);
  const ParabolicTrajectory original = time_parameterize_path(model, path);
  rep.unsmoothed_duration = original.duration();

  auto finish = [&] {
    rep.smoothed_duration = result.trajectory.duration();
    rep.geometric_checks = static_cast<long>(checker.checks());
    rep.total_ms = ms_since(t_start);
    return result;
  };
  auto fall_back = [&](std::string reason) {
    rep.fallback = true;
    rep.accepted_retry = -1;
    rep.fallback_reason = std::move(reason);
    const auto t0 = Clock::now();
    const auto hit = checker.first_collision(original, cfg.check_dt);
    rep.check_ms += ms_since(t0);
    if (hit) {
      throw PathInCollision("smooth: original path collides at t = " + std::to_string(*hit) +
                            " s under the current occupancy");
    }
    result.trajectory = original;
    rep.waypoint_sequence.clear();
    return finish();
  };

  if (original.duration() == 0.0) return fall_back("zero-length path");

  CandidateSet set = enumerate_candidates(model, sample_waypoints(original, cfg.waypoints));
  rep.candidates = static_cast<int>(set.candidates.size());
  const ConfigMatrix stacked = subsample_and_stack(set, cfg.sample_dt);
  rep.stacked_rows = static_cast<long>(stacked.rows());

  const auto t_inf = Clock::now();
  std::vector<bool> rows;
  long columns = 0;
  if (cfg.occupied_columns_only) {
    const std::vector<int> occupied = occupancy.occupied_indices();
    columns = static_cast<long>(occupied.size());
    const ClearanceMatrix inferred = clearance.infer_columns(stacked, occupied);
    const CollisionMatrix collision = inferred_collision_matrix(inferred, cfg.clearance_threshold);
    const std::vector<std::uint8_t> all(occupied.size(), 1);
    rows = row_collisions(collision, all);
  } else {
    columns = grid.size();
    const ClearanceMatrix inferred = clearance.infer(stacked);
    const CollisionMatrix collision = inferred_collision_matrix(inferred, cfg.clearance_threshold);
    rows = row_collisions(collision, occupancy.raw());
  }
  const std::vector<bool> status = fold_rows(rows, set);
  rep.inference_ms = ms_since(t_inf);
  rep.stacked_bytes = rep.stacked_rows * (static_cast<long>(stacked.cols()) * static_cast<long>(sizeof(double)) +
                                          columns * static_cast<long>(sizeof(float) + sizeof(bool)));

  std::set<Edge> blocked;
  for (int run = 0; run <= cfg.max_dijkstra_retries; ++run) {
    const auto seq = shortest_free_composition(set, status, blocked);
    if (!seq) return fall_back("no inferred collision-free composition");
    ++rep.dijkstra_runs;
    ParabolicTrajectory candidate = compose(set, *seq);
    rep.attempt_durations.push_back(candidate.duration());

    const auto t_chk = Clock::now();
    const auto hit = checker.first_collision(candidate, cfg.check_dt);
    rep.check_ms += ms_since(t_chk);
    if (!hit) {
      rep.verified_retry = run;
      // Later runs only lose edges, so no later composition can be shorter either.
      if (candidate.duration() >= original.duration()) return fall_back("no composition shorter than the original path");
      rep.accepted_retry = run;
      rep.waypoint_sequence = *seq;
      result.trajectory = std::move(candidate);
      return finish();
    }
    const std::size_t k = candidate.segment_at(*hit);
    blocked.insert({(*seq)[k], (*seq)[k + 1]});
    // A hit exactly on a shared knot also implicates the segment that ends there.
    if (k > 0 && *hit == candidate.start_times()[k]) blocked.insert({(*seq)[k - 1], (*seq)[k]});
  }
  return fall_back("dijkstra retries exhausted");
}

}  // namespace rtsmooth
