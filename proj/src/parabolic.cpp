#include "rtsmooth/parabolic.hpp"

#include <algorithm>
#include <cmath>

#include <nlohmann/json.hpp>

namespace rtsmooth {

double min_joint_time(double d, double vmax, double amax) {
  d = std::abs(d);
  if (d == 0.0) return 0.0;
  if (d <= vmax * vmax / amax) return 2.0 * std::sqrt(d / amax);
  return d / vmax + vmax / amax;
}

namespace {

// Profile covering |d| in exactly T >= min_joint_time with full acceleration and
// a lowered peak velocity: d = vp * (T - vp / a).
JointProfile retimed_profile(double d, double T, double vmax, double amax) {
  JointProfile p;
  if (d == 0.0 || T <= 0.0) return p;
  const double ad = std::abs(d);
  const double disc = std::max(0.0, T * T - 4.0 * ad / amax);
  double vp = 2.0 * ad / (T + std::sqrt(disc));
  vp = std::min(vp, vmax);
  const double sign = d > 0.0 ? 1.0 : -1.0;
  p.accel = sign * amax;
  p.accel_time = std::min(vp / amax, 0.5 * T);
  p.peak_velocity = sign * vp;
  return p;
}

}  // namespace

Configuration ParabolicSegment::position(double tau) const {
  Configuration q(start.size());
  for (Eigen::Index k = 0; k < start.size(); ++k) {
    const auto& p = joints[static_cast<std::size_t>(k)];
    if (p.accel == 0.0) {
      q[k] = start[k];
      continue;
    }
    const double ta = p.accel_time;
    if (tau <= ta) {
      q[k] = start[k] + 0.5 * p.accel * tau * tau;
    } else if (tau < duration - ta) {
      q[k] = start[k] + 0.5 * p.accel * ta * ta + p.peak_velocity * (tau - ta);
    } else {
      const double r = std::max(0.0, duration - tau);
      q[k] = end[k] - 0.5 * p.accel * r * r;
    }
  }
  return q;
}

VecX ParabolicSegment::velocity(double tau) const {
  VecX v(start.size());
  for (Eigen::Index k = 0; k < start.size(); ++k) {
    const auto& p = joints[static_cast<std::size_t>(k)];
    const double ta = p.accel_time;
    if (p.accel == 0.0) {
      v[k] = 0.0;
    } else if (tau <= ta) {
      v[k] = p.accel * tau;
    } else if (tau < duration - ta) {
      v[k] = p.peak_velocity;
    } else {
      v[k] = p.accel * std::max(0.0, duration - tau);
    }
  }
  return v;
}

ParabolicSegment min_time_rest_to_rest(const RobotModel& model, const Configuration& q0, const Configuration& q1) {
  if (q0.size() != model.dof() || q1.size() != model.dof())
    throw InvalidArgument("min_time_rest_to_rest: configuration size does not match model dof");
  ParabolicSegment seg;
  seg.start = q0;
  seg.end = q1;
  double T = 0.0;
  for (int k = 0; k < model.dof(); ++k)
    T = std::max(T, min_joint_time(q1[k] - q0[k], model.vel_max[k], model.acc_max[k]));
  seg.duration = T;
  seg.joints.resize(static_cast<std::size_t>(model.dof()));
  for (int k = 0; k < model.dof(); ++k)
    seg.joints[static_cast<std::size_t>(k)] = retimed_profile(q1[k] - q0[k], T, model.vel_max[k], model.acc_max[k]);
  return seg;
}

ParabolicTrajectory::ParabolicTrajectory(std::vector<ParabolicSegment> segments) {
  for (auto& s : segments) append(std::move(s));
}

void ParabolicTrajectory::append(ParabolicSegment seg) {
  if (!segments_.empty() && seg.start.size() != segments_.front().start.size())
    throw InvalidArgument("ParabolicTrajectory: segment dof mismatch");
  start_times_.push_back(duration_);
  duration_ += seg.duration;
  segments_.push_back(std::move(seg));
}

int ParabolicTrajectory::dof() const { return segments_.empty() ? 0 : static_cast<int>(segments_.front().start.size()); }

std::size_t ParabolicTrajectory::segment_at(double t) const {
  auto it = std::upper_bound(start_times_.begin(), start_times_.end(), t);
  std::size_t idx = it == start_times_.begin() ? 0 : static_cast<std::size_t>(it - start_times_.begin()) - 1;
  return std::min(idx, segments_.size() - 1);
}

TrajectoryState ParabolicTrajectory::evaluate(double t) const {
  if (segments_.empty()) throw InvalidArgument("evaluate: empty trajectory");
  if (!(t >= 0.0) || t > duration_) throw InvalidArgument("evaluate: time outside [0, duration]");
  const std::size_t i = segment_at(t);
  const auto& seg = segments_[i];
  const double tau = std::min(t - start_times_[i], seg.duration);
  return {seg.position(tau), seg.velocity(tau)};
}

std::vector<double> sample_times(double duration, double dt) {
  if (!(dt > 0.0)) throw InvalidArgument("sample_times: dt must be > 0");
  const auto m = static_cast<std::size_t>(std::ceil(duration / dt)) + 1;
  std::vector<double> ts;
  ts.reserve(std::max<std::size_t>(m, 2));
  for (std::size_t k = 0; k + 1 < m; ++k) ts.push_back(static_cast<double>(k) * dt);
  ts.push_back(duration);
  if (ts.size() < 2) ts.insert(ts.begin(), 0.0);
  return ts;
}

ParabolicTrajectory time_parameterize_path(const RobotModel& model, const PiecewiseLinearPath& path) {
  if (path.empty()) throw InvalidArgument("time_parameterize_path: empty path");
  ParabolicTrajectory traj;
  if (path.size() == 1) {
    traj.append(min_time_rest_to_rest(model, path.front(), path.front()));
    return traj;
  }
  for (std::size_t i = 0; i + 1 < path.size(); ++i) traj.append(min_time_rest_to_rest(model, path[i], path[i + 1]));
  return traj;
}

namespace {
std::vector<double> to_vec(const VecX& v) { return {v.data(), v.data() + v.size()}; }
VecX from_vec(const std::vector<double>& v) { return Eigen::Map<const VecX>(v.data(), static_cast<Eigen::Index>(v.size())); }
}  // namespace

nlohmann::json to_json(const ParabolicTrajectory& traj) {
  nlohmann::json segs = nlohmann::json::array();
  for (const auto& s : traj.segments()) {
    nlohmann::json joints = nlohmann::json::array();
    for (const auto& p : s.joints)
      joints.push_back({{"accel", p.accel}, {"accel_time", p.accel_time}, {"peak_velocity", p.peak_velocity}});
    segs.push_back({{"start", to_vec(s.start)}, {"end", to_vec(s.end)}, {"duration", s.duration}, {"joints", joints}});
  }
  return {{"duration", traj.duration()}, {"segments", segs}};
}

ParabolicTrajectory trajectory_from_json(const nlohmann::json& j) {
  ParabolicTrajectory traj;
  for (const auto& s : j.at("segments")) {
    ParabolicSegment seg;
    seg.start = from_vec(s.at("start").get<std::vector<double>>());
    seg.end = from_vec(s.at("end").get<std::vector<double>>());
    seg.duration = s.at("duration").get<double>();
    for (const auto& p : s.at("joints"))
      seg.joints.push_back({p.at("accel").get<double>(), p.at("accel_time").get<double>(), p.at("peak_velocity").get<double>()});
    if (seg.joints.size() != static_cast<std::size_t>(seg.start.size()) || seg.end.size() != seg.start.size())
      throw FormatError("trajectory json: joint count mismatch");
    traj.append(std::move(seg));
  }
  return traj;
}

}  // namespace rtsmooth
