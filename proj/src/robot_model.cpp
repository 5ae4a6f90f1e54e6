#include "rtsmooth/robot_model.hpp"

#include <cmath>
#include <limits>
#include <numbers>

namespace rtsmooth {

namespace {

void require(bool cond, const char* what) {
  if (!cond) throw InvalidArgument(std::string("RobotModel: ") + what);
}

void check_dof(const RobotModel& model, const Configuration& q) {
  if (q.size() != model.dof()) {
    throw InvalidArgument("configuration has " + std::to_string(q.size()) +
                          " joints, model has " + std::to_string(model.dof()));
  }
}

}  // namespace

void RobotModel::validate() const {
  const auto n = static_cast<std::size_t>(dof());
  require(n >= 1, "at least one joint required");
  require(workspace_dim == 2 || workspace_dim == 3, "workspace_dim must be 2 or 3");
  require(link_radii.size() == n && joint_axes.size() == n && link_directions.size() == n,
          "per-link arrays must match dof");
  require(joint_lower.size() == dof() && joint_upper.size() == dof() && vel_max.size() == dof() &&
              acc_max.size() == dof(),
          "per-joint limit vectors must match dof");
  for (std::size_t k = 0; k < n; ++k) {
    require(link_lengths[k] > 0.0 && std::isfinite(link_lengths[k]), "link lengths must be > 0");
    require(link_radii[k] > 0.0 && std::isfinite(link_radii[k]), "link radii must be > 0");
    require(std::abs(joint_axes[k].norm() - 1.0) < 1e-9, "joint axes must be unit vectors");
    require(std::abs(link_directions[k].norm() - 1.0) < 1e-9, "link directions must be unit vectors");
    if (workspace_dim == 2) {
      require(std::abs(std::abs(joint_axes[k].z()) - 1.0) < 1e-12, "planar joint axes must be +-z");
      require(link_directions[k].z() == 0.0, "planar link directions must lie in the xy-plane");
    }
  }
  require((joint_lower.array() < joint_upper.array()).all(), "joint_lower < joint_upper required");
  require((vel_max.array() > 0.0).all(), "vel_max must be > 0");
  require((acc_max.array() > 0.0).all(), "acc_max must be > 0");
  if (workspace_dim == 2) {
    require(base_pose.translation().z() == 0.0, "planar base must sit at z = 0");
  }
}

std::uint64_t RobotModel::signature() const {
  Fnv1a h;
  h.add(std::int64_t{workspace_dim}).add(std::int64_t{dof()});
  for (int k = 0; k < dof(); ++k) {
    const auto i = static_cast<std::size_t>(k);
    h.add(link_lengths[i]).add(link_radii[i]);
    for (int c = 0; c < 3; ++c) h.add(joint_axes[i][c]).add(link_directions[i][c]);
    h.add(joint_lower[k]).add(joint_upper[k]);
  }
  for (int r = 0; r < 4; ++r)
    for (int c = 0; c < 4; ++c) h.add(base_pose.matrix()(r, c));
  return h.value();
}

bool RobotModel::within_limits(const Configuration& q, double tol) const {
  check_dof(*this, q);
  return (q.array() >= joint_lower.array() - tol).all() && (q.array() <= joint_upper.array() + tol).all();
}

RobotModel RobotModel::planar(std::vector<double> lengths, std::vector<double> radii, VecX lower,
                              VecX upper, VecX vel, VecX acc, Vec3 base_position) {
  RobotModel m;
  m.workspace_dim = 2;
  const std::size_t n = lengths.size();
  m.link_lengths = std::move(lengths);
  m.link_radii = std::move(radii);
  m.joint_axes.assign(n, Vec3::UnitZ());
  m.link_directions.assign(n, Vec3::UnitX());
  m.joint_lower = std::move(lower);
  m.joint_upper = std::move(upper);
  m.vel_max = std::move(vel);
  m.acc_max = std::move(acc);
  m.base_pose = Eigen::Isometry3d::Identity();
  m.base_pose.translation() = base_position;
  m.validate();
  return m;
}

RobotModel RobotModel::desk_planar() {
  constexpr double pi = std::numbers::pi;
  return planar({0.40, 0.30, 0.25}, {0.07, 0.06, 0.05}, VecX{{-pi, -2.6, -2.6}},
                VecX{{pi, 2.6, 2.6}}, VecX{{1.0, 1.2, 1.5}}, VecX{{2.0, 2.5, 3.0}},
                Vec3(1.0, 1.0, 0.0));
}

RobotModel RobotModel::desk_spatial() {
  constexpr double pi = std::numbers::pi;
  RobotModel m;
  m.workspace_dim = 3;
  m.link_lengths = {0.30, 0.35, 0.25, 0.10, 0.08, 0.06};
  m.link_radii = {0.08, 0.07, 0.06, 0.05, 0.045, 0.04};
  m.joint_axes = {Vec3::UnitZ(), Vec3::UnitY(), Vec3::UnitY(), Vec3::UnitX(), Vec3::UnitY(), Vec3::UnitX()};
  m.link_directions = {Vec3::UnitZ(), Vec3::UnitX(), Vec3::UnitX(), Vec3::UnitX(), Vec3::UnitX(), Vec3::UnitX()};
  m.joint_lower = VecX{{-pi, -2.0, -2.5, -pi, -2.0, -pi}};
  m.joint_upper = VecX{{pi, 2.0, 2.5, pi, 2.0, pi}};
  m.vel_max = VecX{{1.0, 1.0, 1.2, 1.5, 1.5, 2.0}};
  m.acc_max = VecX{{2.0, 2.0, 2.5, 3.0, 3.0, 4.0}};
  m.base_pose.translation() = Vec3(0.75, 0.75, 0.0);
  m.validate();
  return m;
}

CapsuleChain forward_kinematics(const RobotModel& model, const Configuration& q) {
  check_dof(model, q);
  CapsuleChain chain;
  chain.reserve(static_cast<std::size_t>(model.dof()));
  Eigen::Isometry3d frame = model.base_pose;
  for (int k = 0; k < model.dof(); ++k) {
    const auto i = static_cast<std::size_t>(k);
    frame.rotate(Eigen::AngleAxisd(q[k], model.joint_axes[i]));
    const Vec3 start = frame.translation();
    frame.translate(model.link_directions[i] * model.link_lengths[i]);
    // Chain continuity is exact: each segment starts at the previous end point.
    Vec3 a = chain.empty() ? start : chain.back().b;
    Vec3 b = frame.translation();
    if (model.workspace_dim == 2) b.z() = 0.0;
    chain.push_back(Capsule{a, b, model.link_radii[i]});
  }
  return chain;
}

double surface_signed_distance(const CapsuleChain& chain, const Vec3& p) {
  double best = std::numeric_limits<double>::infinity();
  for (const auto& c : chain) best = std::min(best, point_segment_distance(p, c.a, c.b) - c.radius);
  return best;
}

double surface_signed_distance(const RobotModel& model, const Configuration& q, const Vec3& p) {
  return surface_signed_distance(forward_kinematics(model, q), p);
}

Configuration random_configuration(const RobotModel& model, std::mt19937_64& rng) {
  Configuration q(model.dof());
  for (int k = 0; k < model.dof(); ++k) {
    const double u = std::generate_canonical<double, 53>(rng);
    q[k] = model.joint_lower[k] + u * (model.joint_upper[k] - model.joint_lower[k]);
  }
  return q;
}

}  // namespace rtsmooth
