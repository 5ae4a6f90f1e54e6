#include "rtsmooth/scene.hpp"

#include <filesystem>
#include <fstream>

#include <nlohmann/json.hpp>

#include "rtsmooth/clearance_oracle.hpp"

namespace rtsmooth {

namespace {

using nlohmann::json;

Vec3 vec3_from(const json& j, const char* what) {
  if (!j.is_array() || j.size() < 2 || j.size() > 3)
    throw InvalidArgument(std::string(what) + ": expected [x, y] or [x, y, z]");
  return {j[0].get<double>(), j[1].get<double>(), j.size() == 3 ? j[2].get<double>() : 0.0};
}

json vec3_to(const Vec3& v) { return json::array({v.x(), v.y(), v.z()}); }

Configuration config_from(const json& j) {
  if (!j.is_array()) throw InvalidArgument("configuration must be an array of joint values");
  Configuration q(static_cast<Eigen::Index>(j.size()));
  for (std::size_t k = 0; k < j.size(); ++k) q[static_cast<Eigen::Index>(k)] = j[k].get<double>();
  return q;
}

json config_to(const Configuration& q) { return std::vector<double>(q.data(), q.data() + q.size()); }

Shape translated(const Shape& s, const Vec3& offset) {
  return std::visit(
      [&](const auto& shape) -> Shape {
        using T = std::decay_t<decltype(shape)>;
        if constexpr (std::is_same_v<T, Box>) {
          return Box{shape.lo + offset, shape.hi + offset};
        } else {
          return Sphere{shape.center + offset, shape.radius};
        }
      },
      s);
}

void validate_shape(const Shape& s, const std::string& id) {
  if (const auto* b = std::get_if<Box>(&s)) {
    if (!(b->lo.array() <= b->hi.array()).all()) throw InvalidArgument("shape '" + id + "': box lo must be <= hi");
  } else if (!(std::get<Sphere>(s).radius > 0.0)) {
    throw InvalidArgument("shape '" + id + "': sphere radius must be > 0");
  }
}

}  // namespace

Shape DynamicObstacle::at(double t) const {
  if (script.empty()) return shape;
  if (period > 0.0) t = std::fmod(std::max(0.0, t), period);
  if (t <= script.front().t) return translated(shape, script.front().offset);
  for (std::size_t k = 1; k < script.size(); ++k) {
    if (t <= script[k].t) {
      const auto& a = script[k - 1];
      const auto& b = script[k];
      const double s = b.t > a.t ? (t - a.t) / (b.t - a.t) : 1.0;
      return translated(shape, a.offset + s * (b.offset - a.offset));
    }
  }
  return translated(shape, script.back().offset);
}

void PlannerConfig::validate() const {
  if (!(resolution > 0.0)) throw InvalidArgument("planner: resolution must be > 0");
  if (!(check_dt > 0.0)) throw InvalidArgument("planner: check_dt must be > 0");
  if (!(step > 0.0)) throw InvalidArgument("planner: step must be > 0");
  if (!(goal_bias >= 0.0 && goal_bias <= 1.0)) throw InvalidArgument("planner: goal_bias must be in [0, 1]");
  if (max_samples < 1) throw InvalidArgument("planner: max_samples must be >= 1");
  if (!(margin >= 0.0)) throw InvalidArgument("planner: margin must be >= 0");
}

const Configuration& Scene::config(const std::string& key) const {
  const auto it = configs.find(key);
  if (it == configs.end()) throw InvalidArgument("scene '" + name + "': no configuration named '" + key + "'");
  return it->second;
}

OccupancyVector Scene::static_occupancy() const {
  std::vector<Shape> shapes;
  for (const auto& s : static_shapes) shapes.push_back(s.shape);
  OccupancyVector occ = occupancy_from_shapes(grid, shapes);
  for (const auto& pc : point_clouds) occ = occ | occupancy_from_points(grid, load_point_cloud(pc.path), pc.count_threshold);
  return occ;
}

void Scene::validate() const {
  robot.validate();
  smoothing.validate();
  planner.validate();
  if (robot.workspace_dim != grid.dim())
    throw InvalidArgument("scene '" + name + "': robot workspace and grid dimension differ");
  for (const auto& s : static_shapes) validate_shape(s.shape, s.id);
  for (const auto& d : dynamic) {
    validate_shape(d.shape, d.id);
    for (std::size_t k = 1; k < d.script.size(); ++k)
      if (d.script[k].t < d.script[k - 1].t)
        throw InvalidArgument("dynamic obstacle '" + d.id + "': keyframe times must be non-decreasing");
    if (d.period < 0.0) throw InvalidArgument("dynamic obstacle '" + d.id + "': period must be >= 0");
  }
  for (const auto& pc : point_clouds)
    if (pc.count_threshold < 1) throw InvalidArgument("point cloud '" + pc.path + "': threshold must be >= 1");
  const OccupancyVector occ = static_occupancy();
  const CollisionChecker checker(robot, grid, occ);
  for (const auto& [key, q] : configs) {
    if (q.size() != robot.dof())
      throw InvalidArgument("scene '" + name + "': configuration '" + key + "' has wrong joint count");
    if (!robot.within_limits(q)) throw InvalidArgument("scene '" + name + "': configuration '" + key + "' violates joint limits");
    if (checker.in_collision(q))
      throw InvalidArgument("scene '" + name + "': configuration '" + key + "' collides with static obstacles");
  }
  for (const auto& [a, b] : queries) {
    (void)config(a);
    (void)config(b);
  }
}

RobotModel robot_from_json(const json& j) {
  if (j.contains("profile")) {
    const auto profile = j.at("profile").get<std::string>();
    if (profile == "desk_planar") return RobotModel::desk_planar();
    if (profile == "desk_spatial") return RobotModel::desk_spatial();
    throw InvalidArgument("unknown robot profile '" + profile + "'");
  }
  RobotModel m;
  m.workspace_dim = j.value("workspace_dim", 2);
  const auto& links = j.at("links");
  const auto n = static_cast<Eigen::Index>(links.size());
  m.joint_lower.resize(n);
  m.joint_upper.resize(n);
  m.vel_max.resize(n);
  m.acc_max.resize(n);
  for (Eigen::Index k = 0; k < n; ++k) {
    const auto& l = links[static_cast<std::size_t>(k)];
    m.link_lengths.push_back(l.at("length").get<double>());
    m.link_radii.push_back(l.at("radius").get<double>());
    m.joint_axes.push_back(l.contains("axis") ? vec3_from(l["axis"], "axis") : Vec3::UnitZ());
    m.link_directions.push_back(l.contains("direction") ? vec3_from(l["direction"], "direction") : Vec3::UnitX());
    m.joint_lower[k] = l.at("lower").get<double>();
    m.joint_upper[k] = l.at("upper").get<double>();
    m.vel_max[k] = l.at("vel").get<double>();
    m.acc_max[k] = l.at("acc").get<double>();
  }
  if (j.contains("base")) m.base_pose.translation() = vec3_from(j["base"], "base");
  if (j.contains("base_rotation")) {
    const auto& r = j["base_rotation"];
    m.base_pose.linear() =
        Eigen::Quaterniond(r.at(0).get<double>(), r.at(1).get<double>(), r.at(2).get<double>(), r.at(3).get<double>())
            .normalized()
            .toRotationMatrix();
  }
  m.validate();
  return m;
}

json to_json(const RobotModel& m) {
  json links = json::array();
  for (int k = 0; k < m.dof(); ++k) {
    const auto i = static_cast<std::size_t>(k);
    links.push_back({{"length", m.link_lengths[i]},
                     {"radius", m.link_radii[i]},
                     {"axis", vec3_to(m.joint_axes[i])},
                     {"direction", vec3_to(m.link_directions[i])},
                     {"lower", m.joint_lower[k]},
                     {"upper", m.joint_upper[k]},
                     {"vel", m.vel_max[k]},
                     {"acc", m.acc_max[k]}});
  }
  const Eigen::Quaterniond rot(m.base_pose.linear());
  return {{"workspace_dim", m.workspace_dim},
          {"links", links},
          {"base", vec3_to(m.base_pose.translation())},
          {"base_rotation", {rot.w(), rot.x(), rot.y(), rot.z()}}};
}

VoxelGrid grid_from_json(const json& j) {
  if (j.contains("profile")) {
    const auto profile = j.at("profile").get<std::string>();
    if (profile == "desk_planar") return VoxelGrid::desk_planar();
    if (profile == "desk_spatial") return VoxelGrid::desk_spatial();
    throw InvalidArgument("unknown grid profile '" + profile + "'");
  }
  const auto dims = j.at("dims").get<std::vector<int>>();
  if (dims.size() < 2 || dims.size() > 3) throw InvalidArgument("grid dims must have 2 or 3 entries");
  return VoxelGrid(j.at("dim").get<int>(), vec3_from(j.at("origin"), "origin"), j.at("edge").get<double>(),
                   {dims[0], dims[1], dims.size() == 3 ? dims[2] : 1});
}

json to_json(const VoxelGrid& g) {
  return {{"dim", g.dim()},
          {"origin", vec3_to(g.origin())},
          {"edge", g.edge()},
          {"dims", {g.dims()[0], g.dims()[1], g.dims()[2]}}};
}

Shape shape_from_json(const json& j) {
  if (j.contains("box")) {
    const auto& b = j["box"];
    return Box{vec3_from(b.at("lo"), "box.lo"), vec3_from(b.at("hi"), "box.hi")};
  }
  if (j.contains("sphere")) {
    const auto& s = j["sphere"];
    return Sphere{vec3_from(s.at("center"), "sphere.center"), s.at("radius").get<double>()};
  }
  throw InvalidArgument("shape needs a 'box' or 'sphere' member");
}

json to_json(const Shape& shape) {
  if (const auto* b = std::get_if<Box>(&shape)) return {{"box", {{"lo", vec3_to(b->lo)}, {"hi", vec3_to(b->hi)}}}};
  const auto& s = std::get<Sphere>(shape);
  return {{"sphere", {{"center", vec3_to(s.center)}, {"radius", s.radius}}}};
}

Scene scene_from_json(const json& j, const std::string& base_dir) {
  try {
    Scene s;
    s.name = j.value("name", "scene");
    s.robot = robot_from_json(j.at("robot"));
    s.grid = grid_from_json(j.at("grid"));
    auto resolve = [&](const std::string& p) {
      const std::filesystem::path path(p);
      return path.is_absolute() ? p : (std::filesystem::path(base_dir) / path).string();
    };
    for (const auto& e : j.value("static", json::array()))
      s.static_shapes.push_back({e.value("id", "static" + std::to_string(s.static_shapes.size())), shape_from_json(e)});
    for (const auto& e : j.value("point_clouds", json::array()))
      s.point_clouds.push_back({resolve(e.at("path").get<std::string>()), e.value("threshold", 50)});
    for (const auto& e : j.value("dynamic", json::array())) {
      DynamicObstacle d;
      d.id = e.at("id").get<std::string>();
      d.shape = shape_from_json(e);
      d.period = e.value("period", 0.0);
      for (const auto& k : e.value("script", json::array()))
        d.script.push_back({k.at("t").get<double>(), vec3_from(k.at("offset"), "offset")});
      s.dynamic.push_back(std::move(d));
    }
    const json configs = j.value("configs", json::object());
    for (const auto& [key, q] : configs.items()) s.configs[key] = config_from(q);
    for (const auto& q : j.value("queries", json::array()))
      s.queries.emplace_back(q.at(0).get<std::string>(), q.at(1).get<std::string>());
    if (j.contains("smoothing")) {
      const auto& c = j["smoothing"];
      s.smoothing.waypoints = c.value("c", s.smoothing.waypoints);
      s.smoothing.sample_dt = c.value("sample_dt", s.smoothing.sample_dt);
      s.smoothing.clearance_threshold = c.value("threshold", s.smoothing.clearance_threshold);
      s.smoothing.max_dijkstra_retries = c.value("max_dijkstra_retries", s.smoothing.max_dijkstra_retries);
      s.smoothing.check_dt = c.value("check_dt", s.smoothing.check_dt);
    }
    if (j.contains("planner")) {
      const auto& p = j["planner"];
      s.planner.resolution = p.value("resolution", s.planner.resolution);
      s.planner.check_dt = p.value("check_dt", s.planner.check_dt);
      s.planner.step = p.value("step", s.planner.step);
      s.planner.goal_bias = p.value("goal_bias", s.planner.goal_bias);
      s.planner.max_samples = p.value("max_samples", s.planner.max_samples);
      s.planner.margin = p.value("margin", s.planner.margin);
    }
    if (j.contains("weights")) s.weights = resolve(j["weights"].get<std::string>());
    return s;
  } catch (const json::exception& e) {
    throw InvalidArgument(std::string("scene document: ") + e.what());
  }
}

json to_json(const Scene& s) {
  json statics = json::array();
  for (const auto& e : s.static_shapes) {
    json o = to_json(e.shape);
    o["id"] = e.id;
    statics.push_back(o);
  }
  json clouds = json::array();
  for (const auto& pc : s.point_clouds) clouds.push_back({{"path", pc.path}, {"threshold", pc.count_threshold}});
  json dyn = json::array();
  for (const auto& d : s.dynamic) {
    json o = to_json(d.shape);
    o["id"] = d.id;
    o["period"] = d.period;
    o["script"] = json::array();
    for (const auto& k : d.script) o["script"].push_back({{"t", k.t}, {"offset", vec3_to(k.offset)}});
    dyn.push_back(o);
  }
  json configs = json::object();
  for (const auto& [key, q] : s.configs) configs[key] = config_to(q);
  json queries = json::array();
  for (const auto& [a, b] : s.queries) queries.push_back({a, b});
  json out = {{"name", s.name},
              {"robot", to_json(s.robot)},
              {"grid", to_json(s.grid)},
              {"static", statics},
              {"point_clouds", clouds},
              {"dynamic", dyn},
              {"configs", configs},
              {"queries", queries},
              {"smoothing",
               {{"c", s.smoothing.waypoints},
                {"sample_dt", s.smoothing.sample_dt},
                {"threshold", s.smoothing.clearance_threshold},
                {"max_dijkstra_retries", s.smoothing.max_dijkstra_retries},
                {"check_dt", s.smoothing.check_dt}}},
              {"planner",
               {{"resolution", s.planner.resolution},
                {"check_dt", s.planner.check_dt},
                {"step", s.planner.step},
                {"goal_bias", s.planner.goal_bias},
                {"max_samples", s.planner.max_samples},
                {"margin", s.planner.margin}}}};
  if (!s.weights.empty()) out["weights"] = s.weights;
  return out;
}

Scene load_scene(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InvalidArgument("cannot open scene file '" + path + "'");
  json j;
  try {
    in >> j;
  } catch (const json::parse_error& e) {
    throw InvalidArgument("scene file '" + path + "': " + e.what());
  }
  return scene_from_json(j, std::filesystem::path(path).parent_path().string());
}

OccupancyVector step_obstacles(const Scene& scene, const OccupancyVector& static_occ, double t,
                               const ObstacleOverrides& overrides) {
  if (t < 0.0) throw InvalidArgument("step_obstacles: t must be >= 0");
  if (static_occ.size() != scene.grid.size()) throw InvalidArgument("step_obstacles: static occupancy size differs from V");
  std::vector<Shape> shapes;
  for (const auto& d : scene.dynamic)
    if (!overrides.contains(d.id)) shapes.push_back(d.at(t));
  for (const auto& [id, shape] : overrides)
    if (shape) shapes.push_back(*shape);
  if (shapes.empty()) return static_occ;
  return static_occ | occupancy_from_shapes(scene.grid, shapes);
}

OccupancyVector step_obstacles(const Scene& scene, double t, const ObstacleOverrides& overrides) {
  return step_obstacles(scene, scene.static_occupancy(), t, overrides);
}

}  // namespace rtsmooth
