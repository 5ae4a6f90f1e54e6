#include <pybind11/eigen.h>
#include <pybind11/functional.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <nlohmann/json.hpp>

#include "rtsmooth/baseline_smoother.hpp"
#include "rtsmooth/batch_smoother.hpp"
#include "rtsmooth/cfn.hpp"
#include "rtsmooth/planner.hpp"
#include "rtsmooth/scene.hpp"

namespace py = pybind11;
using namespace rtsmooth;

namespace {

// JSON crosses the boundary as text; the Python side parses it with the json module.
py::object to_py(const nlohmann::json& j) { return py::module_::import("json").attr("loads")(j.dump()); }

OccupancyVector occupancy_from_array(py::array_t<bool, py::array::c_style | py::array::forcecast> a) {
  OccupancyVector occ(static_cast<int>(a.size()));
  const bool* p = a.data();
  for (py::ssize_t i = 0; i < a.size(); ++i)
    if (p[i]) occ.set(static_cast<int>(i));
  return occ;
}

py::array_t<bool> occupancy_to_array(const OccupancyVector& occ) {
  py::array_t<bool> a(occ.size());
  auto* p = a.mutable_data();
  for (int i = 0; i < occ.size(); ++i) p[i] = occ[i];
  return a;
}

PiecewiseLinearPath path_from(const ConfigMatrix& m) {
  PiecewiseLinearPath path;
  for (Eigen::Index r = 0; r < m.rows(); ++r) path.push_back(m.row(r).transpose());
  return path;
}

ConfigMatrix path_to(const PiecewiseLinearPath& path) {
  ConfigMatrix m(static_cast<Eigen::Index>(path.size()), path.empty() ? 0 : path.front().size());
  for (std::size_t r = 0; r < path.size(); ++r) m.row(static_cast<Eigen::Index>(r)) = path[r].transpose();
  return m;
}

py::dict result_to_py(const SmoothResult& r) {
  py::dict d;
  d["report"] = to_py(to_json(r.report));
  d["trajectory"] = to_py(to_json(r.trajectory));
  d["duration"] = r.trajectory.duration();
  return d;
}

}  // namespace

PYBIND11_MODULE(_rtsmooth, m) {
  m.doc() = "Batched shortcut smoothing with a learned clearance field";

  py::register_exception<InvalidArgument>(m, "InvalidArgument", PyExc_ValueError);
  py::register_exception<FormatError>(m, "FormatError", PyExc_IOError);
  py::register_exception<SignatureMismatch>(m, "SignatureMismatch", PyExc_ValueError);
  py::register_exception<PathInCollision>(m, "PathInCollision", PyExc_RuntimeError);

  py::class_<RobotModel>(m, "RobotModel")
      .def_static("desk_planar", &RobotModel::desk_planar)
      .def_static("desk_spatial", &RobotModel::desk_spatial)
      .def_static("from_json", [](const std::string& s) { return robot_from_json(nlohmann::json::parse(s)); })
      .def_property_readonly("dof", &RobotModel::dof)
      .def_readonly("workspace_dim", &RobotModel::workspace_dim)
      .def_readonly("joint_lower", &RobotModel::joint_lower)
      .def_readonly("joint_upper", &RobotModel::joint_upper)
      .def_readonly("vel_max", &RobotModel::vel_max)
      .def_readonly("acc_max", &RobotModel::acc_max)
      .def("signature", &RobotModel::signature);

  m.def(
      "forward_kinematics",
      [](const RobotModel& model, const Configuration& q) {
        std::vector<std::tuple<Vec3, Vec3, double>> out;
        for (const auto& c : forward_kinematics(model, q)) out.emplace_back(c.a, c.b, c.radius);
        return out;
      },
      "Capsules (a, b, radius) of every link");

  py::class_<VoxelGrid>(m, "VoxelGrid")
      .def_static("desk_planar", &VoxelGrid::desk_planar)
      .def_static("desk_spatial", &VoxelGrid::desk_spatial)
      .def_property_readonly("size", &VoxelGrid::size)
      .def_property_readonly("edge", &VoxelGrid::edge)
      .def_property_readonly("dim", &VoxelGrid::dim)
      .def_property_readonly("dims", &VoxelGrid::dims)
      .def("center", &VoxelGrid::center)
      .def("locate", &VoxelGrid::locate);

  m.def(
      "occupancy_from_boxes",
      [](const VoxelGrid& grid, const std::vector<std::pair<Vec3, Vec3>>& boxes) {
        std::vector<Shape> shapes;
        for (const auto& [lo, hi] : boxes) shapes.push_back(Box{lo, hi});
        return occupancy_to_array(occupancy_from_shapes(grid, shapes));
      },
      py::arg("grid"), py::arg("boxes"), "Cells whose centres lie in any (lo, hi) box");

  m.def("exact_clearance_batch", &exact_clearance_batch, py::arg("model"), py::arg("grid"), py::arg("q"),
        "M x V signed distances from voxel centres to the robot surface");

  m.def(
      "config_in_collision",
      [](const RobotModel& model, const VoxelGrid& grid, py::array_t<bool> occ, const Configuration& q) {
        return config_in_collision(model, q, grid, occupancy_from_array(occ));
      },
      py::arg("model"), py::arg("grid"), py::arg("occupancy"), py::arg("q"));

  m.def(
      "generate_dataset",
      [](const RobotModel& model, const VoxelGrid& grid, int count, std::uint64_t seed) {
        const auto d = generate_dataset(model, grid, count, seed);
        return py::make_tuple(d.q, d.clearance);
      },
      py::arg("model"), py::arg("grid"), py::arg("count"), py::arg("seed"), "(Q, clearances) arrays");

  py::class_<ParabolicTrajectory>(m, "ParabolicTrajectory")
      .def_property_readonly("duration", &ParabolicTrajectory::duration)
      .def("position", &ParabolicTrajectory::position)
      .def("to_json", [](const ParabolicTrajectory& t) { return to_py(to_json(t)); });

  m.def(
      "time_parameterize_path",
      [](const RobotModel& model, const ConfigMatrix& path) { return time_parameterize_path(model, path_from(path)); },
      py::arg("model"), py::arg("path"));
  m.def(
      "min_time_rest_to_rest",
      [](const RobotModel& model, const Configuration& a, const Configuration& b) {
        return min_time_rest_to_rest(model, a, b).duration;
      },
      py::arg("model"), py::arg("q0"), py::arg("q1"), "Duration of the synchronized rest-to-rest motion");

  py::class_<CfnWeights>(m, "CfnWeights")
      .def_readonly("dof", &CfnWeights::dof)
      .def_readonly("voxels", &CfnWeights::voxels)
      .def_readonly("encoding_levels", &CfnWeights::encoding_levels)
      .def("save", [](const CfnWeights& w, const std::string& path) { save_weights(w, path); });
  m.def("load_weights", py::overload_cast<const std::string&>(&load_weights), py::arg("path"));
  m.def(
      "forward_batch", [](const CfnWeights& w, const ConfigMatrix& q) { return forward_batch(w, q); }, py::arg("weights"),
      py::arg("q"), "Inferred M x V clearances");
  m.def(
      "train",
      [](const RobotModel& model, const VoxelGrid& grid, const ConfigMatrix& q_train, const ClearanceMatrix& c_train,
         const ConfigMatrix& q_val, const ClearanceMatrix& c_val, int epochs, int batch_size, double lr,
         std::vector<int> hidden, int levels, std::uint64_t seed) {
        auto make = [&](const ConfigMatrix& q, const ClearanceMatrix& c) {
          ClearanceDataset d;
          d.dof = model.dof();
          d.voxels = grid.size();
          d.robot_signature = model.signature();
          d.grid_signature = grid.signature();
          d.q = q;
          d.clearance = c;
          return d;
        };
        TrainConfig cfg;
        cfg.epochs = epochs;
        cfg.batch_size = batch_size;
        cfg.learning_rate = lr;
        cfg.arch.hidden = std::move(hidden);
        cfg.arch.skip_after = std::min<int>(cfg.arch.skip_after, static_cast<int>(cfg.arch.hidden.size()));
        cfg.arch.encoding_levels = levels;
        cfg.seed = seed;
        auto result = train(make(q_train, c_train), make(q_val, c_val), cfg);
        std::vector<std::pair<double, double>> history;
        for (const auto& e : result.history) history.emplace_back(e.train_loss, e.val_loss);
        return py::make_tuple(result.weights, history);
      },
      py::arg("model"), py::arg("grid"), py::arg("q_train"), py::arg("c_train"), py::arg("q_val"), py::arg("c_val"),
      py::arg("epochs") = 10, py::arg("batch_size") = 50, py::arg("lr") = 1e-3,
      py::arg("hidden") = std::vector<int>{256, 256, 256, 256}, py::arg("levels") = 3, py::arg("seed") = 1,
      "Returns (weights, [(train_loss, val_loss) per epoch, epoch 0 untrained])");
  m.def(
      "evaluate_classifier",
      [](const ClearanceMatrix& pred, const ClearanceMatrix& exact, double threshold) {
        const auto r = evaluate_classifier(pred, exact, threshold);
        py::dict d;
        d["precision"] = r.precision();
        d["recall"] = r.recall();
        d["tp"] = r.true_positive;
        d["fp"] = r.false_positive;
        d["tn"] = r.true_negative;
        d["fn"] = r.false_negative;
        return d;
      },
      py::arg("predicted"), py::arg("exact"), py::arg("threshold"));

  py::class_<SmoothingConfig>(m, "SmoothingConfig")
      .def(py::init<>())
      .def_readwrite("c", &SmoothingConfig::waypoints)
      .def_readwrite("sample_dt", &SmoothingConfig::sample_dt)
      .def_readwrite("clearance_threshold", &SmoothingConfig::clearance_threshold)
      .def_readwrite("max_dijkstra_retries", &SmoothingConfig::max_dijkstra_retries)
      .def_readwrite("check_dt", &SmoothingConfig::check_dt)
      .def_readwrite("occupied_columns_only", &SmoothingConfig::occupied_columns_only);

  m.def(
      "smooth",
      [](const RobotModel& model, const VoxelGrid& grid, py::array_t<bool> occ, const ConfigMatrix& path,
         const SmoothingConfig& cfg, const CfnWeights* weights) {
        const OccupancyVector o = occupancy_from_array(occ);
        if (weights) return result_to_py(smooth(model, grid, o, path_from(path), CfnClearance(*weights, model, grid), cfg));
        return result_to_py(smooth(model, grid, o, path_from(path), ExactClearance(model, grid), cfg));
      },
      py::arg("model"), py::arg("grid"), py::arg("occupancy"), py::arg("path"), py::arg("config") = SmoothingConfig{},
      py::arg("weights") = nullptr, "Batch smoothing; exact clearances when no weights are given");
  m.def(
      "shortcut_iterative",
      [](const RobotModel& model, const VoxelGrid& grid, py::array_t<bool> occ, const ConfigMatrix& path,
         int max_iterations, double dt_check, std::uint64_t seed) {
        return result_to_py(
            shortcut_iterative(model, grid, occupancy_from_array(occ), path_from(path), max_iterations, dt_check, seed));
      },
      py::arg("model"), py::arg("grid"), py::arg("occupancy"), py::arg("path"), py::arg("max_iterations"),
      py::arg("dt_check") = 0.04, py::arg("seed") = 1);
  m.def(
      "verify_trajectory",
      [](const RobotModel& model, const ParabolicTrajectory& traj, const VoxelGrid& grid, py::array_t<bool> occ,
         double dt) { return verify_trajectory(model, traj, grid, occupancy_from_array(occ), dt); },
      py::arg("model"), py::arg("trajectory"), py::arg("grid"), py::arg("occupancy"), py::arg("dt_check") = 0.04,
      "Earliest colliding sample time, or None");

  py::class_<Scene>(m, "Scene")
      .def_readonly("name", &Scene::name)
      .def_readonly("robot", &Scene::robot)
      .def_readonly("grid", &Scene::grid)
      .def_readonly("configs", &Scene::configs)
      .def_readonly("smoothing", &Scene::smoothing)
      .def("validate", &Scene::validate)
      .def("static_occupancy", [](const Scene& s) { return occupancy_to_array(s.static_occupancy()); });
  m.def("load_scene", &load_scene, py::arg("path"));
  m.def(
      "step_obstacles", [](const Scene& s, double t) { return occupancy_to_array(step_obstacles(s, t)); },
      py::arg("scene"), py::arg("t"));
  m.def(
      "plan",
      [](const Scene& s, py::array_t<bool> occ, const Configuration& start, const Configuration& goal,
         std::uint64_t seed) -> std::optional<ConfigMatrix> {
        const auto path = plan(s, occupancy_from_array(occ), start, goal, seed);
        if (!path) return std::nullopt;
        return path_to(*path);
      },
      py::arg("scene"), py::arg("occupancy"), py::arg("start"), py::arg("goal"), py::arg("seed") = 1,
      "Piecewise-linear RRT path as a K x N array, or None");
}
