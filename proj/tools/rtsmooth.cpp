// rtsmooth command-line tool: CFN data/training/evaluation, scenes, benchmarks, service.

#include <atomic>
#include <csignal>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "rtsmooth/bench.hpp"
#include "rtsmooth/cfn.hpp"
#include "rtsmooth/planner.hpp"
#include "rtsmooth/realtime_loop.hpp"
#include "rtsmooth/scene.hpp"
#include "rtsmooth/service_protocol.hpp"
#include "rtsmooth/ws_server.hpp"

using namespace rtsmooth;

namespace {

std::atomic<bool> g_stop{false};

struct RobotChoice {
  std::string profile = "desk_planar";
  std::string scene;

  std::pair<RobotModel, VoxelGrid> resolve() const {
    if (!scene.empty()) {
      const Scene s = load_scene(scene);
      return {s.robot, s.grid};
    }
    nlohmann::json j = {{"profile", profile}};
    return {robot_from_json(j), grid_from_json(j)};
  }

  void add_to(CLI::App* app) {
    app->add_option("--profile", profile, "Built-in robot and grid profile")
        ->check(CLI::IsMember({"desk_planar", "desk_spatial"}));
    app->add_option("--scene", scene, "Take robot and grid from a scene file instead");
  }
};

struct ClearanceChoice {
  std::string weights;
  bool exact = false;

  std::shared_ptr<const ClearanceProvider> resolve(const Scene& scene) const {
    if (exact) return std::make_shared<ExactClearance>(scene.robot, scene.grid);
    const std::string path = weights.empty() ? scene.weights : weights;
    if (path.empty()) throw InvalidArgument("scene '" + scene.name + "' names no weights; pass --weights or --exact");
    return std::make_shared<CfnClearance>(load_weights(path, scene.robot, scene.grid), scene.robot, scene.grid);
  }

  void add_to(CLI::App* app) {
    app->add_option("--weights", weights, "CFN weights file (defaults to the scene's)");
    app->add_flag("--exact", exact, "Use exact geometric clearances instead of the CFN");
  }
};

void print_json(const nlohmann::json& j) { std::cout << j.dump(2) << "\n"; }

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Batched shortcut smoothing with a learned clearance field"};
  app.require_subcommand(1);

  // cfn ---------------------------------------------------------------------
  auto* cfn = app.add_subcommand("cfn", "Clearance Field Network data, training and evaluation");
  cfn->require_subcommand(1);

  RobotChoice gen_robot;
  int gen_count = 20000;
  std::uint64_t gen_seed = 1;
  unsigned gen_threads = 0;
  std::string gen_out;
  auto* gen = cfn->add_subcommand("gen-data", "Sample configurations and exact clearance fields");
  gen_robot.add_to(gen);
  gen->add_option("--count", gen_count, "Number of samples")->check(CLI::NonNegativeNumber);
  gen->add_option("--seed", gen_seed, "Sampling seed");
  gen->add_option("--threads", gen_threads, "Worker threads (0 = all cores)");
  gen->add_option("--out", gen_out, "Output dataset file")->required();
  gen->callback([&] {
    const auto [robot, grid] = gen_robot.resolve();
    const auto data = generate_dataset(robot, grid, gen_count, gen_seed, gen_threads);
    save_dataset(data, grid, gen_out);
    std::cerr << "wrote " << data.size() << " samples (N=" << data.dof << ", V=" << data.voxels << ") to " << gen_out
              << "\n";
  });

  std::string tr_train, tr_val, tr_out, tr_log;
  TrainConfig tr_cfg;
  auto* tr = cfn->add_subcommand("train", "Train a CFN with L1 loss and Adam");
  tr->add_option("--train", tr_train, "Training dataset")->required()->check(CLI::ExistingFile);
  tr->add_option("--val", tr_val, "Validation dataset")->required()->check(CLI::ExistingFile);
  tr->add_option("--out", tr_out, "Output weights file")->required();
  tr->add_option("--log", tr_log, "Per-epoch loss CSV");
  tr->add_option("--lr", tr_cfg.learning_rate, "Adam learning rate")->capture_default_str();
  tr->add_option("--batch", tr_cfg.batch_size, "Mini-batch size")->capture_default_str();
  tr->add_option("--epochs", tr_cfg.epochs, "Epochs")->capture_default_str();
  tr->add_option("--beta1", tr_cfg.adam_beta1, "Adam beta1")->capture_default_str();
  tr->add_option("--beta2", tr_cfg.adam_beta2, "Adam beta2")->capture_default_str();
  tr->add_option("--eps", tr_cfg.adam_epsilon, "Adam epsilon")->capture_default_str();
  tr->add_option("--dropout", tr_cfg.dropout, "Dropout probability on hidden layers")->capture_default_str();
  tr->add_option("--seed", tr_cfg.seed, "Initialization, shuffle and dropout seed")->capture_default_str();
  tr->add_option("--levels", tr_cfg.arch.encoding_levels, "Positional encoding levels L")->capture_default_str();
  tr->add_option("--hidden", tr_cfg.arch.hidden, "Hidden layer widths")->capture_default_str();
  tr->add_option("--skip-after", tr_cfg.arch.skip_after, "Hidden layer receiving the input skip (0 = none)")
      ->capture_default_str();
  tr->callback([&] {
    tr_cfg.arch.dropout = tr_cfg.dropout;
    const auto train_set = load_dataset(tr_train);
    const auto val_set = load_dataset(tr_val);
    std::ofstream log;
    if (!tr_log.empty()) {
      log.open(tr_log);
      log << "epoch,train_loss,val_loss,iterations,seconds\n";
    }
    const auto result = train(train_set, val_set, tr_cfg, [&](const EpochStats& e) {
      std::cerr << "epoch " << e.epoch << "  train " << e.train_loss << "  val " << e.val_loss << "  (" << e.seconds
                << " s)\n";
      if (log) log << e.epoch << ',' << e.train_loss << ',' << e.val_loss << ',' << e.iterations << ',' << e.seconds
                   << "\n";
    });
    save_weights(result.weights, tr_out);
  });

  std::string ev_weights, ev_data;
  std::vector<double> ev_thresholds;
  RobotChoice ev_robot;
  auto* ev = cfn->add_subcommand("eval", "Precision and recall of thresholded inferred clearances");
  ev_robot.add_to(ev);
  ev->add_option("--weights", ev_weights, "Weights file")->required()->check(CLI::ExistingFile);
  ev->add_option("--data", ev_data, "Test dataset")->required()->check(CLI::ExistingFile);
  ev->add_option("--threshold", ev_thresholds, "Clearance thresholds [m] (default: one voxel edge)");
  ev->callback([&] {
    const auto w = load_weights(ev_weights);
    const auto test = load_dataset(ev_data);
    const ClearanceMatrix pred = forward_batch(w, test.q);
    if (ev_thresholds.empty()) ev_thresholds.push_back(ev_robot.resolve().second.edge());
    nlohmann::json out = nlohmann::json::array();
    for (double thr : ev_thresholds) {
      const auto r = evaluate_classifier(pred, test.clearance, thr);
      out.push_back({{"threshold", thr},
                     {"precision", r.precision()},
                     {"recall", r.recall()},
                     {"tp", r.true_positive},
                     {"fp", r.false_positive},
                     {"tn", r.true_negative},
                     {"fn", r.false_negative},
                     {"l1", l1_loss(pred, test.clearance)}});
    }
    print_json(out);
  });

  // scene -------------------------------------------------------------------
  auto* scene_cmd = app.add_subcommand("scene", "Scene files and the simulated loop");
  scene_cmd->require_subcommand(1);

  std::string sv_file;
  auto* sv = scene_cmd->add_subcommand("validate", "Check a scene file's invariants");
  sv->add_option("file", sv_file, "Scene file")->required()->check(CLI::ExistingFile);
  sv->callback([&] {
    const Scene s = load_scene(sv_file);
    s.validate();
    std::cout << "ok: " << s.name << " (" << s.robot.dof() << " joints, V=" << s.grid.size() << ", "
              << s.static_occupancy().count() << " static cells)\n";
  });

  std::string sp_file, sp_from = "A", sp_to = "B";
  std::uint64_t sp_seed = 1;
  ClearanceChoice sp_clearance;
  auto* sp = scene_cmd->add_subcommand("smooth", "Plan between two named configurations and smooth once");
  sp->add_option("file", sp_file, "Scene file")->required()->check(CLI::ExistingFile);
  sp->add_option("--from", sp_from, "Start configuration name")->capture_default_str();
  sp->add_option("--to", sp_to, "Goal configuration name")->capture_default_str();
  sp->add_option("--seed", sp_seed, "Planner seed")->capture_default_str();
  sp_clearance.add_to(sp);
  sp->callback([&] {
    const Scene s = load_scene(sp_file);
    s.validate();
    const auto provider = sp_clearance.resolve(s);
    const OccupancyVector occ = step_obstacles(s, 0.0);
    const auto path = plan(s, occ, s.config(sp_from), s.config(sp_to), sp_seed);
    if (!path) throw std::runtime_error("planner found no path");
    const auto result = smooth(s.robot, s.grid, occ, *path, *provider, s.smoothing);
    nlohmann::json p = nlohmann::json::array();
    for (const auto& q : *path) p.push_back(std::vector<double>(q.data(), q.data() + q.size()));
    print_json({{"path", p}, {"report", to_json(result.report)}, {"trajectory", to_json(result.trajectory)}});
  });

  std::string sr_file, sr_commands;
  int sr_ticks = 200;
  LoopConfig sr_cfg;
  ClearanceChoice sr_clearance;
  auto* sr = scene_cmd->add_subcommand("run", "Run the A/B loop headless and print wire messages as JSON lines");
  sr->add_option("file", sr_file, "Scene file")->required()->check(CLI::ExistingFile);
  sr->add_option("--ticks", sr_ticks, "Number of ticks")->capture_default_str();
  sr->add_option("--tick", sr_cfg.tick, "Simulated seconds per tick")->capture_default_str();
  sr->add_option("--seed", sr_cfg.seed, "Planner seed")->capture_default_str();
  sr->add_option("--commands", sr_commands,
                 "JSON lines of {\"tick\": k, \"message\": client message} applied before tick k");
  sr_clearance.add_to(sr);
  sr->callback([&] {
    const Scene s = load_scene(sr_file);
    RealtimeLoop loop(s, sr_clearance.resolve(s), sr_cfg);
    std::multimap<int, std::string> script;
    if (!sr_commands.empty()) {
      std::ifstream in(sr_commands);
      if (!in) throw InvalidArgument("cannot open " + sr_commands);
      for (std::string line; std::getline(in, line);) {
        if (line.empty()) continue;
        const auto j = nlohmann::json::parse(line);
        script.emplace(j.at("tick").get<int>(), j.at("message").dump());
      }
    }
    MessageSequencer seq;
    auto emit = [&](const std::vector<LoopEvent>& events) {
      for (const auto& e : events) std::cout << to_message(e, seq).dump() << "\n";
    };
    emit(loop.start());
    for (int k = 1; k <= sr_ticks; ++k) {
      const auto [lo, hi] = script.equal_range(k);
      for (auto it = lo; it != hi; ++it) {
        try {
          const auto ack = handle_client_message(loop, parse_client_message(it->second));
          std::cout << nlohmann::json{{"type", "ack"}, {"seq", seq.next()}, {"payload", ack}}.dump() << "\n";
        } catch (const std::exception& e) {
          emit({{"error", {{"reason", e.what()}}}});
        }
      }
      emit(loop.tick());
    }
  });

  // bench -------------------------------------------------------------------
  auto* bench = app.add_subcommand("bench", "Batch smoother versus iterative baseline");
  bench->require_subcommand(1);

  std::vector<std::string> br_scenes;
  BenchConfig br_cfg;
  std::string br_out, br_summary;
  ClearanceChoice br_clearance;
  auto* br = bench->add_subcommand("run", "Sweep c and max iterations over scenes");
  br->add_option("--scenes", br_scenes, "Scene files")->required()->check(CLI::ExistingFile);
  br->add_option("--c", br_cfg.c_values, "Waypoint counts for the batch smoother")->capture_default_str();
  br->add_option("--iterations", br_cfg.iteration_values, "Max iterations for the baseline")->capture_default_str();
  br->add_option("--repetitions", br_cfg.repetitions, "Problems per scene")->capture_default_str();
  br->add_option("--seed", br_cfg.seed, "Problem seed")->capture_default_str();
  br->add_option("--out", br_out, "Per-trial CSV (default stdout)");
  br->add_option("--summary", br_summary, "Per-cell summary CSV");
  br_clearance.add_to(br);
  br->callback([&] {
    std::vector<Scene> scenes;
    std::map<std::string, std::shared_ptr<const ClearanceProvider>> providers;
    for (const auto& f : br_scenes) {
      scenes.push_back(load_scene(f));
      providers[scenes.back().name] = br_clearance.resolve(scenes.back());
    }
    const auto rows =
        run_bench(scenes, [&](const Scene& s) -> const ClearanceProvider& { return *providers.at(s.name); }, br_cfg);
    if (br_out.empty()) {
      write_rows_csv(std::cout, rows);
    } else {
      std::ofstream out(br_out);
      write_rows_csv(out, rows);
    }
    if (!br_summary.empty()) {
      std::ofstream out(br_summary);
      write_cells_csv(out, summarize(rows));
    }
  });

  std::string bs_scene;
  int bs_trials = 36;
  std::uint64_t bs_seed = 1;
  int bs_obstacles = 4;
  std::optional<double> bs_threshold;
  std::optional<int> bs_c;
  ClearanceChoice bs_clearance;
  auto* bs = bench->add_subcommand("stats", "Histogram of the Dijkstra retry that produced the accepted trajectory");
  bs->add_option("--scene", bs_scene, "Base scene")->required()->check(CLI::ExistingFile);
  bs->add_option("--trials", bs_trials, "Randomized scenes")->capture_default_str();
  bs->add_option("--seed", bs_seed, "Seed")->capture_default_str();
  bs->add_option("--obstacles", bs_obstacles, "Random boxes per scene")->capture_default_str();
  bs->add_option("--threshold", bs_threshold, "Clearance threshold override [m]");
  bs->add_option("--c", bs_c, "Waypoint count override");
  bs_clearance.add_to(bs);
  bs->callback([&] {
    const Scene s = load_scene(bs_scene);
    s.validate();
    SmoothingConfig cfg = s.smoothing;
    if (bs_threshold) cfg.clearance_threshold = *bs_threshold;
    if (bs_c) cfg.waypoints = *bs_c;
    const auto problems = randomized_problems(s, bs_trials, bs_seed, bs_obstacles);
    const auto stats = stats_first_candidate(s, problems, *bs_clearance.resolve(s), cfg);
    nlohmann::json hist = nlohmann::json::array();
    for (std::size_t k = 0; k < stats.counts.size(); ++k)
      hist.push_back({{"retry", k}, {"count", stats.counts[k]}, {"fraction", stats.fraction(static_cast<int>(k))}});
    print_json({{"trials", stats.trials},
                {"evaluated", stats.evaluated()},
                {"histogram", hist},
                {"never_verified", stats.never_verified},
                {"no_candidate", stats.no_candidate}});
  });

  std::string bp_in, bp_out;
  double bp_tol = 0.05;
  auto* bp = bench->add_subcommand("plot-data", "Aggregate a per-trial CSV into plot-ready cells and speedups");
  bp->add_option("--in", bp_in, "Per-trial CSV from 'bench run'")->required()->check(CLI::ExistingFile);
  bp->add_option("--out", bp_out, "Cell CSV (default stdout)");
  bp->add_option("--tolerance", bp_tol, "Ratio tolerance for matched speedups")->capture_default_str();
  bp->callback([&] {
    std::ifstream in(bp_in);
    const auto cells = summarize(read_rows_csv(in));
    if (bp_out.empty()) {
      write_cells_csv(std::cout, cells);
    } else {
      std::ofstream out(bp_out);
      write_cells_csv(out, cells);
    }
    std::cerr << "c,batch_ratio,batch_ms,baseline_ms_at_matched_ratio,speedup\n";
    for (const auto& p : matched_speedup(cells, bp_tol)) {
      std::cerr << p.c << ',' << p.batch_ratio << ',' << p.batch_ms << ',';
      if (p.baseline_ms)
        std::cerr << *p.baseline_ms << ',' << *p.speedup() << "\n";
      else
        std::cerr << "unmatched,\n";
    }
  });

  // serve -------------------------------------------------------------------
  std::string sv_scene;
  ServerConfig srv_cfg;
  LoopConfig srv_loop;
  ClearanceChoice srv_clearance;
  auto* serve = app.add_subcommand("serve", "Run the realtime loop behind a websocket");
  serve->add_option("--scene", sv_scene, "Scene file")->required()->check(CLI::ExistingFile);
  serve->add_option("--address", srv_cfg.address, "Bind address")->capture_default_str();
  serve->add_option("--port", srv_cfg.port, "Port (0 = ephemeral)")->capture_default_str();
  serve->add_option("--tick", srv_loop.tick, "Seconds per tick")->capture_default_str();
  serve->add_flag("--async", srv_loop.async, "Plan and smooth on a worker thread");
  srv_clearance.add_to(serve);
  serve->callback([&] {
    const Scene s = load_scene(sv_scene);
    RealtimeLoop loop(s, srv_clearance.resolve(s), srv_loop);
    srv_cfg.tick_wall = srv_loop.tick;
    std::signal(SIGINT, [](int) { g_stop = true; });
    std::signal(SIGTERM, [](int) { g_stop = true; });
    run_server(loop, srv_cfg, g_stop);
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
