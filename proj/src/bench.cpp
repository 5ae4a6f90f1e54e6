#include "rtsmooth/bench.hpp"

#include <chrono>
#include <cmath>
#include <istream>
#include <map>
#include <ostream>
#include <random>
#include <sstream>

#include "rtsmooth/planner.hpp"

namespace rtsmooth {

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

std::vector<BenchProblem> scene_problems(const Scene& scene, int count, std::uint64_t seed) {
  std::vector<std::pair<std::string, std::string>> queries = scene.queries;
  if (queries.empty()) queries.emplace_back("A", "B");
  const OccupancyVector occ = step_obstacles(scene, 0.0);
  std::vector<BenchProblem> out;
  for (int k = 0; k < count; ++k) {
    const auto& [a, b] = queries[static_cast<std::size_t>(k) % queries.size()];
    const std::uint64_t s = mix_seed(seed, static_cast<std::uint64_t>(k));
    auto path = plan(scene, occ, scene.config(a), scene.config(b), s);
    if (!path) continue;
    out.push_back({scene.name, k, s, occ, std::move(*path)});
  }
  return out;
}

std::vector<BenchProblem> randomized_problems(const Scene& base, int count, std::uint64_t seed, int obstacles) {
  std::vector<BenchProblem> out;
  const VoxelGrid& grid = base.grid;
  const Vec3 lo = grid.origin();
  const Vec3 hi = lo + grid.edge() * Vec3(grid.dims()[0], grid.dims()[1], grid.dims()[2]);
  const Vec3 root = base.robot.base_pose.translation();
  const OccupancyVector static_occ = base.static_occupancy();
  for (std::uint64_t attempt = 0; static_cast<int>(out.size()) < count; ++attempt) {
    if (attempt > static_cast<std::uint64_t>(count) * 50)
      throw InvalidArgument("randomized_problems: scene '" + base.name + "' rarely admits solvable problems");
    const std::uint64_t s = mix_seed(seed, attempt);
    std::mt19937_64 rng(s);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::vector<Shape> boxes;
    while (static_cast<int>(boxes.size()) < obstacles) {
      Vec3 c(lo.x() + unit(rng) * (hi.x() - lo.x()), lo.y() + unit(rng) * (hi.y() - lo.y()), 0.0);
      Vec3 half(0.04 + 0.1 * unit(rng), 0.04 + 0.1 * unit(rng), 0.1);
      if (grid.dim() == 3) {
        c.z() = lo.z() + unit(rng) * (hi.z() - lo.z());
        half.z() = 0.04 + 0.1 * unit(rng);
      }
      if ((c - root).head(grid.dim()).norm() < 0.25) continue;
      boxes.push_back(Box{c - half, c + half});
    }
    const OccupancyVector occ = static_occ | occupancy_from_shapes(grid, boxes);
    const CollisionChecker checker(base.robot, grid, occ);
    auto free_config = [&]() -> std::optional<Configuration> {
      for (int t = 0; t < 100; ++t) {
        Configuration q = random_configuration(base.robot, rng);
        if (!checker.in_collision(q)) return q;
      }
      return std::nullopt;
    };
    const auto qa = free_config();
    const auto qb = free_config();
    if (!qa || !qb) continue;
    if (edge_free(checker, *qa, *qb, base.planner)) continue;
    auto path = plan(base.robot, grid, occ, *qa, *qb, s, base.planner);
    if (!path) continue;
    out.push_back({base.name, static_cast<int>(out.size()), s, occ, std::move(*path)});
  }
  return out;
}

std::vector<BenchRow> run_bench(const std::vector<Scene>& scenes, const ProviderLookup& provider,
                                const BenchConfig& cfg) {
  if (cfg.repetitions < 0) throw InvalidArgument("bench: repetitions must be >= 0");
  std::vector<BenchRow> rows;
  for (const auto& scene : scenes) {
    scene.validate();
    const ClearanceProvider& clearance = provider(scene);
    const auto problems = scene_problems(scene, cfg.repetitions, cfg.seed);
    auto add = [&](const char* method, int parameter, const BenchProblem& p, const SmoothReport& r) {
      rows.push_back({scene.name, method, parameter, p.index, r.unsmoothed_duration, r.smoothed_duration, r.ratio(),
                      r.total_ms, r.inference_ms, r.check_ms, r.accepted_retry, r.fallback});
    };
    for (int c : cfg.c_values) {
      SmoothingConfig sc = scene.smoothing;
      sc.waypoints = c;
      for (const auto& p : problems) {
        const auto t0 = std::chrono::steady_clock::now();
        auto result = smooth(scene.robot, scene.grid, p.occupancy, p.path, clearance, sc);
        result.report.total_ms =
            std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
        add("batch", c, p, result.report);
      }
    }
    for (int iters : cfg.iteration_values) {
      for (const auto& p : problems) {
        const auto t0 = std::chrono::steady_clock::now();
        auto result = shortcut_iterative(scene.robot, scene.grid, p.occupancy, p.path, iters,
                                         scene.smoothing.check_dt, p.seed);
        result.report.total_ms =
            std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
        add("baseline", iters, p, result.report);
      }
    }
  }
  return rows;
}

std::vector<BenchCell> summarize(const std::vector<BenchRow>& rows) {
  std::vector<BenchCell> cells;
  std::map<std::pair<std::string, int>, std::size_t> index;
  std::vector<std::vector<const BenchRow*>> members;
  for (const auto& r : rows) {
    const auto key = std::make_pair(r.method, r.parameter);
    auto it = index.find(key);
    if (it == index.end()) {
      it = index.emplace(key, cells.size()).first;
      cells.push_back({r.method, r.parameter});
      members.emplace_back();
    }
    members[it->second].push_back(&r);
  }
  for (std::size_t k = 0; k < cells.size(); ++k) {
    auto& c = cells[k];
    const auto& m = members[k];
    const double n = static_cast<double>(m.size());
    c.trials = static_cast<int>(m.size());
    for (const auto* r : m) {
      c.mean_ratio += r->ratio / n;
      c.mean_ms += r->total_ms / n;
      c.mean_inference_ms += r->inference_ms / n;
      c.mean_check_ms += r->check_ms / n;
    }
    for (const auto* r : m) {
      c.std_ratio += (r->ratio - c.mean_ratio) * (r->ratio - c.mean_ratio);
      c.std_ms += (r->total_ms - c.mean_ms) * (r->total_ms - c.mean_ms);
    }
    c.std_ratio = m.size() > 1 ? std::sqrt(c.std_ratio / (n - 1)) : 0.0;
    c.std_ms = m.size() > 1 ? std::sqrt(c.std_ms / (n - 1)) : 0.0;
  }
  return cells;
}

void write_rows_csv(std::ostream& out, const std::vector<BenchRow>& rows) {
  out << "# " << kBenchCsvVersion << "\n";
  out << "scene,method,parameter,problem,unsmoothed_s,smoothed_s,ratio,total_ms,inference_ms,check_ms,"
         "accepted_retry,fallback\n";
  out.precision(9);
  for (const auto& r : rows) {
    out << r.scene << ',' << r.method << ',' << r.parameter << ',' << r.problem << ',' << r.unsmoothed << ','
        << r.smoothed << ',' << r.ratio << ',' << r.total_ms << ',' << r.inference_ms << ',' << r.check_ms << ','
        << r.accepted_retry << ',' << (r.fallback ? 1 : 0) << '\n';
  }
}

std::vector<BenchRow> read_rows_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line != std::string("# ") + kBenchCsvVersion)
    throw FormatError("bench CSV: missing '# " + std::string(kBenchCsvVersion) + "' header");
  if (!std::getline(in, line)) throw FormatError("bench CSV: missing column header");
  std::vector<BenchRow> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::stringstream ss(line);
    for (std::string cell; std::getline(ss, cell, ',');) f.push_back(cell);
    if (f.size() != 12) throw FormatError("bench CSV: expected 12 fields, got " + std::to_string(f.size()));
    try {
      rows.push_back({f[0], f[1], std::stoi(f[2]), std::stoi(f[3]), std::stod(f[4]), std::stod(f[5]), std::stod(f[6]),
                      std::stod(f[7]), std::stod(f[8]), std::stod(f[9]), std::stoi(f[10]), f[11] == "1"});
    } catch (const std::logic_error&) {
      throw FormatError("bench CSV: malformed row '" + line + "'");
    }
  }
  return rows;
}

void write_cells_csv(std::ostream& out, const std::vector<BenchCell>& cells) {
  out << "# " << kBenchCsvVersion << "\n";
  out << "method,parameter,trials,mean_ratio,std_ratio,mean_ms,std_ms,mean_inference_ms,mean_check_ms\n";
  out.precision(9);
  for (const auto& c : cells) {
    out << c.method << ',' << c.parameter << ',' << c.trials << ',' << c.mean_ratio << ',' << c.std_ratio << ','
        << c.mean_ms << ',' << c.std_ms << ',' << c.mean_inference_ms << ',' << c.mean_check_ms << '\n';
  }
}

std::vector<SpeedupPoint> matched_speedup(const std::vector<BenchCell>& cells, double tolerance) {
  std::vector<std::pair<double, double>> curve{{1.0, 0.0}};  // (ratio, ms), iteration order
  std::vector<const BenchCell*> baseline;
  for (const auto& c : cells)
    if (c.method == "baseline") baseline.push_back(&c);
  std::sort(baseline.begin(), baseline.end(), [](auto* a, auto* b) { return a->parameter < b->parameter; });
  for (const auto* c : baseline) curve.emplace_back(c->mean_ratio, c->mean_ms);

  std::vector<SpeedupPoint> out;
  for (const auto& c : cells) {
    if (c.method != "batch") continue;
    SpeedupPoint p{c.parameter, c.mean_ratio, c.mean_ms, std::nullopt, 0.0};
    // First crossing of the batch ratio along the baseline curve.
    for (std::size_t k = 1; k < curve.size() && !p.baseline_ms; ++k) {
      const auto [r0, t0] = curve[k - 1];
      const auto [r1, t1] = curve[k];
      if (r1 <= p.batch_ratio && r0 >= p.batch_ratio) {
        const double s = r0 > r1 ? (r0 - p.batch_ratio) / (r0 - r1) : 1.0;
        p.baseline_ms = t0 + s * (t1 - t0);
        p.matched_ratio = p.batch_ratio;
      }
    }
    if (!p.baseline_ms) {
      // The baseline never reaches the batch ratio; accept its best point within tolerance.
      const auto best = std::min_element(curve.begin(), curve.end());
      if (best->first - p.batch_ratio <= tolerance) {
        p.baseline_ms = best->second;
        p.matched_ratio = best->first;
      }
    }
    out.push_back(p);
  }
  return out;
}

double FirstCandidateStats::fraction(int retry) const {
  if (evaluated() == 0 || retry < 0 || retry >= static_cast<int>(counts.size())) return 0.0;
  return static_cast<double>(counts[static_cast<std::size_t>(retry)]) / evaluated();
}

FirstCandidateStats stats_first_candidate(const Scene& scene, const std::vector<BenchProblem>& problems,
                                          const ClearanceProvider& clearance, const SmoothingConfig& cfg) {
  FirstCandidateStats stats;
  stats.counts.assign(static_cast<std::size_t>(cfg.max_dijkstra_retries) + 1, 0);
  for (const auto& p : problems) {
    const auto result = smooth(scene.robot, scene.grid, p.occupancy, p.path, clearance, cfg);
    const auto& r = result.report;
    ++stats.trials;
    if (r.verified_retry >= 0)
      ++stats.counts[static_cast<std::size_t>(r.verified_retry)];
    else if (r.dijkstra_runs == 0)
      ++stats.no_candidate;
    else
      ++stats.never_verified;
  }
  return stats;
}

}  // namespace rtsmooth
