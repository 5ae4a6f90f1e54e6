#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "rtsmooth/baseline_smoother.hpp"
#include "rtsmooth/batch_smoother.hpp"
#include "rtsmooth/scene.hpp"

namespace rtsmooth {

/// One smoothing input: a planned path under a fixed occupancy snapshot.
struct BenchProblem {
  std::string scene;
  int index = 0;
  std::uint64_t seed = 0;
  OccupancyVector occupancy;
  PiecewiseLinearPath path;
};

/// SplitMix64 finalizer; derives independent per-problem seeds.
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream);

/// `count` problems cycling through the scene's queries (or A -> B), occupancy at t = 0,
/// planned with per-problem seeds. Queries the planner cannot solve are skipped.
std::vector<BenchProblem> scene_problems(const Scene& scene, int count, std::uint64_t seed);

/// Randomized variants of `base`: `obstacles` random boxes plus random free endpoints
/// whose direct motion is blocked, so every problem needs a detour.
std::vector<BenchProblem> randomized_problems(const Scene& base, int count, std::uint64_t seed, int obstacles = 4);

struct BenchConfig {
  std::vector<int> c_values{2, 4, 8, 16};
  std::vector<int> iteration_values{10, 30, 100, 300};
  int repetitions = 20;
  std::uint64_t seed = 1;
};

struct BenchRow {
  std::string scene;
  std::string method;  // "batch" (parameter = c) or "baseline" (parameter = max iterations)
  int parameter = 0;
  int problem = 0;
  double unsmoothed = 0.0;
  double smoothed = 0.0;
  double ratio = 1.0;
  double total_ms = 0.0;
  double inference_ms = 0.0;
  double check_ms = 0.0;
  int accepted_retry = 0;
  bool fallback = false;
};

using ProviderLookup = std::function<const ClearanceProvider&(const Scene&)>;

/// Runs both smoothers over identical problems. Trials run sequentially.
std::vector<BenchRow> run_bench(const std::vector<Scene>& scenes, const ProviderLookup& provider,
                                const BenchConfig& cfg);

struct BenchCell {
  std::string method;
  int parameter = 0;
  int trials = 0;
  double mean_ratio = 0.0;
  double std_ratio = 0.0;
  double mean_ms = 0.0;
  double std_ms = 0.0;
  double mean_inference_ms = 0.0;
  double mean_check_ms = 0.0;
};

/// Per (method, parameter) aggregates in sweep order.
std::vector<BenchCell> summarize(const std::vector<BenchRow>& rows);

inline constexpr const char* kBenchCsvVersion = "rtsmooth-bench-csv v1";

void write_rows_csv(std::ostream& out, const std::vector<BenchRow>& rows);
std::vector<BenchRow> read_rows_csv(std::istream& in);
void write_cells_csv(std::ostream& out, const std::vector<BenchCell>& cells);

/// Batch point compared against the baseline curve at the same reduction ratio.
struct SpeedupPoint {
  int c = 0;
  double batch_ratio = 0.0;
  double batch_ms = 0.0;
  /// Baseline time interpolated along its (ratio, time) curve, which starts at the
  /// unsmoothed point (1, 0); nullopt when the baseline never comes within tolerance.
  std::optional<double> baseline_ms;
  double matched_ratio = 0.0;

  std::optional<double> speedup() const {
    if (!baseline_ms) return std::nullopt;
    return *baseline_ms / batch_ms;
  }
};

std::vector<SpeedupPoint> matched_speedup(const std::vector<BenchCell>& cells, double tolerance = 0.05);

/// Which Dijkstra run first produced a geometrically collision-free composition.
/// Trials where the very first run finds no inferred-free composition have no
/// first candidate and are counted under `no_candidate` only.
struct FirstCandidateStats {
  std::vector<int> counts;  // counts[k]: first verified composition came from run k
  int never_verified = 0;   // retries exhausted or graph disconnected after a failure
  int no_candidate = 0;
  int trials = 0;

  int evaluated() const { return trials - no_candidate; }
  /// counts[retry] / evaluated().
  double fraction(int retry) const;
};

FirstCandidateStats stats_first_candidate(const Scene& scene, const std::vector<BenchProblem>& problems,
                                          const ClearanceProvider& clearance, const SmoothingConfig& cfg);

}  // namespace rtsmooth
