#pragma once

// Independent reference computations shared by the unit and acceptance tests.
// Nothing here calls the code path it is used to check.

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <random>
#include <set>
#include <vector>

#include "rtsmooth/batch_smoother.hpp"
#include "rtsmooth/cfn.hpp"
#include "rtsmooth/parabolic.hpp"
#include "rtsmooth/robot_model.hpp"
#include "rtsmooth/voxel_grid.hpp"

namespace oracle {

using namespace rtsmooth;

struct GradCheck {
  double max_rel_error = 0.0;
  long parameters = 0;
};

/// Backprop gradient of the L1 training loss against central differences for one
/// randomly initialized network in double precision. Dropout masks are held fixed by
/// restarting the mask rng for every forward pass.
inline GradCheck cfn_gradient_check(int dof, int voxels, std::uint64_t seed, double dropout) {
  CfnArchitecture arch;
  arch.encoding_levels = 2;
  arch.hidden = {12, 10, 8};
  arch.skip_after = 2;
  arch.dropout = static_cast<float>(dropout);
  const CfnWeights w = CfnWeights::initialize(arch, dof, voxels, 1, 2, seed);
  MlpParams<double> p = w.params.cast<double>();
  p.dropout = dropout;

  std::mt19937_64 rng(seed ^ 0x5eedULL);
  std::uniform_real_distribution<double> u(-3.0, 3.0);
  ConfigMatrix q(6, dof);
  for (Eigen::Index k = 0; k < q.size(); ++k) q.data()[k] = u(rng);
  const MatT<double> input = encode_batch<double>(q, arch.encoding_levels);
  MatT<double> target(voxels, q.rows());
  for (Eigen::Index k = 0; k < target.size(); ++k) target.data()[k] = u(rng);

  const std::mt19937_64 mask_rng(seed + 17);
  auto loss = [&](const MlpParams<double>& params, MlpParams<double>* grads) {
    std::mt19937_64 r = mask_rng;
    MlpCache<double> cache;
    mlp_forward(params, input, true, &r, cache);
    MatT<double> d_out;
    const double l = l1_loss_with_grad(cache.output, target, grads ? &d_out : nullptr);
    if (grads) mlp_backward(params, cache, d_out, *grads);
    return l;
  };

  MlpParams<double> analytic = p.zeros_like();
  loss(p, &analytic);

  std::vector<double*> slots;
  p.for_each_tensor([&](auto& t) {
    for (Eigen::Index k = 0; k < t.size(); ++k) slots.push_back(t.data() + k);
  });
  std::vector<double> grads;
  analytic.for_each_tensor([&](auto& t) {
    for (Eigen::Index k = 0; k < t.size(); ++k) grads.push_back(t.data()[k]);
  });

  GradCheck out;
  out.parameters = static_cast<long>(slots.size());
  const double h = 1e-5;
  for (std::size_t k = 0; k < slots.size(); ++k) {
    const double keep = *slots[k];
    *slots[k] = keep + h;
    const double up = loss(p, nullptr);
    *slots[k] = keep - h;
    const double down = loss(p, nullptr);
    *slots[k] = keep;
    const double fd = (up - down) / (2.0 * h);
    const double scale = std::max({std::abs(fd), std::abs(grads[k]), 1e-6});
    out.max_rel_error = std::max(out.max_rel_error, std::abs(fd - grads[k]) / scale);
  }
  return out;
}

/// Per-candidate collision by direct geometry: sample the candidate motion on its own
/// time grid and test every occupied cell centre against the robot surface.
inline std::vector<bool> brute_force_status(const RobotModel& model, const VoxelGrid& grid,
                                            const OccupancyVector& occ, const std::vector<Configuration>& waypoints,
                                            double dt, double threshold) {
  const auto occupied = occ.occupied_indices();
  std::vector<bool> out;
  const int n = static_cast<int>(waypoints.size());
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      const ParabolicSegment seg = min_time_rest_to_rest(model, waypoints[i], waypoints[j]);
      bool hit = false;
      const int steps = static_cast<int>(std::ceil(seg.duration / dt - 1e-9));
      for (int s = 0; s <= steps + 1 && !hit; ++s) {
        const double t = std::min(s * dt, seg.duration);
        const CapsuleChain chain = forward_kinematics(model, seg.position(t));
        for (int v : occupied)
          if (surface_signed_distance(chain, grid.center(v)) < threshold) {
            hit = true;
            break;
          }
      }
      out.push_back(hit);
    }
  }
  return out;
}

/// Shortest composition by enumerating every increasing waypoint subset.
inline std::optional<double> exhaustive_shortest(const CandidateSet& set, const std::vector<bool>& in_collision,
                                                 const std::set<Edge>& blocked = {}) {
  const int n = set.node_count();
  const int inner = n - 2;
  std::optional<double> best;
  for (unsigned mask = 0; mask < (1u << inner); ++mask) {
    std::vector<int> seq{0};
    for (int k = 0; k < inner; ++k)
      if (mask & (1u << k)) seq.push_back(k + 1);
    seq.push_back(n - 1);
    double total = 0.0;
    bool ok = true;
    for (std::size_t k = 0; k + 1 < seq.size() && ok; ++k) {
      const int idx = set.candidate_index(seq[k], seq[k + 1]);
      if (in_collision[static_cast<std::size_t>(idx)] || blocked.count({seq[k], seq[k + 1]})) ok = false;
      else total += set.candidates[static_cast<std::size_t>(idx)].duration();
    }
    if (ok && (!best || total < *best)) best = total;
  }
  return best;
}

inline Configuration random_config(const RobotModel& model, std::mt19937_64& rng) {
  Configuration q(model.dof());
  for (int k = 0; k < model.dof(); ++k) {
    std::uniform_real_distribution<double> u(model.joint_lower[k], model.joint_upper[k]);
    q[k] = u(rng);
  }
  return q;
}

/// Random box occupancy on the grid, possibly overlapping the robot.
inline OccupancyVector random_occupancy(const VoxelGrid& grid, std::mt19937_64& rng, int boxes) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const double span = grid.edge() * grid.dims()[0];
  std::vector<Shape> shapes;
  for (int b = 0; b < boxes; ++b) {
    const Vec3 c(grid.origin().x() + u(rng) * span, grid.origin().y() + u(rng) * span, 0.0);
    const Vec3 half(0.03 + 0.12 * u(rng), 0.03 + 0.12 * u(rng), 0.1);
    shapes.push_back(Box{c - half, c + half});
  }
  return occupancy_from_shapes(grid, shapes);
}

/// Least-squares quadratic fit y ~ a + b x + c x^2; returns R^2.
inline double quadratic_r2(const std::vector<double>& x, const std::vector<double>& y) {
  const auto n = static_cast<Eigen::Index>(x.size());
  Eigen::MatrixXd A(n, 3);
  Eigen::VectorXd b(n);
  for (Eigen::Index k = 0; k < n; ++k) {
    A(k, 0) = 1.0;
    A(k, 1) = x[static_cast<std::size_t>(k)];
    A(k, 2) = x[static_cast<std::size_t>(k)] * x[static_cast<std::size_t>(k)];
    b[k] = y[static_cast<std::size_t>(k)];
  }
  const Eigen::VectorXd coef = A.colPivHouseholderQr().solve(b);
  const double mean = b.mean();
  const double ss_res = (A * coef - b).squaredNorm();
  const double ss_tot = (b.array() - mean).square().sum();
  return ss_tot > 0.0 ? 1.0 - ss_res / ss_tot : 1.0;
}

}  // namespace oracle
