#include "rtsmooth/clearance_provider.hpp"

#include "rtsmooth/clearance_oracle.hpp"

namespace rtsmooth {

ClearanceMatrix ClearanceProvider::infer_columns(const ConfigMatrix& q, std::span<const int> columns) const {
  const ClearanceMatrix full = infer(q);
  ClearanceMatrix out(full.rows(), static_cast<Eigen::Index>(columns.size()));
  for (std::size_t c = 0; c < columns.size(); ++c) out.col(static_cast<Eigen::Index>(c)) = full.col(columns[c]);
  return out;
}

ClearanceMatrix ExactClearance::infer(const ConfigMatrix& q) const { return exact_clearance_batch(model_, grid_, q); }

ClearanceMatrix ExactClearance::infer_columns(const ConfigMatrix& q, std::span<const int> columns) const {
  ClearanceMatrix out(q.rows(), static_cast<Eigen::Index>(columns.size()));
  std::vector<Vec3> centers;
  centers.reserve(columns.size());
  for (int c : columns) centers.push_back(grid_.center(c));
  for (Eigen::Index r = 0; r < q.rows(); ++r) {
    const auto chain = forward_kinematics(model_, q.row(r).transpose());
    for (std::size_t c = 0; c < centers.size(); ++c)
      out(r, static_cast<Eigen::Index>(c)) = static_cast<float>(surface_signed_distance(chain, centers[c]));
  }
  return out;
}

}  // namespace rtsmooth
