#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

#include <Eigen/Core>
#include <Eigen/Geometry>

namespace rtsmooth {

using Vec3 = Eigen::Vector3d;
using VecX = Eigen::VectorXd;
using MatX = Eigen::MatrixXd;

/// Joint values in radians, one entry per degree of freedom.
using Configuration = Eigen::VectorXd;

/// M×N stack of configurations, one per row.
using ConfigMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// M×V inferred or exact clearances, one configuration per row.
using ClearanceMatrix = Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Input does not satisfy an operation's preconditions (shape, range, binding).
class InvalidArgument : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A serialized artifact could not be read back (bad magic, truncation, version).
class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Weights or datasets bound to a different robot or grid than the caller's.
class SignatureMismatch : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// 64-bit FNV-1a accumulator used to bind artifacts to a robot or grid.
class Fnv1a {
 public:
  Fnv1a& add_bytes(const void* data, std::size_t n) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < n; ++i) {
      state_ ^= p[i];
      state_ *= 0x100000001b3ULL;
    }
    return *this;
  }
  Fnv1a& add(double v) { return add_bytes(&v, sizeof v); }
  Fnv1a& add(std::int64_t v) { return add_bytes(&v, sizeof v); }
  Fnv1a& add(const std::string& s) { return add_bytes(s.data(), s.size()); }
  std::uint64_t value() const { return state_; }

 private:
  std::uint64_t state_ = 0xcbf29ce484222325ULL;
};

}  // namespace rtsmooth
