#pragma once

#include <functional>
#include <string>
#include <vector>

#include "rtsmooth/clearance_oracle.hpp"
#include "rtsmooth/clearance_provider.hpp"
#include "rtsmooth/mlp.hpp"

namespace rtsmooth {

struct CfnArchitecture {
  int encoding_levels = 3;
  std::vector<int> hidden{256, 256, 256, 256};
  int skip_after = 3;
  float dropout = 0.1f;
};

/// Learned map from a configuration to its clearance field on one fixed grid.
struct CfnWeights {
  int dof = 0;
  int voxels = 0;
  int encoding_levels = 3;
  std::uint64_t robot_signature = 0;
  std::uint64_t grid_signature = 0;
  MlpParams<float> params;

  int input_dim() const { return 2 * encoding_levels * dof; }

  static CfnWeights initialize(const CfnArchitecture& arch, int dof, int voxels, std::uint64_t robot_signature,
                               std::uint64_t grid_signature, std::uint64_t seed);

  /// Throws SignatureMismatch unless the weights were trained for this robot and grid.
  void check_binding(const RobotModel& model, const VoxelGrid& grid) const;
};

/// [sin(2^0 pi q), cos(2^0 pi q), ..., sin(2^(L-1) pi q), cos(2^(L-1) pi q)], each block N wide.
VecX positional_encode(const Configuration& q, int levels);

/// Encodes every row of Q into one column: (2 L N) x M.
template <class T>
MatT<T> encode_batch(const ConfigMatrix& q, int levels);

/// Network input: joint angles in half-turns (q / pi), then encode_batch. In raw
/// radians the lowest frequency repeats every 2 rad, so configurations 2 rad apart
/// on one joint would be indistinguishable.
template <class T>
MatT<T> encode_joints(const ConfigMatrix& q, int levels);

/// M x V clearances. Training mode applies dropout drawn from `rng`.
ClearanceMatrix forward_batch(const CfnWeights& w, const ConfigMatrix& q, bool training_mode = false,
                              std::mt19937_64* rng = nullptr);

/// Mean absolute error over all entries.
double l1_loss(const ClearanceMatrix& pred, const ClearanceMatrix& target);

struct TrainConfig {
  double learning_rate = 1e-3;
  int batch_size = 50;
  int epochs = 60;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_epsilon = 1e-8;
  float dropout = 0.1f;
  std::uint64_t seed = 1;
  CfnArchitecture arch{};
};

struct EpochStats {
  int epoch = 0;  // 0 is the untrained network
  double train_loss = 0.0;
  double val_loss = 0.0;
  long iterations = 0;  // cumulative optimizer steps
  double seconds = 0.0;
};

struct TrainResult {
  CfnWeights weights;
  std::vector<EpochStats> history;
};

using EpochCallback = std::function<void(const EpochStats&)>;

/// Mini-batch Adam on the L1 loss. Deterministic given cfg.seed.
/// Throws InvalidArgument on empty or mixed-signature data, std::runtime_error on a NaN loss.
TrainResult train(const ClearanceDataset& train_set, const ClearanceDataset& val_set, const TrainConfig& cfg,
                  const EpochCallback& on_epoch = {});

struct ClassifierReport {
  double threshold = 0.0;
  std::size_t true_positive = 0;
  std::size_t false_positive = 0;
  std::size_t true_negative = 0;
  std::size_t false_negative = 0;

  /// TP / (TP + FP); 1 when nothing is predicted in collision.
  double precision() const;
  /// TP / (TP + FN); 1 when nothing is actually in collision.
  double recall() const;
};

/// Predicted collision iff inferred clearance < threshold; actual iff exact clearance < 0.
ClassifierReport evaluate_classifier(const ClearanceMatrix& predicted, const ClearanceMatrix& exact, double threshold);
ClassifierReport evaluate_classifier(const CfnWeights& w, const ClearanceDataset& test_set, double threshold);

/// "CFN1" little-endian weights file with a trailing payload checksum.
void save_weights(const CfnWeights& w, const std::string& path);
CfnWeights load_weights(const std::string& path);
CfnWeights load_weights(const std::string& path, const RobotModel& model, const VoxelGrid& grid);

/// Clearance provider backed by a trained network.
class CfnClearance final : public ClearanceProvider {
 public:
  CfnClearance(CfnWeights w, const RobotModel& model, const VoxelGrid& grid);
  int voxels() const override { return weights_.voxels; }
  ClearanceMatrix infer(const ConfigMatrix& q) const override;
  ClearanceMatrix infer_columns(const ConfigMatrix& q, std::span<const int> columns) const override;
  const CfnWeights& weights() const { return weights_; }

 private:
  CfnWeights weights_;
};

}  // namespace rtsmooth
