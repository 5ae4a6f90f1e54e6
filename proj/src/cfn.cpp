#include "rtsmooth/cfn.hpp"

#include <chrono>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numbers>
#include <numeric>
#include <sstream>

#if defined(__SSE__)
#include <xmmintrin.h>
#endif

#include "binary_io.hpp"

namespace rtsmooth {

CfnWeights CfnWeights::initialize(const CfnArchitecture& arch, int dof, int voxels, std::uint64_t robot_signature,
                                  std::uint64_t grid_signature, std::uint64_t seed) {
  if (arch.encoding_levels < 1) throw InvalidArgument("CfnWeights: encoding levels must be >= 1");
  CfnWeights w;
  w.dof = dof;
  w.voxels = voxels;
  w.encoding_levels = arch.encoding_levels;
  w.robot_signature = robot_signature;
  w.grid_signature = grid_signature;
  std::mt19937_64 rng(seed);
  w.params = MlpParams<float>::init(w.input_dim(), arch.hidden, voxels, arch.skip_after, arch.dropout, rng);
  return w;
}

void CfnWeights::check_binding(const RobotModel& model, const VoxelGrid& grid) const {
  if (model.dof() != dof || model.signature() != robot_signature)
    throw SignatureMismatch("CFN weights were trained for a different robot model");
  if (grid.size() != voxels || grid.signature() != grid_signature)
    throw SignatureMismatch("CFN weights were trained for a different voxel grid");
}

VecX positional_encode(const Configuration& q, int levels) {
  if (levels < 1) throw InvalidArgument("positional_encode: L must be >= 1");
  const Eigen::Index n = q.size();
  VecX out(2 * levels * n);
  double freq = std::numbers::pi;
  for (int l = 0; l < levels; ++l, freq *= 2.0) {
    for (Eigen::Index k = 0; k < n; ++k) {
      out[2 * l * n + k] = std::sin(freq * q[k]);
      out[2 * l * n + n + k] = std::cos(freq * q[k]);
    }
  }
  return out;
}

template <class T>
MatT<T> encode_batch(const ConfigMatrix& q, int levels) {
  if (levels < 1) throw InvalidArgument("encode_batch: L must be >= 1");
  const Eigen::Index n = q.cols();
  MatT<T> out(2 * levels * n, q.rows());
  for (Eigen::Index r = 0; r < q.rows(); ++r) {
    double freq = std::numbers::pi;
    for (int l = 0; l < levels; ++l, freq *= 2.0) {
      for (Eigen::Index k = 0; k < n; ++k) {
        out(2 * l * n + k, r) = static_cast<T>(std::sin(freq * q(r, k)));
        out(2 * l * n + n + k, r) = static_cast<T>(std::cos(freq * q(r, k)));
      }
    }
  }
  return out;
}

template MatT<float> encode_batch<float>(const ConfigMatrix&, int);
template MatT<double> encode_batch<double>(const ConfigMatrix&, int);

template <class T>
MatT<T> encode_joints(const ConfigMatrix& q, int levels) {
  return encode_batch<T>(q * (1.0 / std::numbers::pi), levels);
}

template MatT<float> encode_joints<float>(const ConfigMatrix&, int);
template MatT<double> encode_joints<double>(const ConfigMatrix&, int);

namespace {

void check_input(const CfnWeights& w, const ConfigMatrix& q) {
  if (q.cols() != w.dof)
    throw InvalidArgument("CFN forward: Q has " + std::to_string(q.cols()) + " columns, weights expect " +
                          std::to_string(w.dof));
}

ClearanceMatrix to_rows(const MatT<float>& columns) { return columns.transpose(); }

}  // namespace

ClearanceMatrix forward_batch(const CfnWeights& w, const ConfigMatrix& q, bool training_mode, std::mt19937_64* rng) {
  check_input(w, q);
  if (q.rows() == 0) return ClearanceMatrix(0, w.voxels);
  const MatT<float> enc = encode_joints<float>(q, w.encoding_levels);
  if (!training_mode) return to_rows(mlp_infer(w.params, enc));
  MlpCache<float> cache;
  mlp_forward(w.params, enc, true, rng, cache);
  return to_rows(cache.output);
}

double l1_loss(const ClearanceMatrix& pred, const ClearanceMatrix& target) {
  if (pred.rows() != target.rows() || pred.cols() != target.cols()) throw InvalidArgument("l1_loss: shape mismatch");
  if (pred.size() == 0) return 0.0;
  return (pred.cast<double>() - target.cast<double>()).cwiseAbs().sum() / static_cast<double>(pred.size());
}

namespace {

// Mean L1 over a dataset in inference mode, chunked to bound memory.
double dataset_loss(const MlpParams<float>& p, const MatT<float>& encoded, const ClearanceDataset& data) {
  if (data.size() == 0) return 0.0;
  constexpr Eigen::Index kChunk = 1000;
  double sum = 0.0;
  for (Eigen::Index b = 0; b < encoded.cols(); b += kChunk) {
    const Eigen::Index n = std::min(kChunk, encoded.cols() - b);
    const MatT<float> out = mlp_infer(p, MatT<float>(encoded.middleCols(b, n)));
    // Row-major S x V rows [b, b + n) are the same bytes as a column-major V x n block.
    const Eigen::Map<const MatT<float>> target(data.clearance.row(b).data(), data.voxels, n);
    sum += (out - target).cast<double>().cwiseAbs().sum();
  }
  return sum / (static_cast<double>(data.size()) * data.voxels);
}

void check_dataset(const ClearanceDataset& d, const char* name) {
  if (d.q.rows() != d.clearance.rows() || d.q.cols() != d.dof || d.clearance.cols() != d.voxels)
    throw InvalidArgument(std::string("train: ") + name + " set has inconsistent shapes");
}

}  // namespace

TrainResult train(const ClearanceDataset& train_set, const ClearanceDataset& val_set, const TrainConfig& cfg,
                  const EpochCallback& on_epoch) {
  if (train_set.size() == 0) throw InvalidArgument("train: empty training set");
  if (!(cfg.learning_rate > 0.0)) throw InvalidArgument("train: learning_rate must be > 0");
  if (cfg.batch_size < 1) throw InvalidArgument("train: batch_size must be >= 1");
  if (cfg.epochs < 0) throw InvalidArgument("train: epochs must be >= 0");
  check_dataset(train_set, "training");
  check_dataset(val_set, "validation");
  if (val_set.size() > 0 &&
      (val_set.robot_signature != train_set.robot_signature || val_set.grid_signature != train_set.grid_signature ||
       val_set.dof != train_set.dof || val_set.voxels != train_set.voxels))
    throw InvalidArgument("train: training and validation sets are bound to different robots or grids");

  CfnArchitecture arch = cfg.arch;
  arch.dropout = cfg.dropout;
  TrainResult result;
  result.weights = CfnWeights::initialize(arch, train_set.dof, train_set.voxels, train_set.robot_signature,
                                          train_set.grid_signature, cfg.seed);
  auto& params = result.weights.params;
  const int levels = arch.encoding_levels;

  const MatT<float> train_enc = encode_joints<float>(train_set.q, levels);
  const MatT<float> val_enc = encode_joints<float>(val_set.q, levels);

  const AdamConfig adam{cfg.learning_rate, cfg.adam_beta1, cfg.adam_beta2, cfg.adam_epsilon};
  auto state = AdamState<float>::for_params(params);
  MlpParams<float> grads = params.zeros_like();
  MlpCache<float> cache;
  MatT<float> d_out;

  std::mt19937_64 shuffle_rng(cfg.seed ^ 0x9e3779b97f4a7c15ULL);
  std::mt19937_64 dropout_rng(cfg.seed ^ 0xd1b54a32d192ed03ULL);
  std::vector<int> order(static_cast<std::size_t>(train_set.size()));
  std::iota(order.begin(), order.end(), 0);

#if defined(__SSE__)
  // Subnormal floats show up mid-training and make every epoch several times slower on x86.
  const unsigned saved_csr = _mm_getcsr();
  _mm_setcsr(saved_csr | 0x8040);  // flush-to-zero | denormals-are-zero
  struct RestoreCsr {
    unsigned csr;
    ~RestoreCsr() { _mm_setcsr(csr); }
  } restore{saved_csr};
#endif
  const auto t_start = std::chrono::steady_clock::now();
  auto elapsed = [&] { return std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count(); };

  EpochStats initial{0, dataset_loss(params, train_enc, train_set), dataset_loss(params, val_enc, val_set), 0, 0.0};
  result.history.push_back(initial);
  if (on_epoch) on_epoch(initial);

  const int batch = cfg.batch_size;
  const int V = train_set.voxels;
  const Eigen::Index E = train_enc.rows();
  MatT<float> xb;
  MatT<float> yb;
  long step = 0;
  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), shuffle_rng);
    double loss_sum = 0.0;
    long batches = 0;
    for (std::size_t b = 0; b < order.size(); b += static_cast<std::size_t>(batch)) {
      const auto n = static_cast<Eigen::Index>(std::min<std::size_t>(static_cast<std::size_t>(batch), order.size() - b));
      xb.resize(E, n);
      yb.resize(V, n);
      for (Eigen::Index c = 0; c < n; ++c) {
        const int idx = order[b + static_cast<std::size_t>(c)];
        xb.col(c) = train_enc.col(idx);
        yb.col(c) = train_set.clearance.row(idx).transpose();
      }
      mlp_forward(params, xb, true, &dropout_rng, cache);
      const double loss = l1_loss_with_grad(cache.output, yb, &d_out);
      if (!std::isfinite(loss)) {
        std::ostringstream msg;
        msg << "train: non-finite loss at epoch " << epoch << ", batch " << batches << " (step " << step + 1
            << "); lower the learning rate or inspect the dataset";
        throw std::runtime_error(msg.str());
      }
      mlp_backward(params, cache, d_out, grads);
      adam_step(params, grads, state, ++step, adam);
      loss_sum += loss;
      ++batches;
    }
    EpochStats s{epoch, loss_sum / static_cast<double>(batches), dataset_loss(params, val_enc, val_set), step,
                 elapsed()};
    result.history.push_back(s);
    if (on_epoch) on_epoch(s);
  }
  return result;
}

double ClassifierReport::precision() const {
  const auto denom = true_positive + false_positive;
  return denom == 0 ? 1.0 : static_cast<double>(true_positive) / static_cast<double>(denom);
}

double ClassifierReport::recall() const {
  const auto denom = true_positive + false_negative;
  return denom == 0 ? 1.0 : static_cast<double>(true_positive) / static_cast<double>(denom);
}

ClassifierReport evaluate_classifier(const ClearanceMatrix& predicted, const ClearanceMatrix& exact, double threshold) {
  if (threshold < 0.0) throw InvalidArgument("evaluate_classifier: threshold must be >= 0");
  if (predicted.rows() != exact.rows() || predicted.cols() != exact.cols())
    throw InvalidArgument("evaluate_classifier: shape mismatch");
  ClassifierReport r;
  r.threshold = threshold;
  for (Eigen::Index i = 0; i < predicted.size(); ++i) {
    const bool pred = static_cast<double>(predicted.data()[i]) < threshold;
    const bool actual = exact.data()[i] < 0.0f;
    if (pred && actual) ++r.true_positive;
    else if (pred) ++r.false_positive;
    else if (actual) ++r.false_negative;
    else ++r.true_negative;
  }
  return r;
}

ClassifierReport evaluate_classifier(const CfnWeights& w, const ClearanceDataset& test_set, double threshold) {
  if (test_set.voxels != w.voxels || test_set.dof != w.dof || test_set.grid_signature != w.grid_signature ||
      test_set.robot_signature != w.robot_signature)
    throw SignatureMismatch("evaluate_classifier: test set bound to a different robot or grid");
  return evaluate_classifier(forward_batch(w, test_set.q), test_set.clearance, threshold);
}

namespace {

constexpr char kWeightsMagic[4] = {'C', 'F', 'N', '1'};
constexpr std::uint32_t kWeightsVersion = 1;

void write_matrix(binio::Writer& w, Fnv1a& sum, const MatT<float>& m) {
  // Row-major on disk.
  const Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> rm = m;
  w.f32_array(rm.data(), static_cast<std::size_t>(rm.size()));
  sum.add_bytes(rm.data(), static_cast<std::size_t>(rm.size()) * sizeof(float));
}

MatT<float> read_matrix(binio::Reader& r, Fnv1a& sum, Eigen::Index rows, Eigen::Index cols) {
  Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> rm(rows, cols);
  r.f32_array(rm.data(), static_cast<std::size_t>(rm.size()));
  sum.add_bytes(rm.data(), static_cast<std::size_t>(rm.size()) * sizeof(float));
  return rm;
}

}  // namespace

void save_weights(const CfnWeights& w, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot write " + path);
  binio::Writer bw(out);
  const auto& p = w.params;
  bw.bytes(kWeightsMagic, 4);
  bw.u32(kWeightsVersion);
  bw.u32(static_cast<std::uint32_t>(w.dof));
  bw.u32(static_cast<std::uint32_t>(w.voxels));
  bw.u32(static_cast<std::uint32_t>(w.encoding_levels));
  bw.u32(static_cast<std::uint32_t>(p.hidden_layers()));
  for (int k = 0; k < p.hidden_layers(); ++k) bw.u32(static_cast<std::uint32_t>(p.weights[static_cast<std::size_t>(k)].rows()));
  bw.u32(static_cast<std::uint32_t>(p.skip_after));
  bw.f32(p.dropout);
  bw.u64(w.robot_signature);
  bw.u64(w.grid_signature);
  Fnv1a sum;
  for (std::size_t k = 0; k < p.weights.size(); ++k) {
    write_matrix(bw, sum, p.weights[k]);
    write_matrix(bw, sum, p.biases[k]);
  }
  write_matrix(bw, sum, p.skip);
  bw.u64(sum.value());
  if (!out) throw FormatError("write failed for " + path);
}

CfnWeights load_weights(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open " + path);
  binio::Reader r(in, path);
  char magic[4];
  r.bytes(magic, 4);
  if (std::memcmp(magic, kWeightsMagic, 4) != 0) throw FormatError(path + ": not a CFN weights file");
  if (r.u32() != kWeightsVersion) throw FormatError(path + ": unsupported weights version");
  CfnWeights w;
  w.dof = static_cast<int>(r.u32());
  w.voxels = static_cast<int>(r.u32());
  w.encoding_levels = static_cast<int>(r.u32());
  const auto hidden = r.u32();
  if (w.dof < 1 || w.voxels < 1 || w.encoding_levels < 1 || w.encoding_levels > 16 || hidden < 1 || hidden > 64)
    throw FormatError(path + ": implausible header");
  std::vector<int> widths;
  for (std::uint32_t k = 0; k < hidden; ++k) {
    const auto h = r.u32();
    if (h < 1 || h > (1u << 16)) throw FormatError(path + ": implausible layer width");
    widths.push_back(static_cast<int>(h));
  }
  MlpParams<float> p;
  p.skip_after = static_cast<int>(r.u32());
  p.dropout = r.f32();
  if (p.skip_after < 1 || p.skip_after > static_cast<int>(hidden)) throw FormatError(path + ": bad skip layer");
  w.robot_signature = r.u64();
  w.grid_signature = r.u64();
  Fnv1a sum;
  int fan_in = w.input_dim();
  for (int h : widths) {
    p.weights.push_back(read_matrix(r, sum, h, fan_in));
    p.biases.push_back(read_matrix(r, sum, h, 1));
    fan_in = h;
  }
  p.weights.push_back(read_matrix(r, sum, w.voxels, fan_in));
  p.biases.push_back(read_matrix(r, sum, w.voxels, 1));
  p.skip = read_matrix(r, sum, widths[static_cast<std::size_t>(p.skip_after - 1)], w.input_dim());
  if (r.u64() != sum.value()) throw FormatError(path + ": checksum mismatch");
  if (!r.at_eof()) throw FormatError(path + ": trailing bytes after payload");
  w.params = std::move(p);
  return w;
}

CfnWeights load_weights(const std::string& path, const RobotModel& model, const VoxelGrid& grid) {
  CfnWeights w = load_weights(path);
  w.check_binding(model, grid);
  return w;
}

CfnClearance::CfnClearance(CfnWeights w, const RobotModel& model, const VoxelGrid& grid) : weights_(std::move(w)) {
  weights_.check_binding(model, grid);
}

ClearanceMatrix CfnClearance::infer(const ConfigMatrix& q) const { return forward_batch(weights_, q); }

ClearanceMatrix CfnClearance::infer_columns(const ConfigMatrix& q, std::span<const int> columns) const {
  check_input(weights_, q);
  if (q.rows() == 0 || columns.empty()) return ClearanceMatrix(q.rows(), static_cast<Eigen::Index>(columns.size()));
  const MatT<float> enc = encode_joints<float>(q, weights_.encoding_levels);
  return mlp_infer(weights_.params, enc, columns).transpose();
}

}  // namespace rtsmooth
