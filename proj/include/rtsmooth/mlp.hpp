#pragma once

// Fully connected ReLU network with dropout and one additive skip connection,
// trained by backpropagation. Samples are stored column-wise.

#include <random>
#include <span>
#include <vector>

#include <Eigen/Core>

namespace rtsmooth {

template <class T>
using MatT = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic>;
template <class T>
using VecT = Eigen::Matrix<T, Eigen::Dynamic, 1>;

/// Parameters of: input -> H hidden (FC, ReLU, dropout) -> linear output.
/// After hidden layer `skip_after` (1-based) the projected input `skip * x` is added.
template <class T>
struct MlpParams {
  std::vector<MatT<T>> weights;  // H + 1 matrices, out x in
  std::vector<VecT<T>> biases;   // H + 1 vectors
  MatT<T> skip;                  // hidden[skip_after - 1] x input
  int skip_after = 0;
  T dropout = T(0);

  int hidden_layers() const { return static_cast<int>(weights.size()) - 1; }
  int input_dim() const { return static_cast<int>(weights.front().cols()); }
  int output_dim() const { return static_cast<int>(weights.back().rows()); }
  std::size_t parameter_count() const;

  /// Same architecture with every tensor zeroed.
  MlpParams zeros_like() const;

  /// Visits weights[0], biases[0], ..., weights[H], biases[H], skip in that order.
  template <class F>
  void for_each_tensor(F&& f) {
    for (std::size_t k = 0; k < weights.size(); ++k) {
      f(weights[k]);
      f(biases[k]);
    }
    f(skip);
  }
  template <class F>
  void for_each_tensor(F&& f) const {
    for (std::size_t k = 0; k < weights.size(); ++k) {
      f(weights[k]);
      f(biases[k]);
    }
    f(skip);
  }

  template <class U>
  MlpParams<U> cast() const {
    MlpParams<U> out;
    for (const auto& w : weights) out.weights.push_back(w.template cast<U>());
    for (const auto& b : biases) out.biases.push_back(b.template cast<U>());
    out.skip = skip.template cast<U>();
    out.skip_after = skip_after;
    out.dropout = static_cast<U>(dropout);
    return out;
  }

  /// Uniform He initialization scaled by fan-in; biases start at zero.
  static MlpParams init(int input_dim, const std::vector<int>& hidden, int output_dim, int skip_after, T dropout,
                        std::mt19937_64& rng);
};

/// Activations kept from the forward pass for backpropagation.
template <class T>
struct MlpCache {
  MatT<T> input;
  std::vector<MatT<T>> pre;     // pre-activation per hidden layer
  std::vector<MatT<T>> mask;    // inverted-dropout scale (0 or 1/(1-p)); empty in inference
  std::vector<MatT<T>> act;     // output of each hidden layer, including the skip term
  MatT<T> output;
};

/// Training mode draws dropout masks from rng; inference mode ignores rng.
template <class T>
void mlp_forward(const MlpParams<T>& p, const MatT<T>& input, bool training, std::mt19937_64* rng, MlpCache<T>& cache);

/// Inference only; when `rows` is non-empty only those output rows are produced.
template <class T>
MatT<T> mlp_infer(const MlpParams<T>& p, const MatT<T>& input, std::span<const int> rows = {});

/// Accumulates nothing: overwrites `grads` with d(loss)/d(params) given d(loss)/d(output).
template <class T>
void mlp_backward(const MlpParams<T>& p, const MlpCache<T>& cache, const MatT<T>& d_output, MlpParams<T>& grads);

/// Mean absolute error and its subgradient sign(pred - target) / count.
template <class T>
double l1_loss_with_grad(const MatT<T>& pred, const MatT<T>& target, MatT<T>* grad);

struct AdamConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

/// First and second moment estimates, shaped like the parameters.
template <class T>
struct AdamState {
  MlpParams<T> m;
  MlpParams<T> v;
  long step = 0;

  static AdamState for_params(const MlpParams<T>& p) { return {p.zeros_like(), p.zeros_like(), 0}; }
};

/// One bias-corrected Adam update for step t >= 1 (state.step is set to t).
template <class T>
void adam_step(MlpParams<T>& params, const MlpParams<T>& grads, AdamState<T>& state, long t, const AdamConfig& cfg);

}  // namespace rtsmooth
