#include "rtsmooth/mlp.hpp"

#include <cmath>

#include "rtsmooth/types.hpp"

namespace rtsmooth {

template <class T>
std::size_t MlpParams<T>::parameter_count() const {
  std::size_t n = 0;
  for_each_tensor([&](const auto& t) { n += static_cast<std::size_t>(t.size()); });
  return n;
}

template <class T>
MlpParams<T> MlpParams<T>::zeros_like() const {
  MlpParams out = *this;
  out.for_each_tensor([](auto& t) { t.setZero(); });
  return out;
}

template <class T>
MlpParams<T> MlpParams<T>::init(int input_dim, const std::vector<int>& hidden, int output_dim, int skip_after,
                                T dropout, std::mt19937_64& rng) {
  if (input_dim < 1 || output_dim < 1 || hidden.empty()) throw InvalidArgument("MlpParams: bad layer sizes");
  if (skip_after < 1 || skip_after > static_cast<int>(hidden.size()))
    throw InvalidArgument("MlpParams: skip layer outside hidden range");
  if (!(dropout >= T(0) && dropout < T(1))) throw InvalidArgument("MlpParams: dropout must be in [0, 1)");
  MlpParams p;
  p.skip_after = skip_after;
  p.dropout = dropout;
  auto uniform = [&](int rows, int cols) {
    const double bound = std::sqrt(6.0 / cols);
    MatT<T> m(rows, cols);
    for (Eigen::Index j = 0; j < m.cols(); ++j)
      for (Eigen::Index i = 0; i < m.rows(); ++i)
        m(i, j) = static_cast<T>((2.0 * std::generate_canonical<double, 53>(rng) - 1.0) * bound);
    return m;
  };
  int fan_in = input_dim;
  for (int h : hidden) {
    if (h < 1) throw InvalidArgument("MlpParams: hidden widths must be >= 1");
    p.weights.push_back(uniform(h, fan_in));
    p.biases.push_back(VecT<T>::Zero(h));
    fan_in = h;
  }
  p.weights.push_back(uniform(output_dim, fan_in));
  p.biases.push_back(VecT<T>::Zero(output_dim));
  p.skip = uniform(hidden[static_cast<std::size_t>(skip_after - 1)], input_dim);
  return p;
}

template <class T>
void mlp_forward(const MlpParams<T>& p, const MatT<T>& input, bool training, std::mt19937_64* rng,
                 MlpCache<T>& cache) {
  if (input.rows() != p.input_dim()) throw InvalidArgument("mlp_forward: input dimension mismatch");
  const int H = p.hidden_layers();
  const bool drop = training && p.dropout > T(0);
  if (drop && rng == nullptr) throw InvalidArgument("mlp_forward: training with dropout needs an rng");
  cache.input = input;
  cache.pre.resize(static_cast<std::size_t>(H));
  cache.act.resize(static_cast<std::size_t>(H));
  cache.mask.assign(drop ? static_cast<std::size_t>(H) : 0, MatT<T>());
  const T keep_scale = T(1) / (T(1) - p.dropout);
  std::uniform_real_distribution<double> u01(0.0, 1.0);

  const MatT<T>* prev = &cache.input;
  for (int k = 0; k < H; ++k) {
    const auto i = static_cast<std::size_t>(k);
    cache.pre[i].noalias() = p.weights[i] * *prev;
    cache.pre[i].colwise() += p.biases[i];
    cache.act[i] = cache.pre[i].cwiseMax(T(0));
    if (drop) {
      auto& m = cache.mask[i];
      m.resize(cache.pre[i].rows(), cache.pre[i].cols());
      for (Eigen::Index j = 0; j < m.size(); ++j)
        m.data()[j] = u01(*rng) < static_cast<double>(p.dropout) ? T(0) : keep_scale;
      cache.act[i] = cache.act[i].cwiseProduct(m);
    }
    if (k + 1 == p.skip_after) cache.act[i].noalias() += p.skip * cache.input;
    prev = &cache.act[i];
  }
  cache.output.noalias() = p.weights.back() * *prev;
  cache.output.colwise() += p.biases.back();
}

template <class T>
MatT<T> mlp_infer(const MlpParams<T>& p, const MatT<T>& input, std::span<const int> rows) {
  if (input.rows() != p.input_dim()) throw InvalidArgument("mlp_infer: input dimension mismatch");
  const int H = p.hidden_layers();
  MatT<T> a = input;
  MatT<T> z;
  for (int k = 0; k < H; ++k) {
    const auto i = static_cast<std::size_t>(k);
    z.noalias() = p.weights[i] * a;
    z.colwise() += p.biases[i];
    z = z.cwiseMax(T(0));
    if (k + 1 == p.skip_after) z.noalias() += p.skip * input;
    a.swap(z);
  }
  MatT<T> out;
  if (rows.empty()) {
    out.noalias() = p.weights.back() * a;
    out.colwise() += p.biases.back();
    return out;
  }
  MatT<T> w(static_cast<Eigen::Index>(rows.size()), p.weights.back().cols());
  VecT<T> b(static_cast<Eigen::Index>(rows.size()));
  for (std::size_t r = 0; r < rows.size(); ++r) {
    if (rows[r] < 0 || rows[r] >= p.output_dim()) throw InvalidArgument("mlp_infer: output row out of range");
    w.row(static_cast<Eigen::Index>(r)) = p.weights.back().row(rows[r]);
    b[static_cast<Eigen::Index>(r)] = p.biases.back()[rows[r]];
  }
  out.noalias() = w * a;
  out.colwise() += b;
  return out;
}

template <class T>
void mlp_backward(const MlpParams<T>& p, const MlpCache<T>& cache, const MatT<T>& d_output, MlpParams<T>& grads) {
  const int H = p.hidden_layers();
  if (grads.weights.size() != p.weights.size()) grads = p.zeros_like();
  const auto out = static_cast<std::size_t>(H);

  grads.weights[out].noalias() = d_output * cache.act[out - 1].transpose();
  grads.biases[out] = d_output.rowwise().sum();
  MatT<T> d_act = p.weights[out].transpose() * d_output;
  grads.skip.setZero();

  for (int k = H - 1; k >= 0; --k) {
    const auto i = static_cast<std::size_t>(k);
    if (k + 1 == p.skip_after) grads.skip.noalias() = d_act * cache.input.transpose();
    MatT<T> d_pre = d_act;
    if (!cache.mask.empty()) d_pre = d_pre.cwiseProduct(cache.mask[i]);
    d_pre = (cache.pre[i].array() > T(0)).select(d_pre, T(0));
    const MatT<T>& below = k == 0 ? cache.input : cache.act[i - 1];
    grads.weights[i].noalias() = d_pre * below.transpose();
    grads.biases[i] = d_pre.rowwise().sum();
    if (k > 0) d_act.noalias() = p.weights[i].transpose() * d_pre;
  }
}

template <class T>
double l1_loss_with_grad(const MatT<T>& pred, const MatT<T>& target, MatT<T>* grad) {
  if (pred.rows() != target.rows() || pred.cols() != target.cols())
    throw InvalidArgument("l1_loss: shape mismatch");
  const auto n = static_cast<double>(pred.size());
  if (n == 0) {
    if (grad) grad->resize(pred.rows(), pred.cols());
    return 0.0;
  }
  const MatT<T> diff = pred - target;
  if (grad) *grad = diff.unaryExpr([](T d) { return d > T(0) ? T(1) : (d < T(0) ? T(-1) : T(0)); }) / static_cast<T>(n);
  return diff.template cast<double>().cwiseAbs().sum() / n;
}

template <class T>
void adam_step(MlpParams<T>& params, const MlpParams<T>& grads, AdamState<T>& state, long t, const AdamConfig& cfg) {
  if (t < 1) throw InvalidArgument("adam_step: t must be >= 1");
  state.step = t;
  const double c1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(t));
  const double c2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(t));
  const T b1 = static_cast<T>(cfg.beta1);
  const T b2 = static_cast<T>(cfg.beta2);
  const T lr = static_cast<T>(cfg.learning_rate);
  const T eps = static_cast<T>(cfg.epsilon);
  const T inv_c1 = static_cast<T>(1.0 / c1);
  const T inv_c2 = static_cast<T>(1.0 / c2);

  auto update = [&](auto& param, const auto& grad, auto& m, auto& v) {
    auto P = param.reshaped();
    auto G = grad.reshaped();
    auto Mv = m.reshaped();
    auto Vv = v.reshaped();
    Mv = b1 * Mv + (T(1) - b1) * G;
    Vv = b2 * Vv + (T(1) - b2) * G.cwiseProduct(G);
    P.array() -= lr * (Mv.array() * inv_c1) / ((Vv.array() * inv_c2).sqrt() + eps);
  };
  for (std::size_t k = 0; k < params.weights.size(); ++k) {
    update(params.weights[k], grads.weights[k], state.m.weights[k], state.v.weights[k]);
    update(params.biases[k], grads.biases[k], state.m.biases[k], state.v.biases[k]);
  }
  update(params.skip, grads.skip, state.m.skip, state.v.skip);
}

#define RTSMOOTH_INSTANTIATE_MLP(T)                                                                             \
  template struct MlpParams<T>;                                                                                \
  template void mlp_forward<T>(const MlpParams<T>&, const MatT<T>&, bool, std::mt19937_64*, MlpCache<T>&);     \
  template MatT<T> mlp_infer<T>(const MlpParams<T>&, const MatT<T>&, std::span<const int>);                   \
  template void mlp_backward<T>(const MlpParams<T>&, const MlpCache<T>&, const MatT<T>&, MlpParams<T>&);       \
  template double l1_loss_with_grad<T>(const MatT<T>&, const MatT<T>&, MatT<T>*);                              \
  template void adam_step<T>(MlpParams<T>&, const MlpParams<T>&, AdamState<T>&, long, const AdamConfig&);

RTSMOOTH_INSTANTIATE_MLP(float)
RTSMOOTH_INSTANTIATE_MLP(double)

#undef RTSMOOTH_INSTANTIATE_MLP

}  // namespace rtsmooth
