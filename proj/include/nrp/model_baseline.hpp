#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

#include "nrp/model_core.hpp"

namespace nrp {

// Energy-based feedforward n-gram model over a 1-of-V encoding. One
// embedding table F serves both ends: the n-1 context rows are concatenated
// and pushed through the hidden layer to predict a feature vector fhat, and
// the same F scores fhat against every word, softmax-normalized:
//   f = [F_{w_1} .. F_{w_{n-1}}], h = act(Wh f + bh), fhat = Wy h + by,
//   logit_j = fhat . F_j.
// Logits carry no frequency-based bias terms.
template <typename T>
struct BaselineParams {
  Matrix<T> F;
  Matrix<T> Wh, bh, Wy, by;
  std::size_t n = 0;
  Activation activation = Activation::Relu;

  std::size_t vocab_size() const { return F.rows; }
  std::size_t m() const { return F.cols; }
  std::size_t h() const { return Wh.cols; }
  uint64_t param_count() const { return param_count_formula(F.rows, F.cols, n, Wh.cols); }
};

inline uint64_t baseline_param_count(uint64_t vocab, uint64_t m, uint64_t n, uint64_t h) {
  return param_count_formula(vocab, m, n, h);
}

// F and Wy uniform in [-0.01, 0.01]; Wh gets He init (it feeds the
// nonlinearity), fan_in (n-1)m; biases zero. Draw order: F, Wh, Wy.
template <typename T>
BaselineParams<T> init_baseline_params(std::size_t vocab, std::size_t m, std::size_t h,
                                       std::size_t n, Activation act, uint64_t init_seed) {
  if (vocab < 1 || m < 1 || h < 1 || n < 2)
    throw std::invalid_argument("init_baseline_params: need vocab,m,h >= 1 and n >= 2");
  BaselineParams<T> p;
  p.n = n;
  p.activation = act;
  p.F.resize(vocab, m);
  p.Wh.resize((n - 1) * m, h);
  p.bh.resize(1, h);
  p.Wy.resize(h, m);
  p.by.resize(1, m);
  Rng rng(init_seed);
  init_params(p.F, InitScheme::UniformRange, rng);
  init_params(p.Wh, InitScheme::He, rng, (n - 1) * m);
  init_params(p.Wy, InitScheme::UniformRange, rng);
  return p;
}

// Probabilities land in cache.probs (batch x |V|), the predicted feature
// vectors in cache.fhat (batch x m). Dropout touches the concatenated
// context features and the hidden activation in training mode only;
// dropout_output extends it to the predicted feature vector.
template <typename T>
void forward(const BaselineParams<T>& p, const NGramBatch& batch, double dropout_p,
             bool dropout_output, Rng& rng, bool training, detail::TrunkCache<T>& cache) {
  if (batch.n != p.n)
    throw std::invalid_argument("forward: batch window size " + std::to_string(batch.n) +
                                " does not match model n " + std::to_string(p.n));
  detail::gather_rows(p.F, batch.contexts, batch.size(), p.n - 1, cache.feats);
  detail::trunk_forward(p.Wh, p.bh, p.Wy, p.by, p.activation, p.F, dropout_p, dropout_output,
                        rng, training, cache);
}

// Mean cross-entropy over the batch plus gradients for all five tensors.
// F's gradient combines the output-energy path (every row) and the input
// lookup path (context rows only).
template <typename T>
double loss_and_backward(const BaselineParams<T>& p, const NGramBatch& batch, double dropout_p,
                         bool dropout_output, Rng& rng, Gradients<T>& grads,
                         detail::TrunkCache<T>& cache, Matrix<T>& scratch_bm,
                         Matrix<T>& scratch_bh, Matrix<T>& dfeats) {
  forward(p, batch, dropout_p, dropout_output, rng, true, cache);
  const double loss = detail::mean_nll(cache.probs, batch.targets);
  detail::probs_to_dlogits(cache.probs, batch.targets);
  detail::trunk_backward(p.Wh, p.Wy, p.activation, p.F, dropout_p, cache, grads.F, grads.Wh,
                         grads.bh, grads.Wy, grads.by, dfeats, scratch_bm, scratch_bh);
  detail::scatter_add_rows(grads.F, dfeats, batch.contexts, batch.size(), p.n - 1);
  return loss;
}

template <typename T>
double loss_and_backward(const BaselineParams<T>& p, const NGramBatch& batch, double dropout_p,
                         bool dropout_output, Rng& rng, Gradients<T>& grads) {
  detail::TrunkCache<T> cache;
  Matrix<T> scratch_bm, scratch_bh, dfeats;
  return loss_and_backward(p, batch, dropout_p, dropout_output, rng, grads, cache, scratch_bm,
                           scratch_bh, dfeats);
}

template <typename T, typename ParamsT>
void sgd_all(ParamsT& p, const Gradients<T>& g, double lr) {
  sgd_step(p.F, g.F, lr);
  sgd_step(p.Wh, g.Wh, lr);
  sgd_step(p.bh, g.bh, lr);
  sgd_step(p.Wy, g.Wy, lr);
  sgd_step(p.by, g.by, lr);
}

// Training/evaluation wrapper owning reusable batch buffers.
template <typename T>
class BaselineModel {
 public:
  BaselineModel(std::size_t vocab, std::size_t m, std::size_t h, std::size_t n, Activation act,
                uint64_t init_seed)
      : params_(init_baseline_params<T>(vocab, m, h, n, act, init_seed)) {}
  explicit BaselineModel(BaselineParams<T> params) : params_(std::move(params)) {}

  static constexpr ModelKind kind() { return ModelKind::Baseline; }
  const BaselineParams<T>& params() const { return params_; }
  BaselineParams<T>& params() { return params_; }
  std::size_t vocab_size() const { return params_.vocab_size(); }
  uint64_t param_count() const { return params_.param_count(); }

  double train_step(const NGramBatch& batch, double lr, double clip_threshold, double dropout_p,
                    bool dropout_output, Rng& dropout_rng) {
    const double loss = loss_and_backward(params_, batch, dropout_p, dropout_output, dropout_rng,
                                          grads_, cache_, scratch_bm_, scratch_bh_, dfeats_);
    clip_all(grads_, clip_threshold);
    sgd_all(params_, grads_, lr);
    return loss;
  }

  // Dropout-free probabilities; the returned view is valid until the next
  // call on this model.
  const Matrix<T>& eval_probs(const NGramBatch& batch) {
    Rng unused(0);
    forward(params_, batch, 0.0, false, unused, false, cache_);
    return cache_.probs;
  }

 private:
  BaselineParams<T> params_;
  Gradients<T> grads_;
  detail::TrunkCache<T> cache_;
  Matrix<T> scratch_bm_, scratch_bh_, dfeats_;
};

}  // namespace nrp
