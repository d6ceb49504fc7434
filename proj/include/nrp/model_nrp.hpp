#pragma once

#include <algorithm>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "nrp/model_core.hpp"
#include "nrp/random_index.hpp"

namespace nrp {

// Random-projection variant: words have no rows of their own. Each word w
// owns a fixed sparse index r_w of dimension k (k < |V|), and its feature
// vector is the signed sum of the F rows at r_w's non-zero positions. The
// scoring table F' = R F (one composed row per word) replaces F on both the
// input and the output side of the shared trunk.
template <typename T>
struct NRPParams {
  Matrix<T> F;
  Matrix<T> Wh, bh, Wy, by;
  std::size_t n = 0;
  Activation activation = Activation::Relu;
  RandomIndexLookup lookup;

  std::size_t k() const { return F.rows; }
  std::size_t m() const { return F.cols; }
  std::size_t h() const { return Wh.cols; }
  uint64_t param_count() const { return param_count_formula(F.rows, F.cols, n, Wh.cols); }
};

// Same formula as the baseline with k in place of |V|; the random index
// table is fixed and does not count.
inline uint64_t nrp_param_count(uint64_t k, uint64_t m, uint64_t n, uint64_t h) {
  return param_count_formula(k, m, n, h);
}

template <typename T>
NRPParams<T> init_nrp_params(uint32_t k, uint32_t s, RiMode mode, std::size_t vocab,
                             std::size_t m, std::size_t h, std::size_t n, Activation act,
                             uint64_t init_seed, uint64_t index_seed) {
  if (vocab < 1 || m < 1 || h < 1 || n < 2)
    throw std::invalid_argument("init_nrp_params: need vocab,m,h >= 1 and n >= 2");
  NRPParams<T> p{{}, {}, {}, {}, {}, n, act, RandomIndexLookup(k, s, mode, index_seed)};
  p.F.resize(k, m);
  p.Wh.resize((n - 1) * m, h);
  p.bh.resize(1, h);
  p.Wy.resize(h, m);
  p.by.resize(1, m);
  Rng rng(init_seed);
  init_params(p.F, InitScheme::UniformRange, rng);
  init_params(p.Wh, InitScheme::He, rng, (n - 1) * m);
  init_params(p.Wy, InitScheme::UniformRange, rng);
  p.lookup.ensure(vocab);
  return p;
}

// out = sum over positive positions of F_c minus sum over negative
// positions, positives first, both in ascending position order.
template <typename T>
void compose_row(const Matrix<T>& F, const RandomIndex& ri, T* out) {
  if (ri.k != F.rows)
    throw std::invalid_argument("compose_row: index dimension " + std::to_string(ri.k) +
                                " does not match F rows " + std::to_string(F.rows));
  const std::size_t m = F.cols;
  for (std::size_t j = 0; j < m; ++j) out[j] = T(0);
  for (uint32_t c : ri.positive_positions) {
    const T* src = F.row(c);
    for (std::size_t j = 0; j < m; ++j) out[j] += src[j];
  }
  for (uint32_t c : ri.negative_positions) {
    const T* src = F.row(c);
    for (std::size_t j = 0; j < m; ++j) out[j] -= src[j];
  }
}

// Composed features for a batch of indices; O(batch * s * m), never
// touching the k dimension densely.
template <typename T>
Matrix<T> compose_features(const Matrix<T>& F, const std::vector<RandomIndex>& indices) {
  Matrix<T> out(indices.size(), F.cols);
  for (std::size_t b = 0; b < indices.size(); ++b) compose_row(F, indices[b], out.row(b));
  return out;
}

// F' = R F: row j is word j's composed feature. Rebuilt from the current F
// on every forward pass since F moves every step.
template <typename T>
void output_feature_table(const NRPParams<T>& p, std::size_t vocab_size, Matrix<T>& fprime) {
  if (p.lookup.size() < vocab_size)
    throw std::runtime_error("output_feature_table: lookup holds " +
                             std::to_string(p.lookup.size()) + " indices, need " +
                             std::to_string(vocab_size));
  fprime.resize(vocab_size, p.F.cols);
  const std::ptrdiff_t nv = static_cast<std::ptrdiff_t>(vocab_size);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t j = 0; j < nv; ++j)
    compose_row(p.F, p.lookup.at(static_cast<uint32_t>(j)),
                fprime.row(static_cast<std::size_t>(j)));
}

template <typename T>
Matrix<T> output_feature_table(const NRPParams<T>& p, std::size_t vocab_size) {
  Matrix<T> fprime;
  output_feature_table(p, vocab_size, fprime);
  return fprime;
}

// Transposed view of the index table over words [0, vocab_size): for each
// position c, the words whose index has a non-zero at c, with its sign.
// CSR-style storage; words ascend within a position so the backward
// reduction order is fixed.
struct RiInverseIndex {
  uint32_t k = 0;
  std::size_t word_count = 0;
  std::vector<uint32_t> offsets;
  std::vector<uint32_t> words;
  std::vector<int8_t> signs;
};

inline RiInverseIndex build_inverse_index(const RandomIndexLookup& lookup,
                                          std::size_t vocab_size) {
  if (lookup.size() < vocab_size)
    throw std::runtime_error("build_inverse_index: lookup holds " +
                             std::to_string(lookup.size()) + " indices, need " +
                             std::to_string(vocab_size));
  RiInverseIndex inv;
  inv.k = lookup.k();
  inv.word_count = vocab_size;
  std::vector<uint32_t> counts(lookup.k(), 0);
  for (std::size_t j = 0; j < vocab_size; ++j) {
    const RandomIndex& ri = lookup.at(static_cast<uint32_t>(j));
    for (uint32_t c : ri.positive_positions) ++counts[c];
    for (uint32_t c : ri.negative_positions) ++counts[c];
  }
  inv.offsets.assign(lookup.k() + 1, 0);
  for (uint32_t c = 0; c < lookup.k(); ++c) inv.offsets[c + 1] = inv.offsets[c] + counts[c];
  inv.words.resize(inv.offsets.back());
  inv.signs.resize(inv.offsets.back());
  std::vector<uint32_t> cursor(inv.offsets.begin(), inv.offsets.end() - 1);
  for (std::size_t j = 0; j < vocab_size; ++j) {
    const RandomIndex& ri = lookup.at(static_cast<uint32_t>(j));
    for (uint32_t c : ri.positive_positions) {
      inv.words[cursor[c]] = static_cast<uint32_t>(j);
      inv.signs[cursor[c]++] = 1;
    }
    for (uint32_t c : ri.negative_positions) {
      inv.words[cursor[c]] = static_cast<uint32_t>(j);
      inv.signs[cursor[c]++] = -1;
    }
  }
  return inv;
}

// dF = R^T dF': row c of dF accumulates the signed dF' rows of every word
// whose index touches position c. Rows are independent, so this is the one
// parallel reduction-free spot on the backward path.
template <typename T>
void backprop_through_indices(const RiInverseIndex& inv, const Matrix<T>& dfprime,
                              Matrix<T>& dF) {
  if (dfprime.rows != inv.word_count)
    throw std::invalid_argument("backprop_through_indices: word count mismatch");
  dF.resize(inv.k, dfprime.cols);
  const std::size_t m = dfprime.cols;
  const std::ptrdiff_t nk = static_cast<std::ptrdiff_t>(inv.k);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t c = 0; c < nk; ++c) {
    T* dst = dF.row(static_cast<std::size_t>(c));
    for (uint32_t slot = inv.offsets[c]; slot < inv.offsets[c + 1]; ++slot) {
      const T* src = dfprime.row(inv.words[slot]);
      if (inv.signs[slot] > 0)
        for (std::size_t j = 0; j < m; ++j) dst[j] += src[j];
      else
        for (std::size_t j = 0; j < m; ++j) dst[j] -= src[j];
    }
  }
}

template <typename T>
struct NrpCache {
  Matrix<T> fprime;
  detail::TrunkCache<T> trunk;
};

// Identical trunk to the baseline; the embedding lookup becomes a gather
// from F' and the output energies score against F'.
template <typename T>
void forward(const NRPParams<T>& p, std::size_t vocab_size, const NGramBatch& batch,
             double dropout_p, bool dropout_output, Rng& rng, bool training,
             NrpCache<T>& cache) {
  if (batch.n != p.n)
    throw std::invalid_argument("forward: batch window size " + std::to_string(batch.n) +
                                " does not match model n " + std::to_string(p.n));
  output_feature_table(p, vocab_size, cache.fprime);
  detail::gather_rows(cache.fprime, batch.contexts, batch.size(), p.n - 1, cache.trunk.feats);
  detail::trunk_forward(p.Wh, p.bh, p.Wy, p.by, p.activation, cache.fprime, dropout_p,
                        dropout_output, rng, training, cache.trunk);
}

// F receives two contributions through F': the dense output-energy term
// (dlogits^T fhat, every word row) and the sparse input-lookup term
// (context rows only), both pulled back through R^T. ablate_output_grad
// drops the dense term; it exists so tests can observe pure lookup-path
// update locality.
template <typename T>
double loss_and_backward(const NRPParams<T>& p, std::size_t vocab_size,
                         const RiInverseIndex& inv, const NGramBatch& batch, double dropout_p,
                         bool dropout_output, Rng& rng, Gradients<T>& grads, NrpCache<T>& cache,
                         Matrix<T>& dfprime, Matrix<T>& scratch_bm, Matrix<T>& scratch_bh,
                         Matrix<T>& dfeats, bool ablate_output_grad = false) {
  forward(p, vocab_size, batch, dropout_p, dropout_output, rng, true, cache);
  const double loss = detail::mean_nll(cache.trunk.probs, batch.targets);
  detail::probs_to_dlogits(cache.trunk.probs, batch.targets);
  detail::trunk_backward(p.Wh, p.Wy, p.activation, cache.fprime, dropout_p, cache.trunk,
                         dfprime, grads.Wh, grads.bh, grads.Wy, grads.by, dfeats, scratch_bm,
                         scratch_bh);
  if (ablate_output_grad) dfprime.fill(T(0));
  detail::scatter_add_rows(dfprime, dfeats, batch.contexts, batch.size(), p.n - 1);
  backprop_through_indices(inv, dfprime, grads.F);
  return loss;
}

template <typename T>
double loss_and_backward(const NRPParams<T>& p, std::size_t vocab_size,
                         const RiInverseIndex& inv, const NGramBatch& batch, double dropout_p,
                         bool dropout_output, Rng& rng, Gradients<T>& grads,
                         bool ablate_output_grad = false) {
  NrpCache<T> cache;
  Matrix<T> dfprime, scratch_bm, scratch_bh, dfeats;
  return loss_and_backward(p, vocab_size, inv, batch, dropout_p, dropout_output, rng, grads,
                           cache, dfprime, scratch_bm, scratch_bh, dfeats, ablate_output_grad);
}

// Wrapper owning reusable buffers plus the inverse index. Word ids beyond
// the current vocabulary are admitted on sight: they draw a fresh random
// index and join the scoring table immediately.
template <typename T>
class NRPModel {
 public:
  NRPModel(uint32_t k, uint32_t s, RiMode mode, std::size_t vocab, std::size_t m, std::size_t h,
           std::size_t n, Activation act, uint64_t init_seed, uint64_t index_seed)
      : params_(init_nrp_params<T>(k, s, mode, vocab, m, h, n, act, init_seed, index_seed)),
        vocab_size_(vocab) {}
  NRPModel(NRPParams<T> params, std::size_t vocab_size)
      : params_(std::move(params)), vocab_size_(vocab_size) {
    params_.lookup.ensure(vocab_size_);
  }

  static constexpr ModelKind kind() { return ModelKind::Nrp; }
  const NRPParams<T>& params() const { return params_; }
  NRPParams<T>& params() { return params_; }
  std::size_t vocab_size() const { return vocab_size_; }
  uint64_t param_count() const { return params_.param_count(); }

  void ensure_vocab(std::size_t vocab) {
    if (vocab <= vocab_size_) return;
    params_.lookup.ensure(vocab);
    vocab_size_ = vocab;
  }

  double train_step(const NGramBatch& batch, double lr, double clip_threshold, double dropout_p,
                    bool dropout_output, Rng& dropout_rng) {
    admit_new_words(batch);
    refresh_inverse_index();
    const double loss =
        loss_and_backward(params_, vocab_size_, inv_, batch, dropout_p, dropout_output,
                          dropout_rng, grads_, cache_, dfprime_, scratch_bm_, scratch_bh_,
                          dfeats_, false);
    clip_all(grads_, clip_threshold);
    sgd_all(params_, grads_, lr);
    return loss;
  }

  const Matrix<T>& eval_probs(const NGramBatch& batch) {
    admit_new_words(batch);
    Rng unused(0);
    forward(params_, vocab_size_, batch, 0.0, false, unused, false, cache_);
    return cache_.trunk.probs;
  }

 private:
  void admit_new_words(const NGramBatch& batch) {
    uint32_t max_id = 0;
    for (uint32_t id : batch.contexts) max_id = std::max(max_id, id);
    for (uint32_t id : batch.targets) max_id = std::max(max_id, id);
    ensure_vocab(static_cast<std::size_t>(max_id) + 1);
  }

  void refresh_inverse_index() {
    if (inv_.word_count != vocab_size_ || inv_.k != params_.lookup.k())
      inv_ = build_inverse_index(params_.lookup, vocab_size_);
  }

  NRPParams<T> params_;
  std::size_t vocab_size_;
  RiInverseIndex inv_;
  Gradients<T> grads_;
  NrpCache<T> cache_;
  Matrix<T> dfprime_, scratch_bm_, scratch_bh_, dfeats_;
};

}  // namespace nrp
