#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "nrp/corpus.hpp"
#include "nrp/kernels.hpp"
#include "nrp/matrix.hpp"
#include "nrp/numerics.hpp"
#include "nrp/rng.hpp"

namespace nrp {

enum class ModelKind : uint32_t { Baseline = 0, Nrp = 1 };

inline ModelKind model_kind_from_string(const std::string& s) {
  if (s == "baseline") return ModelKind::Baseline;
  if (s == "nrp") return ModelKind::Nrp;
  throw std::invalid_argument("unknown model kind: " + s);
}

inline const char* to_string(ModelKind kind) {
  return kind == ModelKind::Baseline ? "baseline" : "nrp";
}

// #p = (|x| * m) + ((m * (n-1)) * h + h) + (h * m + m), where |x| is the
// vocabulary size for the baseline and k for the projected model. Random
// index tables are fixed, not trainable, and not counted.
inline uint64_t param_count_formula(uint64_t x, uint64_t m, uint64_t n, uint64_t h) {
  return x * m + (m * (n - 1)) * h + h + h * m + m;
}

// One tensor per trainable parameter; F is |V| x m for the baseline and
// k x m for the projected model.
template <typename T>
struct Gradients {
  Matrix<T> F, Wh, bh, Wy, by;
};

template <typename T>
void clip_all(Gradients<T>& g, double threshold) {
  clip_by_norm(g.F, threshold);
  clip_by_norm(g.Wh, threshold);
  clip_by_norm(g.bh, threshold);
  clip_by_norm(g.Wy, threshold);
  clip_by_norm(g.by, threshold);
}

namespace detail {

// Batch intermediates of the shared trunk
//   feats -> z = feats Wh + bh -> a = act(z) -> fhat = hidden Wy + by
//   logits = fhat_used emb^T -> probs,
// sized O(batch * ((n-1)m + h + m)) plus the batch x |V| probability block
// that forward hands back anyway. Stored values are the ones actually fed
// forward (post-dropout where dropout applies); act_out keeps the
// pre-dropout activation so derivatives can be formed from outputs.
template <typename T>
struct TrunkCache {
  Matrix<T> feats;
  std::vector<uint8_t> fmask;
  Matrix<T> act_out;
  Matrix<T> hidden;
  std::vector<uint8_t> hmask;
  Matrix<T> fhat;
  Matrix<T> fhat_used;
  std::vector<uint8_t> ymask;
  Matrix<T> logits;
  Matrix<T> probs;

  const Matrix<T>& output_features() const { return ymask.empty() ? fhat : fhat_used; }
};

// Rows of `table` indexed by ids, concatenated per example: out row b is
// table[ids[b,0]] .. table[ids[b,ctx-1]] back to back.
template <typename T>
void gather_rows(const Matrix<T>& table, const std::vector<uint32_t>& ids, std::size_t batch,
                 std::size_t ctx, Matrix<T>& out) {
  const std::size_t m = table.cols;
  for (uint32_t id : ids)
    if (id >= table.rows)
      throw std::invalid_argument("gather_rows: word id " + std::to_string(id) +
                                  " out of range (" + std::to_string(table.rows) + " rows)");
  out.resize(batch, ctx * m);
  const std::ptrdiff_t nb = static_cast<std::ptrdiff_t>(batch);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t b = 0; b < nb; ++b) {
    T* dst = out.row(static_cast<std::size_t>(b));
    for (std::size_t c = 0; c < ctx; ++c) {
      const T* src = table.row(ids[static_cast<std::size_t>(b) * ctx + c]);
      for (std::size_t j = 0; j < m; ++j) dst[c * m + j] = src[j];
    }
  }
}

// Scatter-add of concatenated feature gradients back onto table rows.
// Sequential: the same row may appear many times across the batch.
template <typename T>
void scatter_add_rows(Matrix<T>& dtable, const Matrix<T>& dfeats,
                      const std::vector<uint32_t>& ids, std::size_t batch, std::size_t ctx) {
  const std::size_t m = dtable.cols;
  for (std::size_t b = 0; b < batch; ++b) {
    const T* src = dfeats.row(b);
    for (std::size_t c = 0; c < ctx; ++c) {
      T* dst = dtable.row(ids[b * ctx + c]);
      for (std::size_t j = 0; j < m; ++j) dst[j] += src[c * m + j];
    }
  }
}

// cache.feats must hold the gathered context features; everything after the
// lookup is shared between the two models. emb is the matrix the predicted
// feature is scored against (F for the baseline, the composed table for the
// projected model). dropout_output additionally drops the predicted feature.
template <typename T>
void trunk_forward(const Matrix<T>& Wh, const Matrix<T>& bh, const Matrix<T>& Wy,
                   const Matrix<T>& by, Activation act, const Matrix<T>& emb,
                   double dropout_p, bool dropout_output, Rng& rng, bool training,
                   TrunkCache<T>& cache) {
  cache.fmask = dropout_inplace(cache.feats, dropout_p, rng, training);
  kernels::matmul(cache.feats, Wh, cache.act_out);
  kernels::add_row_vector(cache.act_out, bh);
  apply_activation(act, cache.act_out);
  cache.hidden = cache.act_out;
  cache.hmask = dropout_inplace(cache.hidden, dropout_p, rng, training);
  kernels::matmul(cache.hidden, Wy, cache.fhat);
  kernels::add_row_vector(cache.fhat, by);
  if (dropout_output) {
    cache.fhat_used = cache.fhat;
    cache.ymask = dropout_inplace(cache.fhat_used, dropout_p, rng, training);
  } else {
    cache.ymask.clear();
  }
  kernels::matmul_nt(cache.output_features(), emb, cache.logits);
  kernels::softmax_rows(cache.logits, cache.probs);
}

template <typename T>
double mean_nll(const Matrix<T>& probs, const std::vector<uint32_t>& targets) {
  if (probs.rows != targets.size())
    throw std::invalid_argument("mean_nll: batch size mismatch");
  double acc = 0.0;
  for (std::size_t b = 0; b < probs.rows; ++b)
    acc += cross_entropy(probs.row(b), probs.cols, targets[b]);
  return acc / static_cast<double>(probs.rows);
}

// Turns cache.probs into d(mean NLL)/d(logits) = (probs - onehot) / batch,
// in place. mean_nll must have been taken first.
template <typename T>
void probs_to_dlogits(Matrix<T>& probs, const std::vector<uint32_t>& targets) {
  const T inv_b = T(1) / T(probs.rows);
  const std::ptrdiff_t nb = static_cast<std::ptrdiff_t>(probs.rows);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t b = 0; b < nb; ++b) {
    T* row = probs.row(static_cast<std::size_t>(b));
    for (std::size_t j = 0; j < probs.cols; ++j) row[j] *= inv_b;
    row[targets[static_cast<std::size_t>(b)]] -= inv_b;
  }
}

// Backward of trunk_forward. cache.probs must already hold dlogits. Emits
// the gradient w.r.t. emb (dense, one row per scored word) and w.r.t. the
// gathered context features; the caller routes those into F.
template <typename T>
void trunk_backward(const Matrix<T>& Wh, const Matrix<T>& Wy, Activation act,
                    const Matrix<T>& emb, double dropout_p, TrunkCache<T>& cache,
                    Matrix<T>& demb, Matrix<T>& dWh, Matrix<T>& dbh, Matrix<T>& dWy,
                    Matrix<T>& dby, Matrix<T>& dfeats, Matrix<T>& scratch_bm,
                    Matrix<T>& scratch_bh) {
  Matrix<T>& dlogits = cache.probs;
  kernels::matmul_tn(dlogits, cache.output_features(), demb);

  Matrix<T>& dfhat = scratch_bm;
  kernels::matmul(dlogits, emb, dfhat);
  if (!cache.ymask.empty()) dropout_backward_inplace(dfhat, cache.ymask, dropout_p);

  kernels::matmul_tn(cache.hidden, dfhat, dWy);
  kernels::col_sums(dfhat, dby);

  Matrix<T>& dz = scratch_bh;
  kernels::matmul_nt(dfhat, Wy, dz);
  dropout_backward_inplace(dz, cache.hmask, dropout_p);
  for (std::size_t i = 0; i < dz.size(); ++i)
    dz.data[i] *= activation_grad_from_output(act, cache.act_out.data[i]);

  kernels::matmul_tn(cache.feats, dz, dWh);
  kernels::col_sums(dz, dbh);
  kernels::matmul_nt(dz, Wh, dfeats);
  dropout_backward_inplace(dfeats, cache.fmask, dropout_p);
}

}  // namespace detail

}  // namespace nrp
