#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "nrp/corpus.hpp"
#include "nrp/model_baseline.hpp"
#include "nrp/model_nrp.hpp"

namespace nrp {

struct EvalConfigSnapshot {
  ModelKind kind = ModelKind::Baseline;
  uint32_t k = 0;
  uint32_t s = 0;
  RiMode mode = RiMode::Ternary;
  std::size_t m = 0;
  std::size_t h = 0;
  std::size_t n = 0;
  double dropout = 0.0;
  uint64_t seed = 0;
};

struct EvalReport {
  double mean_batch_ppl = 0.0;
  double corpus_ppl = 0.0;
  std::size_t token_count = 0;
  uint64_t param_count = 0;
  EvalConfigSnapshot config;
};

// Two perplexity readings accumulate side by side. corpus_ppl exponentiates
// the mean per-window NLL over everything and is batch-layout invariant;
// mean_batch_ppl averages per-batch perplexities arithmetically. The
// batch-averaged one is what drives early stopping and the result tables,
// the corpus one is the standard comparable figure.
class PplAccumulator {
 public:
  template <typename T>
  void add_batch(const Matrix<T>& probs, const std::vector<uint32_t>& targets) {
    if (probs.rows != targets.size())
      throw std::invalid_argument("PplAccumulator::add_batch: batch size mismatch");
    if (targets.empty()) return;
    double batch_nll = 0.0;
    for (std::size_t b = 0; b < probs.rows; ++b)
      batch_nll += cross_entropy(probs.row(b), probs.cols, targets[b]);
    nll_sum_ += batch_nll;
    window_count_ += targets.size();
    batch_ppl_sum_ += std::exp(batch_nll / static_cast<double>(targets.size()));
    batch_count_ += 1;
  }

  std::size_t window_count() const { return window_count_; }

  double corpus_ppl() const {
    if (window_count_ == 0) throw std::logic_error("PplAccumulator: no windows accumulated");
    return std::exp(nll_sum_ / static_cast<double>(window_count_));
  }

  double mean_batch_ppl() const {
    if (batch_count_ == 0) throw std::logic_error("PplAccumulator: no batches accumulated");
    return batch_ppl_sum_ / static_cast<double>(batch_count_);
  }

 private:
  double nll_sum_ = 0.0;
  double batch_ppl_sum_ = 0.0;
  std::size_t window_count_ = 0;
  std::size_t batch_count_ = 0;
};

// Dropout-free evaluation over all batches. The config snapshot is filled
// from the model; dropout and seed are the caller's to stamp.
template <typename Model>
EvalReport perplexity(Model& model, const std::vector<NGramBatch>& batches) {
  if (batches.empty()) throw std::invalid_argument("perplexity: empty batch set");
  PplAccumulator acc;
  for (const auto& batch : batches) acc.add_batch(model.eval_probs(batch), batch.targets);
  EvalReport report;
  report.mean_batch_ppl = acc.mean_batch_ppl();
  report.corpus_ppl = acc.corpus_ppl();
  report.token_count = acc.window_count();
  report.param_count = model.param_count();
  const auto& p = model.params();
  report.config.kind = Model::kind();
  report.config.m = p.m();
  report.config.h = p.h();
  report.config.n = p.n;
  if constexpr (Model::kind() == ModelKind::Nrp) {
    report.config.k = p.lookup.k();
    report.config.s = p.lookup.s();
    report.config.mode = p.lookup.mode();
  }
  return report;
}

// Validation perplexity used between epochs: just the batch-averaged
// measure, skipping the report plumbing.
template <typename Model>
double validation_ppl(Model& model, const std::vector<NGramBatch>& batches) {
  if (batches.empty()) throw std::invalid_argument("validation_ppl: empty batch set");
  PplAccumulator acc;
  for (const auto& batch : batches) acc.add_batch(model.eval_probs(batch), batch.targets);
  return acc.mean_batch_ppl();
}

}  // namespace nrp
