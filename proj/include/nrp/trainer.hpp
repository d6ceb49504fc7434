#pragma once

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <limits>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include "nrp/corpus.hpp"
#include "nrp/evaluation.hpp"
#include "nrp/rng.hpp"

namespace nrp {

struct TrainConfig {
  double initial_lr = 0.5;
  double lr_decay = 0.5;
  double clip_threshold = 1.0;
  std::size_t patience = 3;
  std::size_t batch_size = 128;
  std::size_t max_epochs = 50;
  double dropout_p = 0.0;
  bool dropout_output = false;
  uint64_t seed = 1;
};

inline void validate(const TrainConfig& cfg) {
  if (cfg.initial_lr <= 0.0) throw std::invalid_argument("TrainConfig: initial_lr must be > 0");
  if (cfg.lr_decay <= 0.0 || cfg.lr_decay >= 1.0)
    throw std::invalid_argument("TrainConfig: lr_decay must be in (0, 1)");
  if (cfg.clip_threshold <= 0.0)
    throw std::invalid_argument("TrainConfig: clip_threshold must be > 0");
  if (cfg.patience < 1) throw std::invalid_argument("TrainConfig: patience must be >= 1");
  if (cfg.batch_size < 1) throw std::invalid_argument("TrainConfig: batch_size must be >= 1");
  if (cfg.max_epochs < 1) throw std::invalid_argument("TrainConfig: max_epochs must be >= 1");
  if (cfg.dropout_p < 0.0 || cfg.dropout_p >= 1.0)
    throw std::invalid_argument("TrainConfig: dropout_p must be in [0, 1)");
}

struct TrainState {
  std::size_t epoch = 0;
  double lr = 0.0;
  double best_val_ppl = std::numeric_limits<double>::infinity();
  std::size_t patience_left = 0;
  bool converged = false;
};

class TrainingDiverged : public std::runtime_error {
 public:
  TrainingDiverged(std::size_t epoch, std::size_t batch_index, double lr, double loss)
      : std::runtime_error("training diverged: non-finite loss " + std::to_string(loss) +
                           " at epoch " + std::to_string(epoch) + ", batch " +
                           std::to_string(batch_index) + ", lr " + std::to_string(lr)),
        epoch(epoch),
        batch_index(batch_index),
        lr(lr) {}

  std::size_t epoch;
  std::size_t batch_index;
  double lr;
};

// One pass over the batches at the state's fixed learning rate: forward,
// backward, per-tensor norm clip, SGD step. Returns the mean of per-batch
// losses.
template <typename Model>
double train_epoch(Model& model, const std::vector<NGramBatch>& batches, TrainState& state,
                   const TrainConfig& cfg, Rng& dropout_rng) {
  if (state.converged) throw std::logic_error("train_epoch: called on a converged state");
  if (batches.empty()) throw std::invalid_argument("train_epoch: no batches");
  double loss_sum = 0.0;
  for (std::size_t i = 0; i < batches.size(); ++i) {
    const double loss = model.train_step(batches[i], state.lr, cfg.clip_threshold,
                                         cfg.dropout_p, cfg.dropout_output, dropout_rng);
    if (!std::isfinite(loss)) throw TrainingDiverged(state.epoch, i, state.lr, loss);
    loss_sum += loss;
  }
  return loss_sum / static_cast<double>(batches.size());
}

// Annealing and early-stopping bookkeeping. Improvement means strictly
// lower validation perplexity: record it, fire the checkpoint callback,
// refill patience. Anything else halves the learning rate (by lr_decay) and
// burns one patience unit; training converges when patience hits 0.
template <typename OnImprove>
void end_of_epoch(TrainState& state, double val_ppl, const TrainConfig& cfg,
                  OnImprove&& on_improve) {
  if (!(val_ppl > 0.0)) throw std::invalid_argument("end_of_epoch: val_ppl must be > 0");
  if (val_ppl < state.best_val_ppl) {
    state.best_val_ppl = val_ppl;
    state.patience_left = cfg.patience;
    on_improve(state);
  } else {
    state.lr *= cfg.lr_decay;
    state.patience_left -= 1;
    state.converged = state.patience_left == 0;
  }
}

struct EpochRecord {
  std::size_t epoch = 0;
  double lr = 0.0;
  double train_loss = 0.0;
  double val_ppl = 0.0;
  std::size_t patience_left = 0;
};

// One machine-parsable line per epoch. %.17g keeps doubles round-trippable
// so two runs can be compared byte for byte.
inline std::string format_epoch_record(const EpochRecord& r) {
  char buf[160];
  std::snprintf(buf, sizeof buf, "%zu,%.17g,%.17g,%.17g,%zu", r.epoch, r.lr, r.train_loss,
                r.val_ppl, r.patience_left);
  return buf;
}

inline constexpr const char* kEpochLogHeader = "epoch,lr,train_loss,val_ppl,patience_left";

struct TrainResult {
  TrainState state;
  std::vector<EpochRecord> history;
  std::size_t best_epoch = 0;
  double best_val_ppl = std::numeric_limits<double>::infinity();
};

// Full run: epochs of seeded-shuffled batches until convergence or the
// epoch cap. The training windows are reshuffled every epoch from a
// per-epoch seed; validation uses a fixed batch layout. on_improve(model,
// state) fires whenever validation perplexity reaches a new best, before
// the next epoch starts.
template <typename Model, typename OnImprove>
TrainResult train(Model& model, const WindowSet& train_windows,
                  const std::vector<NGramBatch>& valid_batches, const TrainConfig& cfg,
                  std::ostream* log, OnImprove&& on_improve) {
  validate(cfg);
  if (train_windows.count() == 0) throw std::invalid_argument("train: no training windows");

  const uint64_t shuffle_seed = derive_seed(cfg.seed, seed_stream::kShuffle);
  Rng dropout_rng(derive_seed(cfg.seed, seed_stream::kDropout));

  TrainResult result;
  TrainState& state = result.state;
  state.lr = cfg.initial_lr;
  state.patience_left = cfg.patience;

  if (log) *log << kEpochLogHeader << "\n";
  for (std::size_t epoch = 1; epoch <= cfg.max_epochs && !state.converged; ++epoch) {
    state.epoch = epoch;
    const double epoch_lr = state.lr;
    const auto batches =
        make_batches(train_windows, cfg.batch_size, derive_seed(shuffle_seed, epoch));
    const double train_loss = train_epoch(model, batches, state, cfg, dropout_rng);
    const double val_ppl = validation_ppl(model, valid_batches);
    end_of_epoch(state, val_ppl, cfg, [&](const TrainState& st) {
      result.best_epoch = epoch;
      result.best_val_ppl = st.best_val_ppl;
      on_improve(model, st);
    });
    result.history.push_back({epoch, epoch_lr, train_loss, val_ppl, state.patience_left});
    if (log) *log << format_epoch_record(result.history.back()) << "\n";
  }
  return result;
}

}  // namespace nrp
