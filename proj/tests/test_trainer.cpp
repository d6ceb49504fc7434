#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <limits>
#include <sstream>
#include <vector>

#include "doctest.h"
#include "nrp/model_baseline.hpp"
#include "nrp/trainer.hpp"

using nrp::NGramBatch;
using nrp::Rng;
using nrp::TrainConfig;
using nrp::TrainState;

namespace {

// Records what train_epoch feeds it and returns scripted losses.
struct SpyModel {
  std::vector<double> lrs;
  std::vector<double> scripted;
  std::size_t calls = 0;

  double train_step(const NGramBatch&, double lr, double, double, bool, Rng&) {
    lrs.push_back(lr);
    const double loss = scripted.empty() ? 1.0 : scripted[calls % scripted.size()];
    calls += 1;
    return loss;
  }
};

std::vector<NGramBatch> dummy_batches(std::size_t count) {
  NGramBatch b;
  b.n = 2;
  b.contexts = {0};
  b.targets = {0};
  return std::vector<NGramBatch>(count, b);
}

// ids follow a fixed affine map of the previous id, so a bigram of the
// previous word predicts the next one perfectly and training makes steady
// progress.
std::vector<uint32_t> affine_walk(std::size_t len, uint32_t vocab) {
  std::vector<uint32_t> ids(len);
  uint32_t cur = 1;
  for (auto& id : ids) {
    id = cur;
    cur = (7 * cur + 3) % vocab;
  }
  return ids;
}

}  // namespace

TEST_CASE("improvement records the best, refills patience, fires the callback") {
  TrainConfig cfg;
  cfg.patience = 3;
  TrainState st;
  st.lr = 0.5;
  st.patience_left = 3;
  int fired = 0;

  nrp::end_of_epoch(st, 150.0, cfg, [&](const TrainState& s) {
    fired += 1;
    CHECK(s.best_val_ppl == 150.0);
  });
  CHECK(fired == 1);
  CHECK(st.best_val_ppl == 150.0);
  CHECK(st.patience_left == 3);
  CHECK(st.lr == 0.5);
  CHECK_FALSE(st.converged);

  nrp::end_of_epoch(st, 160.0, cfg, [&](const TrainState&) { fired += 1; });
  CHECK(fired == 1);
  CHECK(st.lr == 0.25);
  CHECK(st.patience_left == 2);

  nrp::end_of_epoch(st, 155.0, cfg, [&](const TrainState&) { fired += 1; });
  CHECK(st.lr == 0.125);
  CHECK(st.patience_left == 1);
  CHECK_FALSE(st.converged);

  nrp::end_of_epoch(st, 140.0, cfg, [&](const TrainState&) { fired += 1; });
  CHECK(fired == 2);
  CHECK(st.best_val_ppl == 140.0);
  CHECK(st.patience_left == 3);
  CHECK(st.lr == 0.125);
}

TEST_CASE("matching the best exactly is not an improvement") {
  TrainConfig cfg;
  TrainState st;
  st.lr = 0.5;
  st.best_val_ppl = 150.0;
  st.patience_left = 3;
  nrp::end_of_epoch(st, 150.0, cfg, [](const TrainState&) { FAIL("callback fired"); });
  CHECK(st.lr == 0.25);
  CHECK(st.patience_left == 2);
}

TEST_CASE("three straight non-improvements converge at lr/8") {
  TrainConfig cfg;
  cfg.patience = 3;
  TrainState st;
  st.lr = 0.5;
  st.best_val_ppl = 100.0;
  st.patience_left = 3;
  auto noop = [](const TrainState&) {};
  nrp::end_of_epoch(st, 200.0, cfg, noop);
  CHECK_FALSE(st.converged);
  nrp::end_of_epoch(st, 200.0, cfg, noop);
  CHECK_FALSE(st.converged);
  nrp::end_of_epoch(st, 200.0, cfg, noop);
  CHECK(st.converged);
  CHECK(st.lr == doctest::Approx(0.0625));
  CHECK(st.patience_left == 0);
}

TEST_CASE("config validation rejects out-of-range values") {
  auto bad = [](auto&& mutate) {
    TrainConfig cfg;
    mutate(cfg);
    CHECK_THROWS_AS(nrp::validate(cfg), std::invalid_argument);
  };
  bad([](TrainConfig& c) { c.initial_lr = 0.0; });
  bad([](TrainConfig& c) { c.lr_decay = 0.0; });
  bad([](TrainConfig& c) { c.lr_decay = 1.0; });
  bad([](TrainConfig& c) { c.clip_threshold = 0.0; });
  bad([](TrainConfig& c) { c.patience = 0; });
  bad([](TrainConfig& c) { c.batch_size = 0; });
  bad([](TrainConfig& c) { c.max_epochs = 0; });
  bad([](TrainConfig& c) { c.dropout_p = 1.0; });
  bad([](TrainConfig& c) { c.dropout_p = -0.1; });
  CHECK_NOTHROW(nrp::validate(TrainConfig{}));
}

TEST_CASE("non-positive validation perplexity is rejected") {
  TrainConfig cfg;
  TrainState st;
  st.lr = 0.5;
  st.patience_left = 3;
  auto noop = [](const TrainState&) {};
  CHECK_THROWS_AS(nrp::end_of_epoch(st, 0.0, cfg, noop), std::invalid_argument);
  CHECK_THROWS_AS(nrp::end_of_epoch(st, -3.0, cfg, noop), std::invalid_argument);
}

TEST_CASE("the learning rate is frozen for the whole epoch") {
  SpyModel spy;
  TrainConfig cfg;
  TrainState st;
  st.lr = 0.125;
  st.patience_left = 3;
  Rng rng(1);
  const auto batches = dummy_batches(7);
  const double mean = nrp::train_epoch(spy, batches, st, cfg, rng);
  CHECK(mean == doctest::Approx(1.0));
  REQUIRE(spy.lrs.size() == 7);
  for (double lr : spy.lrs) CHECK(lr == 0.125);
}

TEST_CASE("a non-finite loss aborts the epoch with coordinates attached") {
  SpyModel spy;
  spy.scripted = {1.0, 1.0, std::numeric_limits<double>::quiet_NaN()};
  TrainConfig cfg;
  TrainState st;
  st.epoch = 4;
  st.lr = 0.25;
  st.patience_left = 3;
  Rng rng(1);
  const auto batches = dummy_batches(5);
  try {
    nrp::train_epoch(spy, batches, st, cfg, rng);
    FAIL("no exception");
  } catch (const nrp::TrainingDiverged& e) {
    CHECK(e.epoch == 4);
    CHECK(e.batch_index == 2);
    CHECK(e.lr == 0.25);
  }
}

TEST_CASE("converged states and empty epochs are rejected") {
  SpyModel spy;
  TrainConfig cfg;
  TrainState st;
  st.lr = 0.5;
  Rng rng(1);
  st.converged = true;
  CHECK_THROWS_AS(nrp::train_epoch(spy, dummy_batches(2), st, cfg, rng), std::logic_error);
  st.converged = false;
  CHECK_THROWS_AS(nrp::train_epoch(spy, {}, st, cfg, rng), std::invalid_argument);
}

TEST_CASE("a full run follows the annealing protocol and logs every epoch") {
  const uint32_t vocab = 12;
  const auto ids = affine_walk(600, vocab);
  const std::vector<uint32_t> train_ids(ids.begin(), ids.begin() + 480);
  const std::vector<uint32_t> valid_ids(ids.begin() + 480, ids.end());
  const auto train_windows = nrp::sliding_windows(train_ids, 3);
  const auto valid_windows = nrp::sliding_windows(valid_ids, 3);
  const auto valid_batches = nrp::make_sequential_batches(valid_windows, 32);

  TrainConfig cfg;
  cfg.batch_size = 32;
  cfg.max_epochs = 12;
  cfg.dropout_p = 0.0;
  cfg.seed = 9;

  nrp::BaselineModel<double> model(vocab, 6, 8, 3, nrp::Activation::Relu, 33);
  std::ostringstream log;
  std::vector<double> improvements;
  const auto result = nrp::train(model, train_windows, valid_batches, cfg, &log,
                                 [&](nrp::BaselineModel<double>&, const TrainState& st) {
                                   improvements.push_back(st.best_val_ppl);
                                 });

  REQUIRE(!result.history.empty());
  // Epoch 1 starts from a near-uniform model, so its mean loss cannot beat
  // ln|V| by much from above and must improve on it as the epoch proceeds.
  CHECK(result.history.front().train_loss < std::log(12.0) + 0.05);
  CHECK(result.history.front().train_loss > 0.0);
  CHECK(result.history.front().lr == cfg.initial_lr);

  // The recorded lr trace must be reconstructible from the val trace.
  double best = std::numeric_limits<double>::infinity();
  double expected_lr = cfg.initial_lr;
  std::size_t expected_patience = cfg.patience;
  for (const auto& r : result.history) {
    CHECK(r.lr == expected_lr);
    if (r.val_ppl < best) {
      best = r.val_ppl;
      expected_patience = cfg.patience;
    } else {
      expected_lr *= cfg.lr_decay;
      expected_patience -= 1;
    }
    CHECK(r.patience_left == expected_patience);
  }
  CHECK(result.best_val_ppl == best);

  // Checkpoint callback fires on strict improvements only, in order.
  REQUIRE(!improvements.empty());
  for (std::size_t i = 1; i < improvements.size(); ++i)
    CHECK(improvements[i] < improvements[i - 1]);
  CHECK(improvements.back() == result.best_val_ppl);
  std::size_t argbest = 0;
  for (std::size_t i = 0; i < result.history.size(); ++i)
    if (result.history[i].val_ppl == result.best_val_ppl) {
      argbest = result.history[i].epoch;
      break;
    }
  CHECK(result.best_epoch == argbest);

  // Log: header plus one line per epoch.
  std::istringstream in(log.str());
  std::string line;
  REQUIRE(std::getline(in, line));
  CHECK(line == nrp::kEpochLogHeader);
  std::size_t lines = 0;
  while (std::getline(in, line)) {
    CHECK(line == nrp::format_epoch_record(result.history[lines]));
    lines += 1;
  }
  CHECK(lines == result.history.size());
  CHECK((result.state.converged || result.history.size() == cfg.max_epochs));
}

TEST_CASE("same seed reproduces the run byte for byte, another seed does not") {
  const uint32_t vocab = 10;
  const auto ids = affine_walk(400, vocab);
  const auto windows = nrp::sliding_windows(ids, 3);
  const auto valid_batches = nrp::make_sequential_batches(windows, 25);

  auto run = [&](uint64_t seed) {
    TrainConfig cfg;
    cfg.batch_size = 20;
    cfg.max_epochs = 4;
    cfg.dropout_p = 0.2;
    cfg.seed = seed;
    nrp::BaselineModel<double> model(vocab, 5, 6, 3, nrp::Activation::Tanh, 11);
    std::ostringstream log;
    nrp::train(model, windows, valid_batches, cfg, &log,
               [](nrp::BaselineModel<double>&, const TrainState&) {});
    return log.str();
  };

  const std::string a = run(7);
  const std::string b = run(7);
  const std::string c = run(8);
  CHECK(a == b);
  CHECK(a != c);
}

TEST_CASE("training without windows or with a bad config is rejected") {
  nrp::BaselineModel<double> model(5, 3, 3, 3, nrp::Activation::Relu, 1);
  nrp::WindowSet empty;
  empty.n = 3;
  const auto some = nrp::sliding_windows({0, 1, 2, 3, 4, 0, 1}, 3);
  const auto valid = nrp::make_sequential_batches(some, 4);
  TrainConfig cfg;
  auto noop = [](nrp::BaselineModel<double>&, const TrainState&) {};
  CHECK_THROWS_AS(nrp::train(model, empty, valid, cfg, nullptr, noop), std::invalid_argument);
  cfg.initial_lr = -1.0;
  CHECK_THROWS_AS(nrp::train(model, some, valid, cfg, nullptr, noop), std::invalid_argument);
}
