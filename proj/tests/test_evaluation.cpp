#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "nrp/model_baseline.hpp"
#include "nrp/model_nrp.hpp"
#include "nrp/sweep.hpp"

using nrp::Matrix;
using nrp::ModelKind;
using nrp::NGramBatch;
using nrp::PplAccumulator;
using nrp::RiMode;
using nrp::Rng;

namespace {

NGramBatch batch_of(std::vector<uint32_t> contexts, std::vector<uint32_t> targets,
                    std::size_t n) {
  NGramBatch b;
  b.n = n;
  b.contexts = std::move(contexts);
  b.targets = std::move(targets);
  return b;
}

std::vector<uint32_t> cyclev(std::size_t len, uint32_t vocab) {
  std::vector<uint32_t> ids(len);
  for (std::size_t i = 0; i < len; ++i) ids[i] = static_cast<uint32_t>((3 * i + 1) % vocab);
  return ids;
}

std::string slurp(const std::string& path) {
  std::ifstream in(path);
  std::ostringstream out;
  out << in.rdbuf();
  return out.str();
}

}  // namespace

TEST_CASE("corpus perplexity is the exponentiated mean NLL") {
  // Window 1 gives its target probability 1/2, window 2 gives 1/8:
  // exp((ln 2 + ln 8) / 2) = 4.
  Matrix<double> probs(2, 4);
  probs.at(0, 1) = 0.5;
  probs.at(0, 0) = 0.5;
  probs.at(1, 2) = 0.125;
  probs.at(1, 3) = 0.875;
  PplAccumulator acc;
  acc.add_batch(probs, {1, 2});
  CHECK(acc.corpus_ppl() == doctest::Approx(4.0).epsilon(1e-12));
  CHECK(acc.mean_batch_ppl() == doctest::Approx(4.0).epsilon(1e-12));
  CHECK(acc.window_count() == 2);
}

TEST_CASE("batch-averaged perplexity differs from the corpus measure across batches") {
  Matrix<double> b1(1, 4), b2(1, 4);
  b1.at(0, 0) = 0.5;
  b1.at(0, 1) = 0.5;
  b2.at(0, 0) = 0.125;
  b2.at(0, 1) = 0.875;
  PplAccumulator acc;
  acc.add_batch(b1, {0});
  acc.add_batch(b2, {0});
  // Corpus view still 4; the batch view averages 2 and 8 arithmetically.
  CHECK(acc.corpus_ppl() == doctest::Approx(4.0).epsilon(1e-12));
  CHECK(acc.mean_batch_ppl() == doctest::Approx(5.0).epsilon(1e-12));
}

TEST_CASE("a uniform model scores perplexity |V| on both measures") {
  const std::size_t vocab = 12;
  nrp::BaselineModel<double> model(vocab, 4, 3, 3, nrp::Activation::Relu, 1);
  for (Matrix<double>* t : {&model.params().F, &model.params().Wh, &model.params().bh,
                            &model.params().Wy, &model.params().by})
    t->fill(0.0);
  const auto windows = nrp::sliding_windows(cyclev(50, vocab), 3);
  const auto batches = nrp::make_sequential_batches(windows, 7);
  const auto report = nrp::perplexity(model, batches);
  CHECK(report.corpus_ppl == doctest::Approx(12.0).epsilon(1e-12));
  CHECK(report.mean_batch_ppl == doctest::Approx(12.0).epsilon(1e-12));
  CHECK(report.token_count == windows.count());
}

TEST_CASE("corpus perplexity does not depend on the batch layout") {
  nrp::BaselineModel<double> model(9, 4, 4, 3, nrp::Activation::Tanh, 3);
  const auto windows = nrp::sliding_windows(cyclev(80, 9), 3);
  double reference = 0.0;
  for (std::size_t batch_size : {1, 3, 7, 78}) {
    const auto batches = nrp::make_sequential_batches(windows, batch_size);
    const double ppl = nrp::perplexity(model, batches).corpus_ppl;
    if (batch_size == 1)
      reference = ppl;
    else
      CHECK(ppl == doctest::Approx(reference).epsilon(1e-12));
  }
}

TEST_CASE("eval report snapshots the model configuration") {
  nrp::NRPModel<double> model(20, 4, RiMode::Binary, 15, 6, 5, 4, nrp::Activation::Elu, 5, 6);
  const auto windows = nrp::sliding_windows(cyclev(40, 15), 4);
  const auto report = nrp::perplexity(model, nrp::make_sequential_batches(windows, 8));
  CHECK(report.config.kind == ModelKind::Nrp);
  CHECK(report.config.k == 20);
  CHECK(report.config.s == 4);
  CHECK(report.config.mode == RiMode::Binary);
  CHECK(report.config.m == 6);
  CHECK(report.config.h == 5);
  CHECK(report.config.n == 4);
  CHECK(report.param_count == nrp::nrp_param_count(20, 6, 4, 5));
}

TEST_CASE("empty accumulators and mismatched batches are rejected") {
  PplAccumulator acc;
  CHECK_THROWS_AS(acc.corpus_ppl(), std::logic_error);
  CHECK_THROWS_AS(acc.mean_batch_ppl(), std::logic_error);
  Matrix<double> probs(2, 3);
  CHECK_THROWS_AS(acc.add_batch(probs, {0}), std::invalid_argument);
  nrp::BaselineModel<double> model(5, 3, 3, 3, nrp::Activation::Relu, 1);
  CHECK_THROWS_AS(nrp::perplexity(model, {}), std::invalid_argument);
  CHECK_THROWS_AS(nrp::validation_ppl(model, {}), std::invalid_argument);
}

TEST_CASE("grid enumeration crosses every axis, baseline cells skip the index axes") {
  nrp::SweepSpec spec;
  spec.kinds = {ModelKind::Baseline, ModelKind::Nrp};
  spec.k_values = {8, 16};
  spec.s_values = {2, 4};
  spec.modes = {RiMode::Ternary};
  spec.m_values = {4};
  spec.h_values = {4, 8};
  spec.dropout_values = {0.0};
  const auto cells = nrp::enumerate_cells(spec);
  REQUIRE(cells.size() == 2 + 2 * 2 * 2);
  CHECK(cells[0].kind == ModelKind::Baseline);
  CHECK(cells[0].k == 0);
  CHECK(cells[1].h == 8);
  CHECK(cells[2].kind == ModelKind::Nrp);
  CHECK(cells[2].k == 8);
  CHECK(cells[2].s == 2);

  nrp::SweepSpec bad = spec;
  bad.s_values = {32};
  CHECK_THROWS_AS(nrp::enumerate_cells(bad), std::invalid_argument);
  bad = spec;
  bad.kinds.clear();
  CHECK_THROWS_AS(nrp::enumerate_cells(bad), std::invalid_argument);
  bad = spec;
  bad.m_values.clear();
  CHECK_THROWS_AS(nrp::enumerate_cells(bad), std::invalid_argument);
}

TEST_CASE("csv rows leave index columns empty for the baseline and metrics empty on failure") {
  nrp::SweepRow row;
  row.cell = {ModelKind::Baseline, 0, 0, RiMode::Ternary, 64, 128, 0.05};
  row.param_count = 12345;
  row.successes = 2;
  row.ppl_mean = 100.5;
  row.ppl_sd = 1.25;
  row.epoch_mean = 7.0;
  row.epoch_sd = 0.0;
  const std::string line = nrp::sweep_row_to_csv(row, 42);
  CHECK(line.rfind("baseline,,,,64,128,0.05,12345,", 0) == 0);
  CHECK(line.find("100.5") != std::string::npos);
  CHECK(line.substr(line.size() - 3) == ",42");

  nrp::SweepRow failed;
  failed.cell = {ModelKind::Nrp, 100, 4, RiMode::Binary, 8, 8, 0.0};
  failed.param_count = 99;
  failed.successes = 0;
  const std::string fline = nrp::sweep_row_to_csv(failed, 7);
  CHECK(fline.rfind("nrp,100,4,binary,8,8,0,99,,,,,7", 0) == 0);
}

TEST_CASE("a small sweep writes deterministic result files") {
  const uint32_t vocab = 10;
  const auto ids = cyclev(300, vocab);
  const std::vector<uint32_t> train_ids(ids.begin(), ids.begin() + 200);
  const std::vector<uint32_t> valid_ids(ids.begin() + 200, ids.begin() + 250);
  const std::vector<uint32_t> test_ids(ids.begin() + 250, ids.end());
  const auto train_windows = nrp::sliding_windows(train_ids, 3);
  const auto valid_windows = nrp::sliding_windows(valid_ids, 3);
  const auto test_windows = nrp::sliding_windows(test_ids, 3);
  const auto valid_batches = nrp::make_sequential_batches(valid_windows, 16);
  const auto test_batches = nrp::make_sequential_batches(test_windows, 16);

  nrp::SweepSpec spec;
  spec.kinds = {ModelKind::Baseline, ModelKind::Nrp};
  spec.k_values = {6};
  spec.s_values = {2};
  spec.modes = {RiMode::Ternary};
  spec.m_values = {4};
  spec.h_values = {4};
  spec.dropout_values = {0.0};
  spec.repetitions = 2;
  spec.base_seed = 3;
  spec.n = 3;
  spec.train.batch_size = 16;
  spec.train.max_epochs = 2;

  nrp::SweepData data;
  data.train_windows = &train_windows;
  data.valid_batches = &valid_batches;
  data.test_batches = &test_batches;
  data.vocab_size = vocab;

  const auto dir1 = (std::filesystem::temp_directory_path() / "nrp_sweep_a").string();
  const auto dir2 = (std::filesystem::temp_directory_path() / "nrp_sweep_b").string();
  const auto rows1 = nrp::run_sweep<double>(spec, data, dir1);
  const auto rows2 = nrp::run_sweep<double>(spec, data, dir2);

  REQUIRE(rows1.size() == 2);
  CHECK(rows1[0].successes == 2);
  CHECK(rows1[1].successes == 2);
  CHECK(rows1[0].param_count == nrp::baseline_param_count(vocab, 4, 3, 4));
  CHECK(rows1[1].param_count == nrp::nrp_param_count(6, 4, 3, 4));
  CHECK(rows1[0].ppl_mean > 0.0);

  CHECK(slurp(dir1 + "/results.csv") == slurp(dir2 + "/results.csv"));
  CHECK(slurp(dir1 + "/curves.csv") == slurp(dir2 + "/curves.csv"));

  std::istringstream results(slurp(dir1 + "/results.csv"));
  std::string line;
  REQUIRE(std::getline(results, line));
  CHECK(line == nrp::kSweepResultsHeader);
  std::size_t data_lines = 0;
  while (std::getline(results, line)) data_lines += 1;
  CHECK(data_lines == 2);

  // Thread count must not change the aggregated rows.
  nrp::SweepSpec threaded = spec;
  threaded.jobs = 2;
  const auto dir3 = (std::filesystem::temp_directory_path() / "nrp_sweep_c").string();
  nrp::run_sweep<double>(threaded, data, dir3);
  CHECK(slurp(dir1 + "/results.csv") == slurp(dir3 + "/results.csv"));

  std::filesystem::remove_all(dir1);
  std::filesystem::remove_all(dir2);
  std::filesystem::remove_all(dir3);
}

TEST_CASE("sweep without data pointers is rejected") {
  nrp::SweepSpec spec;
  spec.kinds = {ModelKind::Baseline};
  spec.m_values = {4};
  spec.h_values = {4};
  spec.dropout_values = {0.0};
  nrp::SweepData data;
  CHECK_THROWS_AS(nrp::run_sweep<double>(spec, data, "/tmp/nrp_sweep_none"),
                  std::invalid_argument);
}
