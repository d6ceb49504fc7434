#pragma once

#include <atomic>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "nrp/evaluation.hpp"
#include "nrp/trainer.hpp"

namespace nrp {

// Cross-product experiment grid. Baseline cells ignore k, s and mode; the
// projected-model cells span all of them. Every repetition trains from
// scratch with root seed base_seed + repetition_index.
struct SweepSpec {
  std::vector<ModelKind> kinds;
  std::vector<uint32_t> k_values;
  std::vector<uint32_t> s_values;
  std::vector<RiMode> modes;
  std::vector<std::size_t> m_values;
  std::vector<std::size_t> h_values;
  std::vector<double> dropout_values;
  std::size_t repetitions = 3;
  uint64_t base_seed = 1;
  std::size_t n = 5;
  Activation activation = Activation::Relu;
  TrainConfig train;
  std::size_t jobs = 1;
};

struct SweepCell {
  ModelKind kind = ModelKind::Baseline;
  uint32_t k = 0;
  uint32_t s = 0;
  RiMode mode = RiMode::Ternary;
  std::size_t m = 0;
  std::size_t h = 0;
  double dropout = 0.0;
};

struct SweepRepFailure {
  std::size_t repetition = 0;
  uint64_t seed = 0;
  std::string error;
};

struct SweepRow {
  SweepCell cell;
  uint64_t param_count = 0;
  std::size_t successes = 0;
  double ppl_mean = 0.0;
  double ppl_sd = 0.0;
  double epoch_mean = 0.0;
  double epoch_sd = 0.0;
  std::vector<SweepRepFailure> failures;
};

struct SweepData {
  const WindowSet* train_windows = nullptr;
  const std::vector<NGramBatch>* valid_batches = nullptr;
  const std::vector<NGramBatch>* test_batches = nullptr;
  std::size_t vocab_size = 0;
};

inline std::vector<SweepCell> enumerate_cells(const SweepSpec& spec) {
  if (spec.kinds.empty()) throw std::invalid_argument("sweep: no model kinds listed");
  if (spec.m_values.empty() || spec.h_values.empty() || spec.dropout_values.empty())
    throw std::invalid_argument("sweep: m, h and dropout lists must be non-empty");
  if (spec.repetitions < 1) throw std::invalid_argument("sweep: repetitions must be >= 1");

  std::vector<SweepCell> cells;
  for (ModelKind kind : spec.kinds) {
    if (kind == ModelKind::Baseline) {
      for (std::size_t m : spec.m_values)
        for (std::size_t h : spec.h_values)
          for (double dropout : spec.dropout_values)
            cells.push_back({kind, 0, 0, RiMode::Ternary, m, h, dropout});
      continue;
    }
    if (spec.k_values.empty() || spec.s_values.empty() || spec.modes.empty())
      throw std::invalid_argument("sweep: k, s and mode lists must be non-empty for nrp cells");
    for (uint32_t k : spec.k_values)
      for (uint32_t s : spec.s_values) {
        if (s > k)
          throw std::invalid_argument("sweep: s=" + std::to_string(s) + " exceeds k=" +
                                      std::to_string(k));
        for (RiMode mode : spec.modes)
          for (std::size_t m : spec.m_values)
            for (std::size_t h : spec.h_values)
              for (double dropout : spec.dropout_values)
                cells.push_back({kind, k, s, mode, m, h, dropout});
      }
  }
  return cells;
}

namespace detail {

inline void mean_sd(const std::vector<double>& xs, double& mean, double& sd) {
  mean = 0.0;
  sd = 0.0;
  if (xs.empty()) return;
  for (double x : xs) mean += x;
  mean /= static_cast<double>(xs.size());
  if (xs.size() < 2) return;
  double acc = 0.0;
  for (double x : xs) acc += (x - mean) * (x - mean);
  sd = std::sqrt(acc / static_cast<double>(xs.size() - 1));
}

// Train one repetition from scratch, keep the parameters of the best
// validation epoch, report that model's test perplexity and the epoch count
// at which training stopped.
template <typename T, typename Model>
void run_repetition(Model&& model, const SweepCell& cell, const SweepSpec& spec,
                    const SweepData& data, uint64_t root_seed, double& test_ppl,
                    std::size_t& epochs) {
  TrainConfig tc = spec.train;
  tc.seed = root_seed;
  tc.dropout_p = cell.dropout;
  std::optional<std::decay_t<Model>> best;
  const TrainResult result = train(model, *data.train_windows, *data.valid_batches, tc, nullptr,
                                   [&](const auto& mdl, const TrainState&) { best = mdl; });
  auto& chosen = best ? *best : model;
  test_ppl = perplexity(chosen, *data.test_batches).mean_batch_ppl;
  epochs = result.state.epoch;
}

template <typename T>
SweepRow run_cell(const SweepCell& cell, const SweepSpec& spec, const SweepData& data) {
  SweepRow row;
  row.cell = cell;
  const uint64_t x = cell.kind == ModelKind::Baseline ? data.vocab_size : cell.k;
  row.param_count = param_count_formula(x, cell.m, spec.n, cell.h);

  std::vector<double> ppls;
  std::vector<double> epochs;
  for (std::size_t rep = 0; rep < spec.repetitions; ++rep) {
    const uint64_t root = spec.base_seed + rep;
    const uint64_t init_seed = derive_seed(root, seed_stream::kInit);
    const uint64_t index_seed = derive_seed(root, seed_stream::kIndices);
    double test_ppl = 0.0;
    std::size_t epoch_count = 0;
    try {
      if (cell.kind == ModelKind::Baseline) {
        BaselineModel<T> model(data.vocab_size, cell.m, cell.h, spec.n, spec.activation,
                               init_seed);
        run_repetition<T>(model, cell, spec, data, root, test_ppl, epoch_count);
      } else {
        NRPModel<T> model(cell.k, cell.s, cell.mode, data.vocab_size, cell.m, cell.h, spec.n,
                          spec.activation, init_seed, index_seed);
        run_repetition<T>(model, cell, spec, data, root, test_ppl, epoch_count);
      }
      ppls.push_back(test_ppl);
      epochs.push_back(static_cast<double>(epoch_count));
    } catch (const std::exception& e) {
      row.failures.push_back({rep, root, e.what()});
    }
  }
  row.successes = ppls.size();
  mean_sd(ppls, row.ppl_mean, row.ppl_sd);
  mean_sd(epochs, row.epoch_mean, row.epoch_sd);
  return row;
}

inline std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline std::string fmt_short(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%g", v);
  return buf;
}

}  // namespace detail

inline constexpr const char* kSweepResultsHeader =
    "model,k,s,mode,m,h,dropout,param_count,ppl_mean,ppl_sd,epoch_mean,epoch_sd,seed";

inline std::string sweep_row_to_csv(const SweepRow& row, uint64_t base_seed) {
  const SweepCell& c = row.cell;
  std::string line = std::string(to_string(c.kind)) + ",";
  if (c.kind == ModelKind::Nrp) {
    line += std::to_string(c.k) + "," + std::to_string(c.s) + "," + to_string(c.mode);
  } else {
    line += ",,";
  }
  line += "," + std::to_string(c.m) + "," + std::to_string(c.h) + "," +
          detail::fmt_short(c.dropout) + "," + std::to_string(row.param_count) + ",";
  if (row.successes > 0) {
    line += detail::fmt_double(row.ppl_mean) + "," + detail::fmt_double(row.ppl_sd) + "," +
            detail::fmt_double(row.epoch_mean) + "," + detail::fmt_double(row.epoch_sd);
  } else {
    line += ",,,";
  }
  line += "," + std::to_string(base_seed);
  return line;
}

// Runs every cell of the grid, aggregates repetitions, and writes
// results.csv, curves.csv and failures.csv under out_dir. Cells may run on
// up to spec.jobs threads; rows are written in grid order afterwards so the
// output does not depend on scheduling. Failed repetitions are excluded
// from the aggregates and recorded in failures.csv; a cell with no
// successful repetition keeps its row with empty metric fields.
template <typename T>
std::vector<SweepRow> run_sweep(const SweepSpec& spec, const SweepData& data,
                                const std::string& out_dir) {
  if (!data.train_windows || !data.valid_batches || !data.test_batches)
    throw std::invalid_argument("run_sweep: data splits missing");
  const std::vector<SweepCell> cells = enumerate_cells(spec);
  std::vector<SweepRow> rows(cells.size());

  const std::size_t jobs = std::max<std::size_t>(1, spec.jobs);
  if (jobs == 1) {
    for (std::size_t i = 0; i < cells.size(); ++i)
      rows[i] = detail::run_cell<T>(cells[i], spec, data);
  } else {
    std::atomic<std::size_t> next{0};
    auto worker = [&]() {
      for (std::size_t i = next.fetch_add(1); i < cells.size(); i = next.fetch_add(1))
        rows[i] = detail::run_cell<T>(cells[i], spec, data);
    };
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < std::min(jobs, cells.size()); ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }

  std::filesystem::create_directories(out_dir);
  std::ofstream results(out_dir + "/results.csv");
  if (!results) throw std::runtime_error("run_sweep: cannot write " + out_dir + "/results.csv");
  results << kSweepResultsHeader << "\n";
  for (const auto& row : rows) results << sweep_row_to_csv(row, spec.base_seed) << "\n";

  // Decay-curve view: perplexity against k for the projected model,
  // against m for the baseline, grouped by the remaining cell settings.
  std::ofstream curves(out_dir + "/curves.csv");
  curves << "x,group,ppl_mean,ppl_sd\n";
  for (const auto& row : rows) {
    if (row.successes == 0) continue;
    const SweepCell& c = row.cell;
    std::string x, group;
    if (c.kind == ModelKind::Nrp) {
      x = std::to_string(c.k);
      group = "nrp s=" + std::to_string(c.s) + " " + to_string(c.mode) + " m=" +
              std::to_string(c.m) + " h=" + std::to_string(c.h) + " drop=" +
              detail::fmt_short(c.dropout);
    } else {
      x = std::to_string(c.m);
      group = "baseline h=" + std::to_string(c.h) + " drop=" + detail::fmt_short(c.dropout);
    }
    curves << x << "," << group << "," << detail::fmt_double(row.ppl_mean) << ","
           << detail::fmt_double(row.ppl_sd) << "\n";
  }

  std::ofstream failures(out_dir + "/failures.csv");
  failures << "model,k,s,mode,m,h,dropout,repetition,seed,error\n";
  for (const auto& row : rows)
    for (const auto& f : row.failures) {
      std::string err = f.error;
      for (char& ch : err)
        if (ch == ',' || ch == '\n') ch = ';';
      const SweepCell& c = row.cell;
      failures << to_string(c.kind) << ",";
      if (c.kind == ModelKind::Nrp)
        failures << c.k << "," << c.s << "," << to_string(c.mode);
      else
        failures << ",,";
      failures << "," << c.m << "," << c.h << "," << detail::fmt_short(c.dropout) << ","
               << f.repetition << "," << f.seed << "," << err << "\n";
    }

  return rows;
}

}  // namespace nrp
