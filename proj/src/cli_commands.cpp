#include "nrp/cli_commands.hpp"

#include <cinttypes>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "nrp/checkpoint.hpp"
#include "nrp/corpus.hpp"
#include "nrp/evaluation.hpp"
#include "nrp/model_baseline.hpp"
#include "nrp/model_nrp.hpp"
#include "nrp/random_index.hpp"
#include "nrp/rng.hpp"
#include "nrp/sweep.hpp"
#include "nrp/trainer.hpp"

namespace nrp {
namespace {

namespace fs = std::filesystem;

void echo_effective_config(const ExperimentConfig& cfg) {
  fs::create_directories(cfg.out_dir);
  std::ofstream out(cfg.effective_config_path());
  if (!out)
    throw std::runtime_error("cannot write " + cfg.effective_config_path());
  out << render_config(cfg);
}

// Vocabulary comes from the cache written by preprocess when present,
// otherwise it is rebuilt from the training split on the spot.
Vocabulary obtain_vocabulary(const ExperimentConfig& cfg) {
  if (fs::exists(cfg.vocab_cache_path())) {
    Vocabulary vocab = Vocabulary::load(cfg.vocab_cache_path());
    std::cerr << "vocabulary: " << vocab.size() << " types (cached at "
              << cfg.vocab_cache_path() << ")\n";
    return vocab;
  }
  if (cfg.train_path.empty())
    throw std::runtime_error("no vocabulary cache at " + cfg.vocab_cache_path() +
                             " and no train_path to build one from");
  const std::vector<std::string> tokens = read_tokens(cfg.train_path);
  Vocabulary vocab = build_vocabulary(tokens, cfg.vocab_cap);
  fs::create_directories(cfg.out_dir);
  vocab.save(cfg.vocab_cache_path());
  std::cerr << "vocabulary: " << vocab.size() << " types (built from " << cfg.train_path
            << ", cached at " << cfg.vocab_cache_path() << ")\n";
  return vocab;
}

WindowSet windows_for(const ExperimentConfig& cfg, const Vocabulary& vocab,
                      const std::string& path) {
  const std::vector<uint32_t> ids = vocab.encode(read_tokens(path));
  return sliding_windows(ids, cfg.n, cfg.pad_start, vocab.unk_id());
}

const std::string& split_path(const ExperimentConfig& cfg, const std::string& split) {
  if (split == "train") return cfg.train_path;
  if (split == "valid") return cfg.valid_path;
  if (split == "test") return cfg.test_path;
  throw std::invalid_argument("unknown split '" + split + "' (expected train, valid or test)");
}

std::string fmt_full(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

template <typename T>
int train_impl(const ExperimentConfig& cfg, const Vocabulary& vocab,
               const WindowSet& train_windows, const std::vector<NGramBatch>& valid_batches) {
  const TrainConfig tc = train_config_from(cfg);
  std::ofstream log(cfg.train_log_path());
  if (!log) throw std::runtime_error("cannot write " + cfg.train_log_path());

  TrainResult result;
  if (cfg.model_kind() == ModelKind::Baseline) {
    BaselineModel<T> model(vocab.size(), cfg.m, cfg.h, cfg.n, cfg.activation_kind(),
                           derive_seed(cfg.seed, seed_stream::kInit));
    result = train(model, train_windows, valid_batches, tc, &log,
                   [&](const BaselineModel<T>& best, const TrainState&) {
                     save_checkpoint(cfg.checkpoint_path(), best.params());
                   });
  } else {
    NRPModel<T> model(cfg.k, cfg.s, cfg.ri_mode_kind(), vocab.size(), cfg.m, cfg.h, cfg.n,
                      cfg.activation_kind(), derive_seed(cfg.seed, seed_stream::kInit),
                      derive_seed(cfg.seed, seed_stream::kIndices));
    result = train(model, train_windows, valid_batches, tc, &log,
                   [&](const NRPModel<T>& best, const TrainState&) {
                     save_checkpoint(cfg.checkpoint_path(), best.params(), best.vocab_size());
                   });
  }

  std::cerr << "trained " << result.state.epoch << " epoch(s), "
            << (result.state.converged ? "converged" : "stopped at max_epochs") << "\n";
  std::cerr << "best validation ppl " << fmt_full(result.best_val_ppl) << " at epoch "
            << result.best_epoch << "\n";
  std::cerr << "checkpoint: " << cfg.checkpoint_path() << "\n";
  std::cerr << "log: " << cfg.train_log_path() << "\n";
  return 0;
}

void require_field(bool ok, const std::string& field, const std::string& file_value,
                   const std::string& config_value) {
  if (!ok)
    throw std::runtime_error("checkpoint does not match config: " + field + " is " + file_value +
                             " in the checkpoint but " + config_value + " in the config");
}

template <typename T>
EvalReport eval_impl(const ExperimentConfig& cfg, const std::string& checkpoint_path,
                     const CheckpointInfo& info, const std::vector<NGramBatch>& batches) {
  EvalReport report;
  if (info.kind == ModelKind::Baseline) {
    BaselineModel<T> model(load_baseline_checkpoint<T>(checkpoint_path));
    report = perplexity(model, batches);
  } else {
    auto [params, ckpt_vocab] = load_nrp_checkpoint<T>(checkpoint_path);
    require_field(params.lookup.k() == cfg.k, "k", std::to_string(params.lookup.k()),
                  std::to_string(cfg.k));
    require_field(params.lookup.s() == cfg.s, "s", std::to_string(params.lookup.s()),
                  std::to_string(cfg.s));
    require_field(params.lookup.mode() == cfg.ri_mode_kind(), "ri_mode",
                  to_string(params.lookup.mode()), cfg.ri_mode);
    NRPModel<T> model(std::move(params), ckpt_vocab);
    report = perplexity(model, batches);
  }
  report.config.dropout = cfg.dropout;
  report.config.seed = cfg.seed;
  return report;
}

}  // namespace

int cmd_preprocess(const ExperimentConfig& cfg) {
  validate_config(cfg);
  if (cfg.train_path.empty())
    throw std::invalid_argument("preprocess: train_path is required");
  echo_effective_config(cfg);

  const std::vector<std::string> train_tokens = read_tokens(cfg.train_path);
  Vocabulary vocab = build_vocabulary(train_tokens, cfg.vocab_cap);
  vocab.save(cfg.vocab_cache_path());
  std::cout << "vocabulary: " << vocab.size() << " types (cap " << cfg.vocab_cap
            << "), cached at " << cfg.vocab_cache_path() << "\n";

  const std::pair<const char*, const std::string*> splits[] = {
      {"train", &cfg.train_path}, {"valid", &cfg.valid_path}, {"test", &cfg.test_path}};
  for (const auto& [name, path] : splits) {
    if (path->empty()) continue;
    const std::vector<std::string> tokens =
        *path == cfg.train_path ? train_tokens : read_tokens(*path);
    const WindowSet windows = sliding_windows(vocab.encode(tokens), cfg.n, cfg.pad_start,
                                              vocab.unk_id());
    std::cout << name << ": " << tokens.size() << " tokens, " << windows.count()
              << " windows\n";
  }
  return 0;
}

int cmd_train(const ExperimentConfig& cfg) {
  validate_config(cfg);
  if (cfg.train_path.empty()) throw std::invalid_argument("train: train_path is required");
  if (cfg.valid_path.empty()) throw std::invalid_argument("train: valid_path is required");
  echo_effective_config(cfg);

  const Vocabulary vocab = obtain_vocabulary(cfg);
  const WindowSet train_windows = windows_for(cfg, vocab, cfg.train_path);
  const WindowSet valid_windows = windows_for(cfg, vocab, cfg.valid_path);
  const std::vector<NGramBatch> valid_batches =
      make_sequential_batches(valid_windows, cfg.batch);
  std::cerr << "train: " << train_windows.count() << " windows, valid: "
            << valid_windows.count() << " windows\n";

  return cfg.use_f64() ? train_impl<double>(cfg, vocab, train_windows, valid_batches)
                       : train_impl<float>(cfg, vocab, train_windows, valid_batches);
}

int cmd_eval(const ExperimentConfig& cfg, const std::string& checkpoint_path,
             const std::string& split) {
  validate_config(cfg);
  const std::string& data_path = split_path(cfg, split);
  if (data_path.empty())
    throw std::invalid_argument("eval: no path configured for split '" + split + "'");
  echo_effective_config(cfg);

  const CheckpointInfo info = read_checkpoint_info(checkpoint_path);
  require_field(info.kind == cfg.model_kind(), "model", to_string(info.kind), cfg.model);
  require_field(info.precision == sizeof(float) * (cfg.use_f64() ? 2 : 1), "precision",
                std::to_string(info.precision * 8) + "-bit", cfg.precision);
  require_field(info.m == cfg.m, "m", std::to_string(info.m), std::to_string(cfg.m));
  require_field(info.h == cfg.h, "h", std::to_string(info.h), std::to_string(cfg.h));
  require_field(info.n == cfg.n, "n", std::to_string(info.n), std::to_string(cfg.n));
  require_field(info.activation == cfg.activation_kind(), "activation",
                to_string(info.activation), cfg.activation);

  const Vocabulary vocab = obtain_vocabulary(cfg);
  require_field(info.vocab_size == vocab.size(), "vocabulary size",
                std::to_string(info.vocab_size), std::to_string(vocab.size()));
  const WindowSet windows = windows_for(cfg, vocab, data_path);
  const std::vector<NGramBatch> batches = make_sequential_batches(windows, cfg.batch);

  const EvalReport report = cfg.use_f64()
                                ? eval_impl<double>(cfg, checkpoint_path, info, batches)
                                : eval_impl<float>(cfg, checkpoint_path, info, batches);

  std::cout << "split: " << split << "\n";
  std::cout << "windows: " << report.token_count << "\n";
  std::cout << "param_count: " << report.param_count << "\n";
  std::cout << "corpus_ppl: " << fmt_full(report.corpus_ppl) << "\n";
  std::cout << "mean_batch_ppl: " << fmt_full(report.mean_batch_ppl) << "\n";

  const std::string report_path = cfg.out_dir + "/eval_" + split + ".csv";
  std::ofstream out(report_path);
  if (!out) throw std::runtime_error("cannot write " + report_path);
  out << "model,split,k,s,mode,m,h,n,param_count,token_count,corpus_ppl,mean_batch_ppl\n";
  out << cfg.model << "," << split << ",";
  if (report.config.kind == ModelKind::Nrp)
    out << report.config.k << "," << report.config.s << "," << to_string(report.config.mode);
  else
    out << ",,";
  out << "," << report.config.m << "," << report.config.h << "," << report.config.n << ","
      << report.param_count << "," << report.token_count << "," << fmt_full(report.corpus_ppl)
      << "," << fmt_full(report.mean_batch_ppl) << "\n";
  std::cerr << "report: " << report_path << "\n";
  return 0;
}

int cmd_ri_stats(const ExperimentConfig& cfg, std::size_t pairs) {
  if (cfg.s < 1 || cfg.s > cfg.k)
    throw std::invalid_argument("ri-stats: need 1 <= s <= k, got s=" + std::to_string(cfg.s) +
                                " k=" + std::to_string(cfg.k));
  echo_effective_config(cfg);

  Rng rng(derive_seed(cfg.seed, seed_stream::kIndices));
  const auto hist =
      inner_product_histogram(cfg.k, cfg.s, cfg.ri_mode_kind(), pairs, rng);
  const InnerProductStats stats = summarize_histogram(hist);

  const std::string hist_path = cfg.out_dir + "/ri_hist.csv";
  std::ofstream out(hist_path);
  if (!out) throw std::runtime_error("cannot write " + hist_path);
  out << "dot_value,count\n";
  for (const auto& [value, count] : hist) out << value << "," << count << "\n";

  std::cout << "k: " << cfg.k << "\ns: " << cfg.s << "\nmode: " << cfg.ri_mode << "\n";
  std::cout << "pairs: " << stats.pairs << "\n";
  std::cout << "mean: " << fmt_full(stats.mean) << "\n";
  std::cout << "variance: " << fmt_full(stats.variance) << "\n";
  std::cout << "nonzero_fraction: " << fmt_full(stats.nonzero_fraction) << "\n";
  std::cerr << "histogram: " << hist_path << "\n";
  return 0;
}

int cmd_sweep(const ExperimentConfig& cfg) {
  validate_config(cfg);
  for (const auto& [name, path] : {std::pair<const char*, const std::string*>{
                                       "train_path", &cfg.train_path},
                                   {"valid_path", &cfg.valid_path},
                                   {"test_path", &cfg.test_path}})
    if (path->empty())
      throw std::invalid_argument("sweep: " + std::string(name) + " is required");
  echo_effective_config(cfg);

  const SweepSpec spec = sweep_spec_from_config(cfg);
  const Vocabulary vocab = obtain_vocabulary(cfg);
  const WindowSet train_windows = windows_for(cfg, vocab, cfg.train_path);
  const WindowSet valid_windows = windows_for(cfg, vocab, cfg.valid_path);
  const WindowSet test_windows = windows_for(cfg, vocab, cfg.test_path);
  const std::vector<NGramBatch> valid_batches =
      make_sequential_batches(valid_windows, cfg.batch);
  const std::vector<NGramBatch> test_batches = make_sequential_batches(test_windows, cfg.batch);

  SweepData data;
  data.train_windows = &train_windows;
  data.valid_batches = &valid_batches;
  data.test_batches = &test_batches;
  data.vocab_size = vocab.size();

  const std::vector<SweepRow> rows = cfg.use_f64()
                                         ? run_sweep<double>(spec, data, cfg.out_dir)
                                         : run_sweep<float>(spec, data, cfg.out_dir);

  std::size_t failures = 0;
  for (const auto& row : rows) {
    failures += row.failures.size();
    std::printf("%-8s k=%-6u s=%-3u m=%-5zu h=%-5zu params=%" PRIu64 " ppl=%s (sd %s) reps=%zu/%zu\n",
                to_string(row.cell.kind), row.cell.k, row.cell.s, row.cell.m, row.cell.h,
                row.param_count, fmt_full(row.ppl_mean).c_str(), fmt_full(row.ppl_sd).c_str(),
                row.successes, spec.repetitions);
  }
  std::cerr << "results: " << cfg.out_dir << "/results.csv\n";
  std::cerr << "curves: " << cfg.out_dir << "/curves.csv\n";
  if (failures > 0) {
    std::cerr << failures << " repetition(s) failed, see " << cfg.out_dir << "/failures.csv\n";
    return 1;
  }
  return 0;
}

}  // namespace nrp
