#include <exception>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "nrp/cli_commands.hpp"
#include "nrp/config.hpp"

namespace {

// Every subcommand accepts --config plus one flag per config key; flags
// override file values, which override defaults.
struct ConfigArgs {
  std::string config_file;
  std::vector<std::string> values;

  void attach(CLI::App* cmd) {
    const auto& keys = nrp::config_keys();
    values.resize(keys.size());
    cmd->set_help_flag("--help", "print help and exit");
    cmd->add_option("--config", config_file, "config file (key=value lines)")
        ->check(CLI::ExistingFile);
    for (std::size_t i = 0; i < keys.size(); ++i)
      cmd->add_option("--" + std::string(keys[i].name), values[i]);
  }

  nrp::ExperimentConfig resolve(const CLI::App* cmd) const {
    nrp::ExperimentConfig cfg;
    if (!config_file.empty()) cfg = nrp::load_config_file(config_file);
    const auto& keys = nrp::config_keys();
    for (std::size_t i = 0; i < keys.size(); ++i)
      if (cmd->count("--" + std::string(keys[i].name)) > 0)
        nrp::set_config_value(cfg, keys[i].name, values[i]);
    return cfg;
  }
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"energy-based n-gram language models with random-index word codes"};
  app.require_subcommand(1);
  // Long-only help: the short -h would collide with the hidden-size flag --h.
  app.set_help_flag("--help", "print help and exit");

  CLI::App* preprocess = app.add_subcommand(
      "preprocess", "build the vocabulary cache and report token/window counts");
  CLI::App* train = app.add_subcommand("train", "train a model, writing checkpoint and log");
  CLI::App* eval = app.add_subcommand("eval", "evaluate a checkpoint on one split");
  CLI::App* ri_stats = app.add_subcommand(
      "ri-stats", "sample random index pairs and write the inner product histogram");
  CLI::App* sweep = app.add_subcommand("sweep", "train over a hyper-parameter grid");

  ConfigArgs preprocess_args, train_args, eval_args, ri_args, sweep_args;
  preprocess_args.attach(preprocess);
  train_args.attach(train);
  eval_args.attach(eval);
  ri_args.attach(ri_stats);
  sweep_args.attach(sweep);

  std::string checkpoint_path;
  std::string split = "test";
  eval->add_option("--checkpoint", checkpoint_path,
                   "checkpoint file (default: <out_dir>/model.ckpt)");
  eval->add_option("--split", split, "split to evaluate: train, valid or test")
      ->check(CLI::IsMember({"train", "valid", "test"}));

  std::size_t pairs = 100000;
  ri_stats->add_option("--pairs", pairs, "number of index pairs to sample")
      ->check(CLI::PositiveNumber);

  CLI11_PARSE(app, argc, argv);

  try {
    if (preprocess->parsed()) return nrp::cmd_preprocess(preprocess_args.resolve(preprocess));
    if (train->parsed()) return nrp::cmd_train(train_args.resolve(train));
    if (eval->parsed()) {
      const nrp::ExperimentConfig cfg = eval_args.resolve(eval);
      if (checkpoint_path.empty()) checkpoint_path = cfg.checkpoint_path();
      return nrp::cmd_eval(cfg, checkpoint_path, split);
    }
    if (ri_stats->parsed()) return nrp::cmd_ri_stats(ri_args.resolve(ri_stats), pairs);
    if (sweep->parsed()) return nrp::cmd_sweep(sweep_args.resolve(sweep));
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
