#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "nrp/model_core.hpp"
#include "nrp/random_index.hpp"
#include "nrp/sweep.hpp"
#include "nrp/trainer.hpp"

namespace nrp {

// Flat key=value experiment description. Enumerated values stay as strings
// here (validated on set) so the file, the CLI flags and the effective-
// config echo all speak the same names; accessors convert on use.
struct ExperimentConfig {
  std::string model = "baseline";
  std::string train_path;
  std::string valid_path;
  std::string test_path;
  std::string out_dir = "out";
  std::size_t vocab_cap = 10000;
  std::size_t n = 5;
  std::size_t m = 512;
  std::size_t h = 512;
  uint32_t k = 7500;
  uint32_t s = 4;
  std::string ri_mode = "ternary";
  std::string activation = "relu";
  double dropout = 0.05;
  bool dropout_output = false;
  bool pad_start = false;
  double lr = 0.5;
  double lr_decay = 0.5;
  double clip = 1.0;
  std::size_t patience = 3;
  std::size_t batch = 128;
  std::size_t max_epochs = 50;
  uint64_t seed = 1;
  std::string precision = "f32";
  std::string kind_list = "nrp";
  std::string k_list;
  std::string s_list;
  std::string m_list;
  std::string h_list;
  std::string dropout_list;
  std::string mode_list = "ternary";
  std::size_t repetitions = 3;
  std::size_t jobs = 1;

  ModelKind model_kind() const { return model_kind_from_string(model); }
  Activation activation_kind() const { return activation_from_string(activation); }
  RiMode ri_mode_kind() const { return ri_mode_from_string(ri_mode); }
  bool use_f64() const { return precision == "f64"; }

  std::string vocab_cache_path() const { return out_dir + "/vocab.bin"; }
  std::string checkpoint_path() const { return out_dir + "/model.ckpt"; }
  std::string train_log_path() const { return out_dir + "/train_log.csv"; }
  std::string effective_config_path() const { return out_dir + "/effective.conf"; }
};

struct ConfigKey {
  const char* name;
  std::function<void(ExperimentConfig&, const std::string&)> set;
  std::function<std::string(const ExperimentConfig&)> get;
};

// Single source of truth for key names: file parser, flag registration and
// the echo all iterate this.
const std::vector<ConfigKey>& config_keys();

// Unknown keys and malformed values throw with the key named.
void set_config_value(ExperimentConfig& cfg, const std::string& key, const std::string& value);

void apply_config_text(ExperimentConfig& cfg, const std::string& text,
                       const std::string& source_name);
ExperimentConfig load_config_file(const std::string& path);

// Every key in registry order; parses back to an identical config.
std::string render_config(const ExperimentConfig& cfg);

// Shape and cross-field checks shared by train/eval/sweep entry points.
void validate_config(const ExperimentConfig& cfg);

TrainConfig train_config_from(const ExperimentConfig& cfg);
SweepSpec sweep_spec_from_config(const ExperimentConfig& cfg);

std::vector<std::string> split_list(const std::string& csv);

}  // namespace nrp
