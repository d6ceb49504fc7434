#pragma once

#include <cstddef>
#include <string>

#include "nrp/config.hpp"

namespace nrp {

// Subcommand bodies, separated from argument parsing so tests can drive
// them in-process. Each returns a process exit code; invalid inputs and
// I/O failures surface as exceptions for the caller to report.
int cmd_preprocess(const ExperimentConfig& cfg);
int cmd_train(const ExperimentConfig& cfg);
int cmd_eval(const ExperimentConfig& cfg, const std::string& checkpoint_path,
             const std::string& split);
int cmd_ri_stats(const ExperimentConfig& cfg, std::size_t pairs);
int cmd_sweep(const ExperimentConfig& cfg);

}  // namespace nrp
