#pragma once

#include "cli_config.hpp"

#include <exception>
#include <string>
#include <vector>

namespace nckernel::cli {

/// What `estimate` computes, before anything is written.
struct EstimateRun {
    Dataset data;
    PipelineResult result;
};

EstimateRun run_estimate(const RunConfig& config);

/// FNV-1a over the lengthscales of every block, in the order D, V, X, W, Z.
std::string lengthscale_digest(const KernelSet& kernels);

// Each command writes its artifacts and a manifest.json under config.out and
// returns the paths it wrote.
std::vector<std::string> cmd_estimate(const RunConfig& config);
std::vector<std::string> cmd_tune(const RunConfig& config);
std::vector<std::string> cmd_simulate(const RunConfig& config);
std::vector<std::string> cmd_generate(const RunConfig& config);

/// 0 success, 1 runtime or numerical failure, 2 configuration or ingestion failure.
int exit_code_for(const std::exception& e);

}  // namespace nckernel::cli
