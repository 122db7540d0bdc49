#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "ltn/config.hpp"
#include "ltn/trainer.hpp"

namespace ltn {

/// One pre-train + evaluate run.
struct ExperimentResult {
  RunConfig config;
  double probe_accuracy = 0.0;
  double rho_untrained = 0.0;
  double rho_trained = 0.0;
  double final_loss = 0.0;
  std::size_t steps = 0;
};

/// Trains `config.steps` steps, then probes the frozen encoder and measures
/// time alignment on analysis stream 0 before and after training.
ExperimentResult run_experiment(const RunConfig& config,
                                const std::function<void(const StepMetrics&)>& on_step = {});

/// A grid cell: the base config with some keys overridden.
struct AblationCell {
  std::string axis;
  std::string label;
  std::vector<std::pair<std::string, std::string>> overrides;
};

/// One-axis-at-a-time sweep around `base` over navigation variant, basis
/// size, time-encoder depth and width, number of positives and framework.
std::vector<AblationCell> default_ablation_grid(const RunConfig& base);

RunConfig apply_overrides(const RunConfig& base, const AblationCell& cell, std::uint64_t seed);

struct AblationRow {
  AblationCell cell;
  std::vector<ExperimentResult> runs;  // one per seed, in seed order
  double mean_accuracy = 0.0;
  double stddev_accuracy = 0.0;
};

/// Runs every (cell, seed) pair on a pool of `workers` threads. Results are
/// placed by index, so the output does not depend on the worker count. The
/// first failure is rethrown after all workers stop.
std::vector<AblationRow> run_ablation(const RunConfig& base, std::span<const AblationCell> cells,
                                      std::span<const std::uint64_t> seeds, std::size_t workers,
                                      const std::function<void(const AblationCell&, const ExperimentResult&)>& done = {});

/// `requested` clamped to >= 1; LTN_DETERMINISTIC=1 forces a single worker.
std::size_t resolve_workers(std::size_t requested);

}  // namespace ltn
