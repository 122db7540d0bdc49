#pragma once

#include <cstddef>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "ltn/config.hpp"
#include "ltn/contrastive.hpp"
#include "ltn/model.hpp"

namespace ltn {

struct StepMetrics {
  std::size_t step = 0;
  double loss = 0.0;
  std::size_t queue_size = 0;
  double basis_orthogonality_error = 0.0;
};

/// One NDJSON record: {"step":..,"loss":..,"queue_size":..,"basis_orthogonality_error":..}.
std::string to_json_line(const StepMetrics& m);
/// Header record embedding the resolved config and seed.
std::string metrics_header(const RunConfig& config);

/// Pre-training loop: online network trained by SGD with momentum, key
/// network tracked by exponential moving average, FIFO negative queue.
class Trainer {
 public:
  explicit Trainer(RunConfig config);

  /// Restores a run saved with save(); continuing it reproduces the
  /// uninterrupted run bit for bit.
  static Trainer load(const std::filesystem::path& checkpoint);
  void save(const std::filesystem::path& checkpoint) const;

  StepMetrics step();
  std::vector<StepMetrics> run(std::size_t steps, const std::function<void(const StepMetrics&)>& on_step = {});

  /// Draws the next batch from the run RNG (advances it).
  Batch sample_batch();

  const RunConfig& config() const noexcept { return config_; }
  std::size_t steps_done() const noexcept { return step_; }
  Network& online() noexcept { return online_; }
  const Network& online() const noexcept { return online_; }
  Network& momentum_network() noexcept { return shadow_; }
  const Network& momentum_network() const noexcept { return shadow_; }
  const NegativeQueue& queue() const noexcept { return queue_; }
  const std::vector<Stream>& streams() const noexcept { return streams_; }

 private:
  struct Uninitialized {};
  explicit Trainer(Uninitialized) {}

  RunConfig config_;
  std::size_t step_ = 0;
  Network online_;
  Network shadow_;
  std::vector<Matrix> velocity_;
  NegativeQueue queue_;
  Rng rng_;
  std::vector<Stream> streams_;
};

}  // namespace ltn
