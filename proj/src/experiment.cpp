#include "ltn/experiment.hpp"

#include <atomic>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <string_view>
#include <thread>

#include "ltn/errors.hpp"
#include "ltn/evaluation.hpp"

namespace ltn {

ExperimentResult run_experiment(const RunConfig& config, const std::function<void(const StepMetrics&)>& on_step) {
  ExperimentResult out;
  out.config = config;
  Trainer trainer(config);
  const Stream stream = analysis_stream(config, 0);
  out.rho_untrained = time_alignment(trainer.online(), config, stream, config.align_segments).rho;
  const auto metrics = trainer.run(config.steps, on_step);
  out.steps = trainer.steps_done();
  out.final_loss = metrics.empty() ? 0.0 : metrics.back().loss;
  out.probe_accuracy = linear_probe(trainer.online(), config).test_accuracy;
  out.rho_trained = time_alignment(trainer.online(), config, stream, config.align_segments).rho;
  return out;
}

std::vector<AblationCell> default_ablation_grid(const RunConfig& base) {
  std::vector<AblationCell> cells;
  auto add = [&](std::string axis, std::string label, std::vector<std::pair<std::string, std::string>> kv) {
    cells.push_back({std::move(axis), std::move(label), std::move(kv)});
  };
  add("variant", "none", {{"variant", "none"}});
  add("variant", "v1", {{"variant", "v1"}});
  add("variant", "v2", {{"variant", "v2"}});
  add("variant", "v3 w/o orthogonalization", {{"variant", "v3"}, {"orthogonalize", "false"}});
  add("variant", "v3", {{"variant", "v3"}, {"orthogonalize", "true"}});

  const std::size_t dim = base.dim;
  for (std::size_t m : {dim / 16, dim / 8, dim / 4}) {
    if (m >= 1 && m < dim) add("basis_size", "M=" + std::to_string(m), {{"variant", "v3"}, {"basis_size", std::to_string(m)}});
  }
  for (std::size_t layers : {1, 2, 3})
    add("te_layers", std::to_string(layers) + " layers", {{"variant", "v3"}, {"te_layers", std::to_string(layers)}});
  for (std::size_t width : {std::max<std::size_t>(1, dim / 16), std::max<std::size_t>(1, dim / 2), dim})
    add("te_width", "width " + std::to_string(width), {{"variant", "v3"}, {"te_width", std::to_string(width)}});
  for (std::size_t p : {1, 2, 4})
    add("num_positives", "P=" + std::to_string(p), {{"variant", "v3"}, {"num_positives", std::to_string(p)}});
  for (const char* fw : {"moco", "byol"}) {
    add("framework", std::string(fw) + " base", {{"variant", "none"}, {"framework", fw}});
    add("framework", std::string(fw) + " v3", {{"variant", "v3"}, {"framework", fw}});
  }
  return cells;
}

RunConfig apply_overrides(const RunConfig& base, const AblationCell& cell, std::uint64_t seed) {
  RunConfig c = base;
  for (const auto& [key, value] : cell.overrides) set_config_value(c, key, value);
  c.seed = seed;
  c.validate();
  return c;
}

std::vector<AblationRow> run_ablation(const RunConfig& base, std::span<const AblationCell> cells,
                                      std::span<const std::uint64_t> seeds, std::size_t workers,
                                      const std::function<void(const AblationCell&, const ExperimentResult&)>& done) {
  std::vector<AblationRow> rows(cells.size());
  for (std::size_t i = 0; i < cells.size(); ++i) {
    rows[i].cell = cells[i];
    rows[i].runs.resize(seeds.size());
    apply_overrides(base, cells[i], seeds.empty() ? base.seed : seeds[0]);
  }
  const std::size_t jobs = cells.size() * seeds.size();
  std::atomic<std::size_t> next{0};
  std::atomic<bool> failed{false};
  std::exception_ptr first_error;
  std::mutex lock;

  auto worker = [&] {
    for (;;) {
      const std::size_t job = next.fetch_add(1);
      if (job >= jobs || failed.load()) return;
      const std::size_t c = job / seeds.size(), s = job % seeds.size();
      try {
        ExperimentResult r = run_experiment(apply_overrides(base, cells[c], seeds[s]));
        std::lock_guard<std::mutex> guard(lock);
        rows[c].runs[s] = std::move(r);
        if (done) done(cells[c], rows[c].runs[s]);
      } catch (...) {
        std::lock_guard<std::mutex> guard(lock);
        if (!first_error) first_error = std::current_exception();
        failed.store(true);
      }
    }
  };
  const std::size_t n = std::max<std::size_t>(1, std::min(workers, jobs));
  if (n == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t i = 0; i < n; ++i) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  if (first_error) std::rethrow_exception(first_error);

  for (AblationRow& row : rows) {
    if (row.runs.empty()) continue;
    double sum = 0.0;
    for (const auto& r : row.runs) sum += r.probe_accuracy;
    row.mean_accuracy = sum / static_cast<double>(row.runs.size());
    double var = 0.0;
    for (const auto& r : row.runs) var += std::pow(r.probe_accuracy - row.mean_accuracy, 2);
    row.stddev_accuracy = row.runs.size() > 1 ? std::sqrt(var / static_cast<double>(row.runs.size() - 1)) : 0.0;
  }
  return rows;
}

std::size_t resolve_workers(std::size_t requested) {
  if (const char* env = std::getenv("LTN_DETERMINISTIC"); env && std::string_view(env) == "1") return 1;
  return std::max<std::size_t>(1, requested);
}

}  // namespace ltn
