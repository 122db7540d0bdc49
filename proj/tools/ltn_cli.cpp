// ltn: batch runner for pre-training, probing, alignment analysis and ablations.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "ltn/errors.hpp"
#include "ltn/evaluation.hpp"
#include "ltn/experiment.hpp"
#include "ltn/selftest.hpp"
#include "ltn/trainer.hpp"

namespace fs = std::filesystem;
using namespace ltn;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitFailure = 1;
constexpr int kExitConfig = 2;
constexpr int kExitNumerical = 3;

struct Options {
  std::string config_path;
  std::string out_dir = "ltn_out";
  std::optional<std::uint64_t> seed;
  std::vector<std::string> overrides;
  std::string checkpoint;
  std::string resume;
  std::string export_streams;
  std::size_t workers = 1;
  std::size_t seeds = 5;
  std::size_t stream_index = 0;
  std::optional<std::size_t> segments;
};

// Tracks progress so a numerical abort can report where it happened.
std::size_t g_last_step = 0;

std::pair<std::string, std::string> split_override(const std::string& kv) {
  const auto eq = kv.find('=');
  if (eq == std::string::npos) throw ConfigError(kv, "--set expects key=value");
  auto trim = [](std::string s) {
    const auto b = s.find_first_not_of(" \t");
    const auto e = s.find_last_not_of(" \t");
    return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
  };
  return {trim(kv.substr(0, eq)), trim(kv.substr(eq + 1))};
}

// Config text from --config plus --set overrides (later wins), then --seed.
RunConfig resolve_config(const Options& o) {
  std::string text;
  if (!o.config_path.empty()) {
    std::ifstream is(o.config_path);
    if (!is) throw ConfigError("--config", "cannot read " + o.config_path);
    std::ostringstream buf;
    buf << is.rdbuf();
    text = buf.str();
  }
  RunConfig base = parse_config(text);
  if (o.overrides.empty() && !o.seed) return base;
  // Re-parse with the overrides appended in place of earlier values so that
  // dim-derived widths follow an overridden dim.
  std::istringstream lines(text);
  std::string line, merged;
  std::vector<std::pair<std::string, std::string>> kv;
  for (const auto& s : o.overrides) kv.push_back(split_override(s));
  if (o.seed) kv.emplace_back("seed", std::to_string(*o.seed));
  while (std::getline(lines, line)) {
    std::string body = line.substr(0, line.find('#'));
    const auto eq = body.find('=');
    if (eq != std::string::npos) {
      const std::string key = split_override(body).first;
      bool replaced = false;
      for (const auto& [k, v] : kv) replaced = replaced || k == key;
      if (replaced) continue;
    }
    merged += line + "\n";
  }
  for (const auto& [k, v] : kv) merged += k + " = " + v + "\n";
  return parse_config(merged);
}

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error("cannot create output directory " + dir.string() + ": " + ec.message());
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw Error("cannot open " + path.string() + " for writing");
  os << text;
  if (!os) throw Error("write failed for " + path.string());
}

std::string commented(const RunConfig& c) {
  std::string out = "# seed = " + std::to_string(c.seed) + "\n";
  std::istringstream is(c.to_text());
  std::string line;
  while (std::getline(is, line)) out += "# " + line + "\n";
  return out;
}

fs::path checkpoint_path(const Options& o) {
  return o.checkpoint.empty() ? fs::path(o.out_dir) / "checkpoint.ltnckpt" : fs::path(o.checkpoint);
}

// probe and align run on the config stored in the checkpoint; only
// evaluation keys may be overridden.
RunConfig evaluation_config(const RunConfig& stored, const Options& o) {
  RunConfig c = stored;
  for (const auto& s : o.overrides) {
    const auto [key, value] = split_override(s);
    if (key.rfind("probe_", 0) != 0 && key.rfind("align_", 0) != 0) {
      throw ConfigError(key, "only probe_* and align_* keys can be overridden on a trained checkpoint");
    }
    set_config_value(c, key, value);
  }
  if (o.seed && *o.seed != c.seed) throw ConfigError("--seed", "checkpoint was trained with seed " + std::to_string(c.seed));
  c.validate();
  return c;
}

int cmd_pretrain(const Options& o) {
  std::optional<Trainer> trainer;
  if (!o.resume.empty()) {
    trainer.emplace(Trainer::load(o.resume));
    if (!o.config_path.empty() || !o.overrides.empty() || o.seed) {
      const RunConfig wanted = resolve_config(o);
      if (wanted.to_text() != trainer->config().to_text()) {
        throw ConfigError("--resume", "config differs from the one stored in " + o.resume);
      }
    }
  } else {
    trainer.emplace(resolve_config(o));
  }
  const RunConfig& c = trainer->config();
  const fs::path out(o.out_dir);
  ensure_dir(out);
  write_text(out / "config.cfg", "# resolved configuration\n" + c.to_text());
  if (!o.export_streams.empty()) write_streams(o.export_streams, trainer->streams(), commented(c));

  const fs::path metrics_path = out / "metrics.ndjson";
  const bool append = !o.resume.empty() && fs::exists(metrics_path);
  std::ofstream metrics(metrics_path, append ? std::ios::app : std::ios::trunc);
  if (!metrics) throw Error("cannot open " + metrics_path.string());
  if (!append) metrics << metrics_header(c) << "\n";

  g_last_step = trainer->steps_done();
  const std::size_t remaining = c.steps > trainer->steps_done() ? c.steps - trainer->steps_done() : 0;
  const std::size_t report_every = std::max<std::size_t>(1, c.steps / 10);
  trainer->run(remaining, [&](const StepMetrics& m) {
    g_last_step = m.step;
    metrics << to_json_line(m) << "\n";
    if (m.step % report_every == 0 || m.step == c.steps) {
      std::cerr << "step " << m.step << "/" << c.steps << " loss " << m.loss << "\n";
    }
  });
  metrics.close();
  trainer->save(out / "checkpoint.ltnckpt");
  std::cout << "wrote " << (out / "checkpoint.ltnckpt").string() << " and " << metrics_path.string() << "\n";
  return kExitOk;
}

int cmd_probe(const Options& o) {
  const Trainer trainer = Trainer::load(checkpoint_path(o));
  const RunConfig c = evaluation_config(trainer.config(), o);
  const ProbeResult r = linear_probe(trainer.online(), c);
  nlohmann::ordered_json j;
  j["seed"] = c.seed;
  j["steps"] = trainer.steps_done();
  j["features"] = c.probe_features == ProbeFeatures::Original ? "original" : "blended";
  j["num_classes"] = r.num_classes;
  j["train_accuracy"] = r.train_accuracy;
  j["test_accuracy"] = r.test_accuracy;
  j["config"] = c.to_text();
  ensure_dir(o.out_dir);
  write_text(fs::path(o.out_dir) / "probe.json", j.dump(2) + "\n");
  std::cout << "probe accuracy " << std::fixed << std::setprecision(4) << r.test_accuracy << " (" << r.num_classes
            << " classes)\n";
  return kExitOk;
}

int cmd_align(const Options& o) {
  const Trainer trainer = Trainer::load(checkpoint_path(o));
  const RunConfig c = evaluation_config(trainer.config(), o);
  const std::size_t k = o.segments.value_or(c.align_segments);
  const Stream stream = analysis_stream(c, o.stream_index);
  const AlignmentResult r = time_alignment(trainer.online(), c, stream, k);
  if (r.degenerate) std::cerr << "warning: span coordinates are constant; rho reported as 0\n";

  std::ostringstream csv;
  csv << commented(c);
  csv << "# rho = " << r.rho << "\n# rho_original = " << r.rho_original << "\n";
  csv << "segment_index,t_start,coord_1,coord_2\n";
  csv << std::setprecision(17);
  for (std::size_t i = 0; i < k; ++i) {
    csv << i << "," << r.t_start[i] << "," << r.coords(i, 0) << "," << r.coords(i, 1) << "\n";
  }
  nlohmann::ordered_json j;
  j["seed"] = c.seed;
  j["segments"] = k;
  j["stream_index"] = o.stream_index;
  j["rho"] = r.rho;
  j["rho_original"] = r.rho_original;
  j["degenerate"] = r.degenerate;
  j["config"] = c.to_text();
  ensure_dir(o.out_dir);
  write_text(fs::path(o.out_dir) / "align.csv", csv.str());
  write_text(fs::path(o.out_dir) / "align.json", j.dump(2) + "\n");
  std::cout << "time alignment rho " << std::fixed << std::setprecision(4) << r.rho << " over " << k << " segments\n";
  return kExitOk;
}

int cmd_ablate(const Options& o) {
  const RunConfig base = resolve_config(o);
  const auto cells = default_ablation_grid(base);
  std::vector<std::uint64_t> seeds;
  for (std::size_t i = 0; i < o.seeds; ++i) seeds.push_back(base.seed + i);
  const std::size_t workers = resolve_workers(o.workers);
  std::cerr << cells.size() << " cells x " << seeds.size() << " seeds on " << workers << " worker(s)\n";
  const auto rows = run_ablation(base, cells, seeds, workers, [](const AblationCell& cell, const ExperimentResult& r) {
    std::cerr << "  " << cell.axis << " / " << cell.label << " seed " << r.config.seed << ": acc "
              << r.probe_accuracy << "\n";
  });

  std::ostringstream table;
  table << "# ablation over";
  for (auto s : seeds) table << " " << s;
  table << " (paired seeds)\n" << commented(base);
  table << "axis\tsetting\tmean_accuracy\tstd_accuracy\tmean_rho_untrained\tmean_rho_trained\tper_seed_accuracy\n";
  nlohmann::ordered_json j;
  j["seeds"] = seeds;
  j["config"] = base.to_text();
  j["rows"] = nlohmann::json::array();
  table << std::fixed << std::setprecision(4);
  for (const AblationRow& row : rows) {
    double r0 = 0.0, r1 = 0.0;
    std::string per_seed;
    nlohmann::ordered_json runs = nlohmann::json::array();
    for (const auto& r : row.runs) {
      r0 += r.rho_untrained / static_cast<double>(row.runs.size());
      r1 += r.rho_trained / static_cast<double>(row.runs.size());
      std::ostringstream v;
      v << std::fixed << std::setprecision(4) << r.probe_accuracy;
      per_seed += (per_seed.empty() ? "" : ",") + v.str();
      runs.push_back({{"seed", r.config.seed},
                      {"probe_accuracy", r.probe_accuracy},
                      {"rho_untrained", r.rho_untrained},
                      {"rho_trained", r.rho_trained},
                      {"final_loss", r.final_loss}});
    }
    table << row.cell.axis << "\t" << row.cell.label << "\t" << row.mean_accuracy << "\t" << row.stddev_accuracy
          << "\t" << r0 << "\t" << r1 << "\t" << per_seed << "\n";
    nlohmann::ordered_json overrides = nlohmann::json::object();
    for (const auto& [k, v] : row.cell.overrides) overrides[k] = v;
    j["rows"].push_back({{"axis", row.cell.axis},
                         {"setting", row.cell.label},
                         {"overrides", overrides},
                         {"mean_accuracy", row.mean_accuracy},
                         {"std_accuracy", row.stddev_accuracy},
                         {"runs", runs}});
  }
  ensure_dir(o.out_dir);
  write_text(fs::path(o.out_dir) / "ablation.tsv", table.str());
  write_text(fs::path(o.out_dir) / "ablation.json", j.dump(2) + "\n");
  std::cout << table.str();
  return kExitOk;
}

int cmd_selftest() {
  bool ok = true;
  for (const SelftestCheck& c : run_selftest()) {
    std::cout << (c.passed ? "PASS " : "FAIL ") << c.name << ": " << c.detail << "\n";
    ok = ok && c.passed;
  }
  return ok ? kExitOk : kExitFailure;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Latent time navigation: time-parameterized contrastive pre-training"};
  app.require_subcommand(1);
  Options o;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", o.config_path, "run config (key = value lines)")->check(CLI::ExistingFile);
    sub->add_option("--out", o.out_dir, "output directory")->capture_default_str();
    sub->add_option("--seed", o.seed, "override the config seed");
    sub->add_option("--set", o.overrides, "override one config key (key=value), repeatable");
  };

  CLI::App* pretrain = app.add_subcommand("pretrain", "train and write checkpoint + NDJSON metrics");
  add_common(pretrain);
  pretrain->add_option("--resume", o.resume, "continue from a checkpoint")->check(CLI::ExistingFile);
  pretrain->add_option("--export-streams", o.export_streams, "also write the training streams (LTNSTRM1)");

  CLI::App* probe = app.add_subcommand("probe", "linear probe on a checkpoint's frozen encoder");
  add_common(probe);
  probe->add_option("--checkpoint", o.checkpoint, "checkpoint (default <out>/checkpoint.ltnckpt)");

  CLI::App* align = app.add_subcommand("align", "time-order alignment of span coordinates");
  add_common(align);
  align->add_option("--checkpoint", o.checkpoint, "checkpoint (default <out>/checkpoint.ltnckpt)");
  align->add_option("--segments", o.segments, "uniform segments K (default align_segments)");
  align->add_option("--stream-index", o.stream_index, "noise-free analysis stream number");

  CLI::App* ablate = app.add_subcommand("ablate", "grid of runs; writes a summary table");
  add_common(ablate);
  ablate->add_option("--workers", o.workers, "parallel runs (LTN_DETERMINISTIC=1 forces 1)")->capture_default_str();
  ablate->add_option("--seeds", o.seeds, "paired seeds per cell, starting at the config seed")->capture_default_str();

  CLI::App* selftest = app.add_subcommand("selftest", "gradient checks and invariant suites");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (*pretrain) return cmd_pretrain(o);
    if (*probe) return cmd_probe(o);
    if (*align) return cmd_align(o);
    if (*ablate) return cmd_ablate(o);
    if (*selftest) return cmd_selftest();
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const NumericalError& e) {
    std::cerr << "numerical abort at step " << g_last_step + (*pretrain ? 1 : 0) << ": " << e.what() << "\n";
    return kExitNumerical;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitFailure;
  }
  return kExitFailure;
}
