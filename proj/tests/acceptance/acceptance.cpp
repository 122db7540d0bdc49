// Acceptance suite: one PASS/FAIL line per criterion and a summary line.
// Exit status is 1 if a criterion could not be evaluated; with --strict, also
// if any criterion fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <deque>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <unistd.h>

#include "ltn/basis.hpp"
#include "ltn/contrastive.hpp"
#include "ltn/experiment.hpp"
#include "ltn/grad_check.hpp"
#include "ltn/navigation.hpp"
#include "ltn/ops.hpp"
#include "ltn/trainer.hpp"
#include "oracles.hpp"

using namespace ltn;

namespace {

struct Outcome {
  bool passed = false;
  std::string detail;
};

std::string sci(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3e", v);
  return buf;
}

std::string fixed(double v, int digits = 4) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

Outcome orthogonality_invariant() {
  Trainer t(RunConfig{});
  double worst = 0.0;
  std::size_t steps = 0;
  const auto t0 = std::chrono::steady_clock::now();
  t.run(500, [&](const StepMetrics& m) {
    worst = std::max(worst, m.basis_orthogonality_error);
    ++steps;
  });
  // The basis as it stands after the last update must also be orthonormal.
  worst = std::max(worst, orthogonality_error(orthogonalize(t.online().basis.raw)));
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return {steps == 500 && worst < 1e-8 && secs < 120.0,
          std::to_string(steps) + " steps, max |QtQ - I| " + sci(worst) + ", " + fixed(secs, 1) + " s"};
}

Outcome subspace_locality() {
  RunConfig c;
  c.variant = Variant::LinearTransform;
  Rng rng(mix_seed(c.seed, 0xACC2));
  Network net = Network::create(c, rng);
  const Matrix q = orthogonalize(net.basis.raw);
  std::uniform_real_distribution<double> time(0.0, c.duration);
  double off_span = 0.0, complement = 0.0;
  for (int i = 0; i < 1000; ++i) {
    const Matrix f = gaussian_matrix(1, c.dim, 1.0 + static_cast<double>(i % 7), rng);
    const BlendedValue out = navigate_v3(f, {time(rng)}, net.time, q);
    const Matrix delta = out.blended - f;
    off_span = std::max(off_span, frobenius_norm(complement_residual(delta, q)) / (1.0 + frobenius_norm(delta)));
    complement = std::max(complement, max_abs_diff(complement_residual(out.blended, q), complement_residual(f, q)));
  }
  return {off_span < 1e-9 && complement < 1e-9,
          "1000 pairs, off-span ratio " + sci(off_span) + ", complement drift " + sci(complement)};
}

Outcome gradient_correctness() {
  const char* variants[] = {"none", "v1", "v2", "v3"};
  const char* denominators[] = {"pos+neg", "neg_only"};
  double worst = 0.0;
  std::size_t configs = 0, entries = 0;
  const auto t0 = std::chrono::steady_clock::now();
  for (std::uint64_t seed = 1; seed <= 3; ++seed) {
    for (const char* variant : variants) {
      for (const char* den : denominators) {
        std::ostringstream text;
        text << "variant = " << variant << "\ndenominator = " << den << "\nseed = " << seed
             << "\ndim = " << 8 + 4 * seed << "\nbasis_size = " << 1 + seed << "\nfeature_dim = 5\n"
             << "queue_capacity = " << 4 + 3 * seed << "\nbatch_size = 2\nnum_positives = " << seed
             << "\ntrain_streams = 4\nte_width = 6\nproj_dim = 6\n"
             << "attention_mode = " << (seed == 2 ? "projection" : "hadamard") << "\n";
        const RunConfig c = parse_config(text.str());
        Trainer t(c);
        t.run(seed - 1);
        const Batch batch = t.sample_batch();
        const auto keys = encode_keys(t.momentum_network(), c, batch);
        const Matrix negatives = t.queue().active();
        Network& net = t.online();
        const auto named = net.params();
        std::vector<Matrix*> params;
        for (const NamedParam& p : named) params.push_back(p.value);
        const auto f = [&](Tape& tape, std::span<const Var> p) {
          Binder bind(tape, false);
          for (std::size_t i = 0; i < named.size(); ++i) bind.bind(*named[i].value, p[i]);
          return batch_loss(bind, net, c, batch, keys, negatives).loss;
        };
        GradCheckOptions opt;
        opt.max_entries_per_param = 24;
        opt.seed = seed;
        const GradCheckReport r = grad_check(f, params, opt);
        worst = std::max(worst, r.max_relative_error);
        entries += r.entries_checked;
        ++configs;
      }
    }
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return {configs >= 20 && worst < 1e-4,
          std::to_string(configs) + " configs, " + std::to_string(entries) + " entries, worst relative error " +
              sci(worst) + ", " + fixed(secs, 1) + " s"};
}

Outcome info_nce_oracle() {
  Rng rng(0x1CE);
  double worst = 0.0;
  std::size_t cases = 0;
  for (bool neg_only : {false, true}) {
    for (std::size_t p = 1; p <= 3; ++p) {
      for (std::size_t n = 1; n <= 5; ++n) {
        for (int trial = 0; trial < 10; ++trial) {
          const double temp = 0.05 + 0.5 * std::uniform_real_distribution<double>(0.0, 1.0)(rng);
          const Matrix query = l2_normalize_rows(gaussian_matrix(1, 6, 1.0, rng));
          std::vector<Matrix> pos;
          for (std::size_t k = 0; k < p; ++k) pos.push_back(l2_normalize_rows(gaussian_matrix(1, 6, 1.0, rng)));
          const Matrix neg = l2_normalize_rows(gaussian_matrix(n, 6, 1.0, rng));
          const oracle::Vec qv = oracle::from(query)[0];
          oracle::Vec ps, ns;
          for (const Matrix& k : pos) ps.push_back(oracle::cosine(qv, oracle::from(k)[0]) / temp);
          for (const oracle::Vec& row : oracle::from(neg)) ns.push_back(oracle::cosine(qv, row) / temp);
          Tape tape;
          const double got = info_nce(tape.constant(query), pos, neg, temp,
                                      neg_only ? Denominator::NegOnly : Denominator::PosNeg)
                                 .value()(0, 0);
          worst = std::max(worst, static_cast<double>(std::fabs(got - oracle::info_nce(ps, ns, neg_only))));
          ++cases;
        }
      }
    }
  }
  return {worst < 1e-10, std::to_string(cases) + " cases over P<=3, N<=5, both modes, worst " + sci(worst)};
}

// Directional comparisons train longer than the default and probe on larger
// held-out sets to keep the seed-to-seed spread below the effects measured.
RunConfig directional_base(Regime regime) {
  RunConfig c;
  c.regime = regime;
  c.steps = 2000;
  c.probe_train_streams = 256;
  c.probe_test_streams = 256;
  return c;
}

std::vector<AblationRow> run_cells(const RunConfig& base, const std::vector<AblationCell>& cells) {
  const std::vector<std::uint64_t> seeds = {1, 2, 3, 4, 5};
  const std::size_t workers = resolve_workers(std::max(1u, std::thread::hardware_concurrency()));
  return run_ablation(base, cells, seeds, workers);
}

const std::vector<AblationRow>& temporal_rows() {
  static const std::vector<AblationRow> rows = [] {
    const std::vector<AblationCell> cells = {
        {"variant", "none", {{"variant", "none"}}},
        {"variant", "v2", {{"variant", "v2"}}},
        {"variant", "v3 w/o orth", {{"variant", "v3"}, {"orthogonalize", "false"}}},
        {"variant", "v3", {{"variant", "v3"}, {"orthogonalize", "true"}}},
    };
    return run_cells(directional_base(Regime::TemporalDirection), cells);
  }();
  return rows;
}

Outcome variant_ordering() {
  const auto t0 = std::chrono::steady_clock::now();
  const auto& rows = temporal_rows();
  const double none = rows[0].mean_accuracy, v2 = rows[1].mean_accuracy, v3_raw = rows[2].mean_accuracy,
               v3 = rows[3].mean_accuracy;
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  const bool ordered = v3 >= v3_raw && v3_raw >= v2 && v2 >= none;
  return {ordered && v3 - none >= 0.03,
          "none " + fixed(none) + ", v2 " + fixed(v2) + ", v3 w/o orth " + fixed(v3_raw) + ", v3 " + fixed(v3) +
              ", margin " + fixed(100.0 * (v3 - none), 2) + " pts, " + fixed(secs, 0) + " s"};
}

Outcome alignment_gain() {
  const AblationRow& v3 = temporal_rows()[3];
  double before = 0.0, after = 0.0;
  for (const ExperimentResult& r : v3.runs) {
    before += r.rho_untrained / static_cast<double>(v3.runs.size());
    after += r.rho_trained / static_cast<double>(v3.runs.size());
  }
  return {after - before >= 0.3,
          "rho untrained " + fixed(before, 3) + ", trained " + fixed(after, 3) + ", gain " + fixed(after - before, 3)};
}

Outcome invariance_preservation() {
  const RunConfig base = directional_base(Regime::StaticTexture);
  const std::vector<AblationCell> cells = {
      {"variant", "none", {{"variant", "none"}}},
      {"variant", "v3", {{"variant", "v3"}, {"orthogonalize", "true"}}},
  };
  const auto rows = run_cells(base, cells);
  const double none = rows[0].mean_accuracy, v3 = rows[1].mean_accuracy;
  return {v3 >= none - 0.02, "none " + fixed(none) + ", v3 " + fixed(v3)};
}

std::string metrics_text(const std::vector<StepMetrics>& m) {
  std::string s;
  for (const StepMetrics& x : m) s += to_json_line(x) + "\n";
  return s;
}

std::string file_bytes(const std::filesystem::path& p) {
  std::ifstream is(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(is), std::istreambuf_iterator<char>()};
}

Outcome determinism_and_checkpoint() {
  RunConfig c;
  c.steps = 120;
  const auto dir = std::filesystem::temp_directory_path() / ("ltn_acceptance_" + std::to_string(::getpid()));
  std::filesystem::create_directories(dir);
  Trainer a(c), b(c);
  const std::string ma = metrics_text(a.run(c.steps));
  const std::string mb = metrics_text(b.run(c.steps));
  a.save(dir / "a.ckpt");
  b.save(dir / "b.ckpt");
  const bool repeat = ma == mb && file_bytes(dir / "a.ckpt") == file_bytes(dir / "b.ckpt");

  Trainer first(c);
  std::string split = metrics_text(first.run(c.steps / 2));
  first.save(dir / "half.ckpt");
  Trainer resumed = Trainer::load(dir / "half.ckpt");
  split += metrics_text(resumed.run(c.steps - c.steps / 2));
  resumed.save(dir / "resumed.ckpt");
  const bool resume = split == ma && file_bytes(dir / "resumed.ckpt") == file_bytes(dir / "a.ckpt");
  std::filesystem::remove_all(dir);
  return {repeat && resume, std::string(repeat ? "repeat runs byte-identical" : "repeat runs differ") + ", " +
                                (resume ? "resumed run bit-exact" : "resumed run differs")};
}

Outcome queue_and_momentum() {
  Rng rng(0x0DE);
  const std::size_t capacity = 37;
  NegativeQueue queue(capacity, 4);
  std::deque<Matrix> replay;
  bool fifo = true;
  for (int i = 0; i < 1000 && fifo; ++i) {
    const Matrix k = l2_normalize_rows(gaussian_matrix(1 + static_cast<std::size_t>(i % 3), 4, 1.0, rng));
    queue.enqueue(k);
    for (std::size_t r = 0; r < k.rows(); ++r) {
      replay.push_back(Matrix(1, 4, std::vector<double>(k.row(r).begin(), k.row(r).end())));
      if (replay.size() > capacity) replay.pop_front();
    }
    const Matrix ordered = queue.ordered();
    fifo = fifo && ordered.rows() == replay.size() && queue.size() == replay.size();
    for (std::size_t r = 0; fifo && r < replay.size(); ++r)
      for (std::size_t j = 0; j < 4; ++j) fifo = fifo && ordered(r, j) == replay[r](0, j);
  }

  bool momentum = true;
  double worst = 0.0;
  for (double m : {0.0, 0.5, 0.99, 1.0}) {
    Matrix s = gaussian_matrix(5, 3, 1.0, rng), o = gaussian_matrix(5, 3, 1.0, rng);
    const Matrix s0 = s;
    momentum_update(std::vector<NamedParam>{{"w", &s}}, std::vector<NamedParam>{{"w", &o}}, m);
    for (std::size_t k = 0; k < s.size(); ++k) {
      const long double want = static_cast<long double>(m) * s0[k] + (1.0L - m) * o[k];
      const double err = static_cast<double>(std::fabs(s[k] - want));
      worst = std::max(worst, err);
      // The endpoints are exact copies.
      if (m == 0.0) momentum = momentum && s[k] == o[k];
      if (m == 1.0) momentum = momentum && s[k] == s0[k];
      momentum = momentum && err <= 4e-16 * (std::fabs(s0[k]) + std::fabs(o[k]));
    }
  }
  return {fifo && momentum, std::string(fifo ? "1000 enqueues replayed" : "FIFO replay mismatch") +
                                ", momentum worst abs error " + sci(worst) + " at m in {0, 0.5, 0.99, 1}"};
}

}  // namespace

int main(int argc, char** argv) {
  const bool strict = argc > 1 && std::string(argv[1]) == "--strict";
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"1 orthogonality invariant", orthogonality_invariant},
      {"2 subspace locality", subspace_locality},
      {"3 gradient correctness", gradient_correctness},
      {"4 InfoNCE oracle equivalence", info_nce_oracle},
      {"5 variant ordering (temporal-direction)", variant_ordering},
      {"6 time alignment gain", alignment_gain},
      {"7 invariance preservation (static-texture)", invariance_preservation},
      {"8 determinism and checkpointing", determinism_and_checkpoint},
      {"9 queue and momentum contracts", queue_and_momentum},
  };
  int failures = 0, aborted = 0;
  for (const auto& [name, run] : criteria) {
    Outcome r;
    try {
      r = run();
    } catch (const std::exception& e) {
      r = {false, std::string("aborted: ") + e.what()};
      ++aborted;
    }
    std::printf("%s criterion %s: %s\n", r.passed ? "PASS" : "FAIL", name.c_str(), r.detail.c_str());
    std::fflush(stdout);
    failures += r.passed ? 0 : 1;
  }
  std::printf("acceptance: %zu of %zu criteria pass\n", criteria.size() - static_cast<std::size_t>(failures),
              criteria.size());
  if (aborted > 0) return 1;
  return strict && failures > 0 ? 1 : 0;
}
