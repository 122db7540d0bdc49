#include "ltn/selftest.hpp"

#include <cmath>
#include <cstdint>
#include <deque>
#include <filesystem>
#include <functional>
#include <sstream>

#include "ltn/basis.hpp"
#include "ltn/contrastive.hpp"
#include "ltn/errors.hpp"
#include "ltn/grad_check.hpp"
#include "ltn/navigation.hpp"
#include "ltn/ops.hpp"
#include "ltn/trainer.hpp"

namespace ltn {
namespace {

constexpr double kGradTolerance = 1e-4;

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(3);
  os << std::scientific << v;
  return os.str();
}

Matrix randn(std::size_t r, std::size_t c, Rng& rng) { return gaussian_matrix(r, c, 1.0, rng); }

SelftestCheck primitive_gradients() {
  Rng rng(1);
  using Op = std::function<Var(Var)>;
  const std::vector<std::pair<std::string, Op>> ops = {
      {"relu", [](Var a) { return relu(a); }},
      {"exp", [](Var a) { return exp(scale(a, 0.5)); }},
      {"softmax_rows", [](Var a) { return softmax_rows(a); }},
      {"l2_normalize_rows", [](Var a) { return l2_normalize_rows(a); }},
      {"logsumexp_rows", [](Var a) { return concat_cols({logsumexp_rows(a), a}); }},
      {"transpose", [](Var a) { return transpose(transpose(a)); }},
      {"hadamard", [](Var a) { return hadamard(a, a); }},
      {"group_mean_rows", [](Var a) { return concat_rows({group_mean_rows(slice_rows(a, 0, 2), 2), a}); }},
  };
  double worst = 0.0;
  std::string worst_op;
  for (const auto& [name, op] : ops) {
    Matrix x = randn(3, 4, rng);
    Matrix* params[] = {&x};
    const auto f = [&](Tape& t, std::span<const Var> p) {
      const Var y = op(p[0]);
      // Fixed, entry-distinct weights so every output entry carries gradient.
      Matrix wy(y.rows(), y.cols());
      for (std::size_t k = 0; k < wy.size(); ++k) wy[k] = std::sin(1.0 + 0.7 * static_cast<double>(k));
      return sum(hadamard(y, t.constant(wy)));
    };
    const double e = grad_check(f, params).max_relative_error;
    if (e > worst) {
      worst = e;
      worst_op = name;
    }
  }
  return {"primitive gradients", worst < kGradTolerance, "worst " + fmt(worst) + (worst_op.empty() ? "" : " (" + worst_op + ")")};
}

SelftestCheck full_loss_gradients() {
  double worst = 0.0;
  int count = 0;
  for (const char* variant : {"none", "v1", "v2", "v3"}) {
    for (const char* den : {"pos+neg", "neg_only"}) {
      const RunConfig c = parse_config(std::string("variant = ") + variant + "\ndenominator = " + den +
                                       "\ndim = 8\nbasis_size = 3\nfeature_dim = 4\nqueue_capacity = 6\n"
                                       "batch_size = 2\nnum_positives = 2\ntrain_streams = 4\nte_width = 6\n");
      Trainer t(c);
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
      opt.max_entries_per_param = 8;
      worst = std::max(worst, grad_check(f, params, opt).max_relative_error);
      ++count;
    }
  }
  return {"end-to-end loss gradients", worst < kGradTolerance, std::to_string(count) + " configs, worst " + fmt(worst)};
}

SelftestCheck gram_schmidt() {
  Rng rng(2);
  double worst = 0.0;
  for (int i = 0; i < 50; ++i) worst = std::max(worst, orthogonality_error(orthogonalize(randn(16, 6, rng))));
  bool degenerate_caught = false;
  Matrix dup = randn(5, 2, rng);
  for (std::size_t r = 0; r < 5; ++r) dup(r, 1) = dup(r, 0);
  try {
    orthogonalize(dup);
  } catch (const DegenerateBasisError& e) {
    degenerate_caught = e.column() == 1;
  }
  return {"Gram-Schmidt orthonormality", worst < 1e-12 && degenerate_caught, "max |QtQ - I| " + fmt(worst)};
}

SelftestCheck subspace_locality() {
  Rng rng(3);
  double worst = 0.0;
  for (int i = 0; i < 200; ++i) {
    TimeEncoderShape s;
    s.rep_dim = 12;
    s.out_width = 4;
    s.hidden_width = 12;
    s.inner_width = 3;
    s.time_scale = 10.0;
    const TimeEncoder enc = TimeEncoder::random(s, rng);
    const Matrix q = orthogonalize(randn(12, 4, rng));
    const Matrix f = randn(1, 12, rng);
    const BlendedValue out = navigate_v3(f, {std::uniform_real_distribution<double>(0.0, 10.0)(rng)}, enc, q);
    const Matrix delta = out.blended - f;
    worst = std::max(worst, frobenius_norm(complement_residual(delta, q)) / (1.0 + frobenius_norm(delta)));
    worst = std::max(worst, max_abs_diff(complement_residual(out.blended, q), complement_residual(f, q)));
  }
  return {"variant 3 subspace locality", worst < 1e-9, "worst " + fmt(worst)};
}

SelftestCheck info_nce_reference() {
  Rng rng(4);
  double worst = 0.0;
  for (Denominator mode : {Denominator::PosNeg, Denominator::NegOnly}) {
    for (int i = 0; i < 20; ++i) {
      const Matrix query = l2_normalize_rows(randn(1, 5, rng));
      std::vector<Matrix> pos{l2_normalize_rows(randn(1, 5, rng)), l2_normalize_rows(randn(1, 5, rng))};
      const Matrix neg = l2_normalize_rows(randn(4, 5, rng));
      std::vector<double> ps, ns;
      for (const Matrix& k : pos) ps.push_back(matmul_nt(query, k)(0, 0) / 0.1);
      for (std::size_t r = 0; r < 4; ++r) {
        double d = 0.0;
        for (std::size_t j = 0; j < 5; ++j) d += query(0, j) * neg(r, j);
        ns.push_back(d / 0.1);
      }
      Tape tape;
      const double got = info_nce(tape.constant(query), pos, neg, 0.1, mode).value()(0, 0);
      worst = std::max(worst, std::abs(got - info_nce(ps, ns, mode)));
    }
  }
  return {"InfoNCE reference agreement", worst < 1e-10, "worst " + fmt(worst)};
}

SelftestCheck queue_and_momentum() {
  Rng rng(5);
  NegativeQueue queue(13, 3);
  std::deque<Matrix> model;
  bool ok = true;
  for (int i = 0; i < 200 && ok; ++i) {
    const Matrix k = l2_normalize_rows(randn(1, 3, rng));
    queue.enqueue(k);
    model.push_back(k);
    if (model.size() > 13) model.pop_front();
    const Matrix ordered = queue.ordered();
    for (std::size_t r = 0; r < model.size(); ++r)
      for (std::size_t j = 0; j < 3; ++j) ok = ok && ordered(r, j) == model[r](0, j);
  }
  Matrix s = randn(2, 2, rng), o = randn(2, 2, rng);
  const Matrix s0 = s;
  momentum_update(std::vector<NamedParam>{{"w", &s}}, std::vector<NamedParam>{{"w", &o}}, 0.5);
  for (std::size_t k = 0; k < 4; ++k) ok = ok && std::abs(s[k] - (0.5 * s0[k] + 0.5 * o[k])) < 1e-15;
  return {"queue FIFO and momentum rule", ok, ok ? "200 enqueues replayed" : "mismatch"};
}

SelftestCheck determinism_and_checkpoint() {
  const RunConfig c = parse_config(
      "dim = 16\nbasis_size = 4\nqueue_capacity = 32\nbatch_size = 4\nnum_positives = 2\ntrain_streams = 8\n");
  auto text = [](const std::vector<StepMetrics>& m) {
    std::string s;
    for (const auto& x : m) s += to_json_line(x) + "\n";
    return s;
  };
  Trainer a(c), b(c);
  const bool same = text(a.run(3)) == text(b.run(3));
  const auto path = std::filesystem::temp_directory_path() /
                    ("ltn_selftest_" + std::to_string(reinterpret_cast<std::uintptr_t>(&a)) + ".ckpt");
  a.save(path);
  Trainer resumed = Trainer::load(path);
  std::filesystem::remove(path);
  const bool replay = text(a.run(2)) == text(resumed.run(2));
  return {"determinism and checkpoint replay", same && replay,
          std::string(same ? "repeat ok" : "repeat differs") + ", " + (replay ? "resume ok" : "resume differs")};
}

}  // namespace

std::vector<SelftestCheck> run_selftest() {
  std::vector<SelftestCheck> out;
  const std::vector<std::function<SelftestCheck()>> checks = {
      primitive_gradients, full_loss_gradients, gram_schmidt,        subspace_locality,
      info_nce_reference,  queue_and_momentum,  determinism_and_checkpoint,
  };
  for (const auto& check : checks) {
    try {
      out.push_back(check());
    } catch (const std::exception& e) {
      out.push_back({"(check aborted)", false, e.what()});
    }
  }
  return out;
}

}  // namespace ltn
