#include "ltn/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include <Eigen/Dense>

#include "ltn/errors.hpp"
#include "ltn/ops.hpp"

namespace ltn {
namespace {

std::size_t count_classes(const std::vector<int>& y) {
  int max_label = -1;
  for (int v : y) {
    if (v < 0) throw Error("negative class label");
    max_label = std::max(max_label, v);
  }
  return static_cast<std::size_t>(max_label + 1);
}

double accuracy(const Matrix& x, const std::vector<int>& y, const Matrix& w, const Matrix& b) {
  if (y.empty()) return 0.0;
  const Matrix logits = matmul(x, w);
  std::size_t correct = 0;
  for (std::size_t i = 0; i < x.rows(); ++i) {
    std::size_t best = 0;
    for (std::size_t c = 1; c < logits.cols(); ++c)
      if (logits(i, c) + b[c] > logits(i, best) + b[best]) best = c;
    if (static_cast<int>(best) == y[i]) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(y.size());
}

}  // namespace

ProbeResult fit_linear_probe(const LabeledFeatures& train, const LabeledFeatures& test, const ProbeOptions& options) {
  if (train.x.rows() != train.y.size() || test.x.rows() != test.y.size()) {
    throw ShapeError("probe features and labels disagree in count");
  }
  if (train.x.cols() != test.x.cols()) throw ShapeError("probe train/test feature widths differ");
  if (std::set<int>(train.y.begin(), train.y.end()).size() < 2) {
    throw Error("linear probe needs at least two classes in the training labels");
  }
  const std::size_t classes = std::max(count_classes(train.y), count_classes(test.y));
  const std::size_t n = train.x.rows(), d = train.x.cols();

  // Standardize with training statistics.
  std::vector<double> mu(d, 0.0), sd(d, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < d; ++j) mu[j] += train.x(i, j) / static_cast<double>(n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < d; ++j) sd[j] += std::pow(train.x(i, j) - mu[j], 2) / static_cast<double>(n);
  for (double& s : sd) s = s > 1e-24 ? std::sqrt(s) : 1.0;
  auto standardize = [&](const Matrix& x) {
    Matrix out = x;
    for (std::size_t i = 0; i < x.rows(); ++i)
      for (std::size_t j = 0; j < d; ++j) out(i, j) = (x(i, j) - mu[j]) / sd[j];
    return out;
  };
  const Matrix xtr = standardize(train.x);
  const Matrix xte = standardize(test.x);

  Matrix w(d, classes);
  Matrix b(1, classes);
  for (std::size_t it = 0; it < options.steps; ++it) {
    Matrix logits = matmul(xtr, w);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t c = 0; c < classes; ++c) logits(i, c) += b[c];
    Matrix resid = softmax_rows(logits);
    for (std::size_t i = 0; i < n; ++i) resid(i, static_cast<std::size_t>(train.y[i])) -= 1.0;
    resid *= 1.0 / static_cast<double>(n);
    const Matrix gw = matmul_tn(xtr, resid);
    for (std::size_t k = 0; k < w.size(); ++k) w[k] -= options.learning_rate * (gw[k] + options.l2 * w[k]);
    for (std::size_t c = 0; c < classes; ++c) {
      double g = 0.0;
      for (std::size_t i = 0; i < n; ++i) g += resid(i, c);
      b[c] -= options.learning_rate * g;
    }
  }
  return {accuracy(xtr, train.y, w, b), accuracy(xte, test.y, w, b), classes};
}

LabeledFeatures extract_features(const Network& net, const RunConfig& config, std::span<const Stream> streams,
                                 std::size_t clips_per_stream, bool blended, Rng& rng) {
  Augmentation none;
  none.strength = 0.0;
  std::vector<ClipView> views;
  LabeledFeatures out;
  for (const Stream& s : streams) {
    if (s.frame_count() < config.clip_length) throw Error("probe stream shorter than a clip");
    std::uniform_int_distribution<std::size_t> start(0, s.frame_count() - config.clip_length);
    for (std::size_t c = 0; c < clips_per_stream; ++c) {
      views.push_back(make_view(s, start(rng), config.clip_length, none, 0));
      out.y.push_back(s.class_label());
    }
  }
  std::vector<const ClipView*> ptrs;
  std::vector<TimeShift> times;
  for (const auto& v : views) {
    ptrs.push_back(&v);
    times.push_back(v.dt);
  }
  Tape tape;
  Binder bind(tape, false);
  const Var q = uses_basis(config.variant) ? basis_view(bind, net, config) : Var();
  const TimeBlendedRep rep =
      embed(bind, net, config, tape.constant(stack_clips(ptrs)), tape.constant(time_column(times)), q);
  out.x = blended ? rep.blended.value() : rep.original.value();
  return out;
}

ProbeResult linear_probe(const Network& net, const RunConfig& config) {
  const World world = World::create(config.dataset(), config.seed);
  const auto train_streams = world.make_streams(config.seed, Split::ProbeTrain, config.probe_train_streams);
  const auto test_streams = world.make_streams(config.seed, Split::ProbeTest, config.probe_test_streams);
  Rng rng(mix_seed(config.seed, 0x9B0B));
  const bool blended = config.probe_features == ProbeFeatures::Blended;
  const LabeledFeatures train =
      extract_features(net, config, train_streams, config.probe_clips_per_stream, blended, rng);
  const LabeledFeatures test = extract_features(net, config, test_streams, config.probe_clips_per_stream, blended, rng);
  return fit_linear_probe(train, test, {config.probe_steps, config.probe_learning_rate, config.probe_l2});
}

namespace {

std::vector<double> ranks(std::span<const double> v) {
  std::vector<std::size_t> idx(v.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
  std::vector<double> r(v.size());
  for (std::size_t i = 0; i < idx.size();) {
    std::size_t j = i;
    while (j + 1 < idx.size() && v[idx[j + 1]] == v[idx[i]]) ++j;
    const double avg = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) r[idx[k]] = avg;
    i = j + 1;
  }
  return r;
}

}  // namespace

double spearman(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size() || a.size() < 2) throw Error("spearman needs two equal-length samples of size >= 2");
  const auto ra = ranks(a), rb = ranks(b);
  const double n = static_cast<double>(a.size());
  const double ma = std::accumulate(ra.begin(), ra.end(), 0.0) / n;
  const double mb = std::accumulate(rb.begin(), rb.end(), 0.0) / n;
  double sab = 0.0, saa = 0.0, sbb = 0.0;
  for (std::size_t i = 0; i < ra.size(); ++i) {
    sab += (ra[i] - ma) * (rb[i] - mb);
    saa += (ra[i] - ma) * (ra[i] - ma);
    sbb += (rb[i] - mb) * (rb[i] - mb);
  }
  if (saa == 0.0 || sbb == 0.0) return 0.0;
  return sab / std::sqrt(saa * sbb);
}

AlignmentResult align_coordinates(const Matrix& span_coords, std::span<const double> t_start) {
  const std::size_t k = span_coords.rows(), m = span_coords.cols();
  if (k != t_start.size() || k < 3) throw Error("alignment needs K >= 3 coordinate rows matching t_start");
  AlignmentResult out;
  out.t_start.assign(t_start.begin(), t_start.end());
  out.coords = Matrix(k, 2);

  Eigen::MatrixXd c(k, m);
  for (std::size_t i = 0; i < k; ++i)
    for (std::size_t j = 0; j < m; ++j) c(i, j) = span_coords(i, j);
  c.rowwise() -= c.colwise().mean();
  const Eigen::MatrixXd cov = c.transpose() * c / static_cast<double>(k);
  if (cov.trace() < 1e-20) {
    out.degenerate = true;
    return out;
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(cov);
  // Eigenvalues ascend; the leading directions are the last columns.
  const Eigen::VectorXd first = c * eig.eigenvectors().col(m - 1);
  std::vector<double> lead(first.data(), first.data() + k);
  for (std::size_t i = 0; i < k; ++i) out.coords(i, 0) = lead[i];
  if (m >= 2) {
    const Eigen::VectorXd second = c * eig.eigenvectors().col(m - 2);
    for (std::size_t i = 0; i < k; ++i) out.coords(i, 1) = second(static_cast<Eigen::Index>(i));
  }
  if (std::all_of(lead.begin(), lead.end(), [&](double v) { return v == lead.front(); })) {
    out.degenerate = true;
    return out;
  }
  out.rho = std::abs(spearman(lead, t_start));
  return out;
}

AlignmentResult time_alignment(const Network& net, const RunConfig& config, const Stream& stream, std::size_t k) {
  if (k < 3) throw Error("time_alignment needs K >= 3 segments");
  if (stream.frame_count() < config.clip_length) throw Error("stream shorter than a clip");
  const std::size_t last = stream.frame_count() - config.clip_length;
  if (last + 1 < k) throw Error("stream cannot hold " + std::to_string(k) + " distinct segments");
  Augmentation none;
  none.strength = 0.0;
  std::vector<ClipView> views;
  std::vector<TimeShift> times;
  std::vector<double> t;
  for (std::size_t i = 0; i < k; ++i) {
    const auto start = static_cast<std::size_t>(
        std::llround(static_cast<double>(i) * static_cast<double>(last) / static_cast<double>(k - 1)));
    views.push_back(make_view(stream, start, config.clip_length, none, 0));
    times.push_back(views.back().dt);
    t.push_back(views.back().dt.t_start);
  }
  std::vector<const ClipView*> ptrs;
  for (const auto& v : views) ptrs.push_back(&v);

  Tape tape;
  Binder bind(tape, false);
  const Var q = basis_view(bind, net, config);
  const TimeBlendedRep rep = embed(bind, net, config, tape.constant(stack_clips(ptrs)), tape.constant(time_column(times)),
                                   uses_basis(config.variant) ? q : Var());
  AlignmentResult out = align_coordinates(span_project(rep.blended.value(), q.value()), t);
  out.rho_original = align_coordinates(span_project(rep.original.value(), q.value()), t).rho;
  return out;
}

Stream analysis_stream(const RunConfig& config, std::size_t index, int class_label) {
  DatasetSpec spec = config.dataset();
  const World world = World::create(spec, config.seed);
  Rng rng(mix_seed(mix_seed(config.seed, static_cast<std::uint64_t>(Split::Analysis)), index));
  GeneratorSpec g = world.stream_spec(class_label, rng);
  g.noise_scale = 0.0;
  return generate_stream(g, rng(), index);
}

}  // namespace ltn
