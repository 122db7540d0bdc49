#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "ltn/errors.hpp"
#include "ltn/evaluation.hpp"
#include "ltn/trainer.hpp"
#include "oracles.hpp"

using namespace ltn;

namespace {

LabeledFeatures one_hot(std::size_t n, std::size_t classes, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  LabeledFeatures out;
  out.x = Matrix(n, classes);
  for (std::size_t i = 0; i < n; ++i) {
    const int y = static_cast<int>(rng() % classes);
    out.y.push_back(y);
    out.x(i, static_cast<std::size_t>(y)) = 1.0;
  }
  return out;
}

// Pearson correlation of ranks computed without tie handling; valid for distinct values.
double naive_spearman(const std::vector<double>& a, const std::vector<double>& b) {
  const std::size_t n = a.size();
  auto rank = [&](const std::vector<double>& v) {
    std::vector<double> r(n);
    for (std::size_t i = 0; i < n; ++i)
      r[i] = 1.0 + static_cast<double>(std::count_if(v.begin(), v.end(), [&](double x) { return x < v[i]; }));
    return r;
  };
  const auto ra = rank(a), rb = rank(b);
  double d2 = 0.0;
  for (std::size_t i = 0; i < n; ++i) d2 += (ra[i] - rb[i]) * (ra[i] - rb[i]);
  const double nn = static_cast<double>(n);
  return 1.0 - 6.0 * d2 / (nn * (nn * nn - 1.0));
}

}  // namespace

TEST_CASE("separable one-hot features are classified perfectly") {
  const ProbeResult r = fit_linear_probe(one_hot(300, 4, 1), one_hot(200, 4, 2), {});
  CHECK(r.test_accuracy == 1.0);
  CHECK(r.train_accuracy == 1.0);
  CHECK(r.num_classes == 4);
}

TEST_CASE("shuffled labels give chance accuracy") {
  for (std::size_t classes : {2u, 4u}) {
    LabeledFeatures train{oracle::random_matrix(2000, 8, 3), {}}, test{oracle::random_matrix(2000, 8, 4), {}};
    std::mt19937_64 rng(5);
    for (std::size_t i = 0; i < 2000; ++i) {
      train.y.push_back(static_cast<int>(rng() % classes));
      test.y.push_back(static_cast<int>(rng() % classes));
    }
    const ProbeResult r = fit_linear_probe(train, test, {});
    CHECK(std::abs(r.test_accuracy - 1.0 / static_cast<double>(classes)) <= 0.05);
  }
}

TEST_CASE("probe rejects a single-class label set and mismatched shapes") {
  LabeledFeatures one{Matrix(4, 2, 1.0), {1, 1, 1, 1}};
  CHECK_THROWS(fit_linear_probe(one, one, {}));
  LabeledFeatures ragged{Matrix(3, 2), {0, 1}};
  CHECK_THROWS_AS(fit_linear_probe(ragged, ragged, {}), ShapeError);
}

TEST_CASE("spearman against the rank-difference formula") {
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const Matrix a = oracle::random_matrix(1, 25, seed), b = oracle::random_matrix(1, 25, seed + 50);
    const std::vector<double> va(a.data().begin(), a.data().end()), vb(b.data().begin(), b.data().end());
    CHECK(spearman(va, vb) == doctest::Approx(naive_spearman(va, vb)).epsilon(1e-12));
  }
  const std::vector<double> up{1, 2, 3, 4}, down{8, 6, 4, 2}, tied{1, 1, 2, 2};
  CHECK(spearman(up, up) == doctest::Approx(1.0));
  CHECK(spearman(up, down) == doctest::Approx(-1.0));
  // average ranks (1.5, 1.5, 3.5, 3.5) against (1, 2, 3, 4)
  CHECK(spearman(tied, up) == doctest::Approx(4.0 / std::sqrt(20.0)));
  CHECK(spearman(std::vector<double>{3, 3, 3}, std::vector<double>{1, 2, 3}) == 0.0);
  CHECK_THROWS(spearman(std::vector<double>{1}, std::vector<double>{1}));
}

TEST_CASE("alignment metric oracles") {
  std::vector<double> t;
  Matrix monotone(20, 3);
  for (std::size_t i = 0; i < 20; ++i) {
    t.push_back(0.4 * static_cast<double>(i));
    monotone(i, 0) = t.back();
  }
  const AlignmentResult perfect = align_coordinates(monotone, t);
  CHECK(perfect.rho == doctest::Approx(1.0));
  CHECK_FALSE(perfect.degenerate);
  CHECK(perfect.coords.rows() == 20);

  const AlignmentResult flat = align_coordinates(Matrix(20, 3, 0.7), t);
  CHECK(flat.degenerate);
  CHECK(flat.rho == 0.0);

  Matrix reversed = monotone;
  for (std::size_t i = 0; i < 20; ++i) reversed(i, 0) = -std::exp(t[i]);
  CHECK(align_coordinates(reversed, t).rho == doctest::Approx(1.0));
  CHECK_THROWS(align_coordinates(Matrix(2, 3), std::vector<double>{0, 1}));
}

TEST_CASE("time alignment on an untrained network") {
  RunConfig c = parse_config("dim = 16\nbasis_size = 4\ntrain_streams = 4");
  Rng rng(1);
  const Network net = Network::create(c, rng);
  const Stream s = analysis_stream(c, 0);
  CHECK(s.spec.noise_scale == 0.0);
  const AlignmentResult r = time_alignment(net, c, s, 20);
  CHECK(r.t_start.size() == 20);
  CHECK(std::is_sorted(r.t_start.begin(), r.t_start.end()));
  CHECK(r.rho >= 0.0);
  CHECK(r.rho <= 1.0);
  CHECK_THROWS(time_alignment(net, c, s, 2));
  CHECK_THROWS(time_alignment(net, c, s, 1000));
}

TEST_CASE("linear probe on extracted features is reproducible") {
  RunConfig c = parse_config(
      "dim = 16\nbasis_size = 4\nprobe_train_streams = 16\nprobe_test_streams = 16\nprobe_steps = 50\n"
      "train_streams = 4\nqueue_capacity = 64");
  Rng rng(2);
  const Network net = Network::create(c, rng);
  const ProbeResult a = linear_probe(net, c);
  const ProbeResult b = linear_probe(net, c);
  CHECK(a.test_accuracy == b.test_accuracy);
  CHECK(a.num_classes == 2);
  c.probe_features = ProbeFeatures::Blended;
  CHECK_NOTHROW(linear_probe(net, c));
}
