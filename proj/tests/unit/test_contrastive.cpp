#include <doctest.h>

#include <cmath>
#include <deque>

#include "ltn/contrastive.hpp"
#include "ltn/errors.hpp"
#include "ltn/grad_check.hpp"
#include "ltn/ops.hpp"
#include "oracles.hpp"

using namespace ltn;

namespace {

Matrix unit_rows(std::size_t n, std::size_t p, std::uint64_t seed) {
  return l2_normalize_rows(oracle::random_matrix(n, p, seed));
}

long double oracle_loss(const Matrix& query, const std::vector<Matrix>& pos, const Matrix& neg, double temp,
                        bool neg_only) {
  const auto q = oracle::from(query);
  const auto n = oracle::from(neg);
  long double total = 0.0L;
  for (std::size_t i = 0; i < q.size(); ++i) {
    oracle::Vec ps, ns;
    for (const Matrix& k : pos) ps.push_back(oracle::cosine(q[i], oracle::from(k)[i]) / temp);
    for (const auto& row : n) ns.push_back(oracle::cosine(q[i], row) / temp);
    total += oracle::info_nce(ps, ns, neg_only);
  }
  return total / static_cast<long double>(q.size());
}

}  // namespace

TEST_CASE("info_nce matches the brute-force oracle in both denominator modes") {
  std::uint64_t seed = 1;
  for (std::size_t p = 1; p <= 3; ++p) {
    for (std::size_t n = 1; n <= 5; ++n) {
      for (Denominator mode : {Denominator::PosNeg, Denominator::NegOnly}) {
        const Matrix query = unit_rows(2, 4, seed++);
        std::vector<Matrix> pos;
        for (std::size_t k = 0; k < p; ++k) pos.push_back(unit_rows(2, 4, seed++));
        const Matrix neg = unit_rows(n, 4, seed++);
        Tape tape;
        const double got = info_nce(tape.constant(query), pos, neg, 0.2, mode).value()(0, 0);
        const long double want = oracle_loss(query, pos, neg, 0.2, mode == Denominator::NegOnly);
        CHECK(std::abs(got - static_cast<double>(want)) < 1e-10);
      }
    }
  }
}

TEST_CASE("reference info_nce over similarities") {
  const double pos[] = {1.0, 0.5};
  const double neg[] = {0.2, -0.3, 0.1};
  const long double want_pn = oracle::info_nce({1.0L, 0.5L}, {0.2L, -0.3L, 0.1L}, false);
  const long double want_no = oracle::info_nce({1.0L, 0.5L}, {0.2L, -0.3L, 0.1L}, true);
  CHECK(std::abs(info_nce(pos, neg, Denominator::PosNeg) - static_cast<double>(want_pn)) < 1e-14);
  CHECK(std::abs(info_nce(pos, neg, Denominator::NegOnly) - static_cast<double>(want_no)) < 1e-14);
  // Positives can only help: pos+neg loss is non-negative.
  CHECK(info_nce(pos, neg, Denominator::PosNeg) >= 0.0);
  CHECK_THROWS(info_nce(std::span<const double>(), neg, Denominator::PosNeg));
}

TEST_CASE("identical query and key under the identity head") {
  const ProjectionHead head = ProjectionHead::identity(3);
  const Matrix x = Matrix::from_rows({{0.3, -1.2, 2.0}});
  CHECK(max_abs_diff(project(head, x), x) < 1e-15);
  CHECK(similarity(x, x, head, 0.1) == doctest::Approx(10.0).epsilon(1e-14));
  CHECK(similarity(x, x * -1.0, head, 0.5) == doctest::Approx(-2.0).epsilon(1e-14));
  const Matrix y = Matrix::from_rows({{1.0, 0.5, -0.25}});
  const double want = static_cast<double>(oracle::cosine(oracle::from(x)[0], oracle::from(y)[0]) / 0.07L);
  CHECK(similarity(x, y, head, 0.07) == doctest::Approx(want).epsilon(1e-13));
  CHECK_THROWS_AS(similarity(x, y, head, 0.0), NumericalError);
  CHECK_THROWS_AS(similarity(x, Matrix(1, 2), head, 1.0), ShapeError);
}

TEST_CASE("info_nce input validation") {
  Tape tape;
  const Var q = tape.constant(unit_rows(2, 3, 1));
  const std::vector<Matrix> pos{unit_rows(2, 3, 2)};
  CHECK_THROWS(info_nce(q, std::span<const Matrix>(), unit_rows(4, 3, 3), 0.1, Denominator::PosNeg));
  CHECK_THROWS(info_nce(q, pos, Matrix(0, 3), 0.1, Denominator::PosNeg));
  CHECK_THROWS_AS(info_nce(q, pos, unit_rows(4, 2, 3), 0.1, Denominator::PosNeg), ShapeError);
  CHECK_THROWS_AS(info_nce(q, pos, unit_rows(4, 3, 3), -1.0, Denominator::PosNeg), NumericalError);
  const std::vector<Matrix> wrong{unit_rows(3, 3, 4)};
  CHECK_THROWS_AS(info_nce(q, wrong, unit_rows(4, 3, 3), 0.1, Denominator::PosNeg), ShapeError);
  CHECK(parse_denominator(to_string(Denominator::NegOnly)) == Denominator::NegOnly);
  CHECK_THROWS_AS(parse_denominator("both"), ConfigError);
}

TEST_CASE("info_nce and cosine regression gradients") {
  for (Denominator mode : {Denominator::PosNeg, Denominator::NegOnly}) {
    Matrix raw = oracle::random_matrix(3, 4, 40);
    const std::vector<Matrix> pos{unit_rows(3, 4, 41), unit_rows(3, 4, 42)};
    const Matrix neg = unit_rows(6, 4, 43);
    Matrix* params[] = {&raw};
    const auto f = [&](Tape&, std::span<const Var> p) {
      return info_nce(l2_normalize_rows(p[0]), pos, neg, 0.1, mode);
    };
    CHECK(grad_check(f, params).max_relative_error < 1e-6);
  }
  Matrix pred = oracle::random_matrix(3, 4, 44);
  const std::vector<Matrix> keys{unit_rows(3, 4, 45)};
  Matrix* params[] = {&pred};
  CHECK(grad_check([&](Tape&, std::span<const Var> p) { return cosine_regression(p[0], keys); }, params)
            .max_relative_error < 1e-6);
}

TEST_CASE("cosine regression endpoints") {
  Tape tape;
  const Matrix k = unit_rows(2, 3, 50);
  const std::vector<Matrix> same{k};
  const std::vector<Matrix> opposite{k * -1.0};
  CHECK(cosine_regression(tape.constant(k * 3.0), same).value()(0, 0) == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(cosine_regression(tape.constant(k), opposite).value()(0, 0) == doctest::Approx(4.0));
}

TEST_CASE("negative queue evicts oldest first") {
  NegativeQueue queue(7, 3);
  std::deque<Matrix> model;
  std::uint64_t seed = 1;
  for (int round = 0; round < 40; ++round) {
    const std::size_t n = 1 + static_cast<std::size_t>(round) % 4;
    const Matrix keys = unit_rows(n, 3, seed++);
    queue.enqueue(keys);
    for (std::size_t r = 0; r < n; ++r) {
      model.push_back(Matrix(1, 3, std::vector<double>(keys.row(r).begin(), keys.row(r).end())));
      if (model.size() > 7) model.pop_front();
    }
    REQUIRE(queue.size() == model.size());
    const Matrix ordered = queue.ordered();
    for (std::size_t i = 0; i < model.size(); ++i)
      for (std::size_t j = 0; j < 3; ++j) CHECK(ordered(i, j) == model[i](0, j));
    CHECK(queue.active().rows() == queue.size());
  }
}

TEST_CASE("queue rejects non-unit keys and bad widths") {
  NegativeQueue queue(4, 2);
  CHECK(queue.empty());
  CHECK_THROWS_AS(queue.enqueue(Matrix::from_rows({{1.0, 1.0}})), NumericalError);
  CHECK_THROWS_AS(queue.enqueue(Matrix::from_rows({{1.0, 0.0, 0.0}})), ShapeError);
  CHECK(queue.empty());
  CHECK_THROWS(NegativeQueue(0, 2));
  CHECK_THROWS_AS(queue.restore(Matrix(4, 2), 5, 0), FormatError);
}

TEST_CASE("momentum update matches the scalar rule") {
  for (double m : {0.0, 0.5, 0.99, 1.0}) {
    Matrix s1 = oracle::random_matrix(2, 3, 60), s2 = oracle::random_matrix(1, 4, 61);
    const Matrix o1 = oracle::random_matrix(2, 3, 62), o2 = oracle::random_matrix(1, 4, 63);
    Matrix o1c = o1, o2c = o2;
    const Matrix s1_before = s1, s2_before = s2;
    const std::vector<NamedParam> shadow{{"a", &s1}, {"b", &s2}};
    const std::vector<NamedParam> online{{"a", &o1c}, {"b", &o2c}};
    momentum_update(shadow, online, m);
    auto near = [](double got, long double want) {
      return std::abs(static_cast<long double>(got) - want) <= 4e-16L * std::max(1.0L, std::abs(want));
    };
    for (std::size_t k = 0; k < s1.size(); ++k)
      CHECK(near(s1[k], static_cast<long double>(m) * s1_before[k] + (1.0L - m) * o1[k]));
    for (std::size_t k = 0; k < s2.size(); ++k)
      CHECK(near(s2[k], static_cast<long double>(m) * s2_before[k] + (1.0L - m) * o2[k]));
    if (m == 0.0) CHECK(s1 == o1);
    if (m == 1.0) CHECK(s1 == s1_before);
    CHECK(o1c == o1);
  }
}

TEST_CASE("momentum update leaves agreeing tensors bit-identical") {
  Matrix s = oracle::random_matrix(3, 3, 70);
  Matrix o = s;
  const Matrix before = s;
  const std::vector<NamedParam> shadow{{"w", &s}}, online{{"w", &o}};
  for (int i = 0; i < 100; ++i) momentum_update(shadow, online, 0.99);
  CHECK(s == before);
}

TEST_CASE("momentum update refuses drift") {
  Matrix a(2, 2), b(2, 3), c(2, 2);
  const std::vector<NamedParam> shadow{{"w", &a}};
  CHECK_THROWS_AS(momentum_update(shadow, std::vector<NamedParam>{{"w", &b}}, 0.5), ShapeError);
  CHECK_THROWS_AS(momentum_update(shadow, std::vector<NamedParam>{{"v", &c}}, 0.5), ShapeError);
  CHECK_THROWS_AS(momentum_update(shadow, std::vector<NamedParam>{}, 0.5), ShapeError);
  CHECK_THROWS(momentum_update(shadow, std::vector<NamedParam>{{"w", &c}}, 1.5));
}
