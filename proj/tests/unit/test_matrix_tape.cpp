#include <doctest.h>

#include <cmath>
#include <limits>

#include "ltn/errors.hpp"
#include "ltn/matrix.hpp"
#include "ltn/ops.hpp"
#include "ltn/tape.hpp"
#include "oracles.hpp"

using namespace ltn;

TEST_CASE("matmul agrees with the triple-loop oracle") {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const Matrix a = oracle::random_matrix(3 + seed, 4, seed);
    const Matrix b = oracle::random_matrix(4, 2 + seed, seed + 100);
    const Matrix want = oracle::to_matrix(oracle::matmul(oracle::from(a), oracle::from(b)));
    CHECK(max_abs_diff(matmul(a, b), want) < 1e-12);
    CHECK(max_abs_diff(matmul_tn(transpose(a), b), want) < 1e-12);
    CHECK(max_abs_diff(matmul_nt(a, transpose(b)), want) < 1e-12);
  }
}

TEST_CASE("matrix shape errors") {
  CHECK_THROWS_AS(matmul(Matrix(2, 3), Matrix(2, 3)), ShapeError);
  CHECK_THROWS_AS(Matrix(2, 2, std::vector<double>{1, 2, 3}), ShapeError);
  CHECK_THROWS_AS(Matrix::from_rows({{1, 2}, {3}}), ShapeError);
  Matrix a(2, 2);
  CHECK_THROWS_AS(a += Matrix(1, 2), ShapeError);
  const Matrix parts[] = {Matrix(1, 2), Matrix(1, 3)};
  CHECK_THROWS_AS(vstack(parts), ShapeError);
}

TEST_CASE("vstack and transpose") {
  const Matrix parts[] = {Matrix::from_rows({{1, 2}}), Matrix::from_rows({{3, 4}, {5, 6}})};
  const Matrix s = vstack(parts);
  CHECK(s == Matrix::from_rows({{1, 2}, {3, 4}, {5, 6}}));
  CHECK(transpose(s) == Matrix::from_rows({{1, 3, 5}, {2, 4, 6}}));
  CHECK(frobenius_norm(Matrix::from_rows({{3, 4}})) == doctest::Approx(5.0));
}

TEST_CASE("tape visits nodes in exact reverse order") {
  Tape tape;
  const Var x = tape.parameter(Matrix::from_rows({{1.0, 2.0}}));
  const Var y = scale(x, 3.0);
  const Var z = hadamard(y, x);
  const Var loss = sum(z);
  tape.backward(loss);
  const std::vector<std::size_t> want = {loss.index(), z.index(), y.index()};
  CHECK(tape.visit_log() == want);
  // d/dx sum(3 x^2) = 6 x
  CHECK(x.grad() == Matrix::from_rows({{6.0, 12.0}}));
}

TEST_CASE("gradients accumulate over shared inputs") {
  Tape tape;
  const Var x = tape.parameter(Matrix::from_rows({{2.0}}));
  const Var loss = sum(add(add(x, x), hadamard(x, x)));
  tape.backward(loss);
  CHECK(x.grad()(0, 0) == doctest::Approx(2.0 + 4.0));
}

TEST_CASE("constants receive no gradient and never propagate") {
  Tape tape;
  const Var c = tape.constant(Matrix::from_rows({{1.0, 1.0}}));
  const Var p = tape.parameter(Matrix::from_rows({{2.0, 3.0}}));
  const Var loss = sum(hadamard(c, p));
  tape.backward(loss);
  CHECK_FALSE(tape.needs_grad(c));
  CHECK(c.grad() == Matrix(1, 2));
  CHECK(p.grad() == Matrix::from_rows({{1.0, 1.0}}));

  Tape frozen;
  const Var only = frozen.constant(Matrix::from_rows({{1.0}}));
  frozen.backward(sum(only));
  CHECK(frozen.visit_log().empty());
}

TEST_CASE("tape rejects non-finite values and non-scalar losses") {
  Tape tape;
  CHECK_THROWS_AS(tape.constant(Matrix::from_rows({{std::numeric_limits<double>::quiet_NaN()}})), NumericalError);
  const Var big = tape.parameter(Matrix::from_rows({{1000.0}}));
  CHECK_THROWS_AS(exp(big), NumericalError);
  CHECK_THROWS_AS(tape.backward(tape.parameter(Matrix(1, 2))), ShapeError);
  Tape other;
  const Var foreign = other.parameter(Matrix(1, 1));
  CHECK_THROWS(add(big, foreign));
}

TEST_CASE("backward can be repeated on the same tape") {
  Tape tape;
  const Var x = tape.parameter(Matrix::from_rows({{1.5}}));
  const Var loss = sum(hadamard(x, x));
  tape.backward(loss);
  tape.backward(loss);
  CHECK(x.grad()(0, 0) == doctest::Approx(3.0));
}
