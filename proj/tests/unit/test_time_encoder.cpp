#include <doctest.h>

#include <cmath>
#include <limits>

#include "ltn/errors.hpp"
#include "ltn/grad_check.hpp"
#include "ltn/ops.hpp"
#include "ltn/time_encoder.hpp"
#include "oracles.hpp"

using namespace ltn;

namespace {

TimeEncoderShape small_shape() {
  TimeEncoderShape s;
  s.rep_dim = 6;
  s.out_width = 3;
  s.inner_width = 4;
  s.hidden_width = 5;
  s.layers = 2;
  s.time_scale = 10.0;
  return s;
}

}  // namespace

TEST_CASE("zero parameters give a zero encoding") {
  const TimeEncoder enc = TimeEncoder::zeros(small_shape());
  const Matrix out = encode_time({3.0}, oracle::random_matrix(1, 6, 1), enc);
  CHECK(out == Matrix(1, 3));
}

TEST_CASE("hand-set single layer encoder equals the pencil-and-paper map") {
  TimeEncoderShape s;
  s.rep_dim = 2;
  s.out_width = 1;
  s.inner_width = 1;
  s.hidden_width = 2;
  s.layers = 1;
  s.time_scale = 10.0;
  TimeEncoder enc = TimeEncoder::zeros(s);
  enc.inner.weight = Matrix::from_rows({{1.0}});
  enc.inner.bias = Matrix::from_rows({{0.5}});
  enc.hidden[0].weight = Matrix::from_rows({{1, 0}, {0, 1}, {1, 1}});
  enc.output.weight = Matrix::from_rows({{2.0}, {-1.0}});
  enc.output.bias = Matrix::from_rows({{0.25}});
  // inner: relu(4/10 + 0.5) = 0.9; hidden on [0.9, 1, 2] = (2.9, 3.0); output 2*2.9 - 3 + 0.25
  const Matrix out = encode_time({4.0}, Matrix::from_rows({{1.0, 2.0}}), enc);
  CHECK(out(0, 0) == doctest::Approx(3.05).epsilon(1e-14));
}

TEST_CASE("encoding is deterministic and varies with time") {
  Rng rng(5);
  const TimeEncoder enc = TimeEncoder::random(small_shape(), rng);
  const Matrix rep = oracle::random_matrix(1, 6, 2);
  CHECK(encode_time({2.0}, rep, enc) == encode_time({2.0}, rep, enc));
  const double n0 = frobenius_norm(encode_time({0.0}, rep, enc));
  const double n1 = frobenius_norm(encode_time({10.0}, rep, enc));
  CHECK(std::abs(n0 - n1) > 1e-6);
}

TEST_CASE("time encoder gradients pass grad_check for params and representation") {
  for (std::size_t layers = 1; layers <= 3; ++layers) {
    TimeEncoderShape s = small_shape();
    s.layers = layers;
    Rng rng(10 + layers);
    TimeEncoder enc = TimeEncoder::random(s, rng);
    Matrix rep = oracle::random_matrix(4, 6, 20 + layers);
    const Matrix t = Matrix::from_rows({{0.5}, {2.0}, {7.5}, {9.0}});
    const Matrix w = oracle::random_matrix(4, 3, 30);
    std::vector<NamedParam> named;
    enc.append_params(named, "time");
    std::vector<Matrix*> params{&rep};
    for (const NamedParam& p : named) params.push_back(p.value);
    const auto f = [&](Tape& tape, std::span<const Var> p) {
      Binder bind(tape, false);
      for (std::size_t i = 0; i < named.size(); ++i) bind.bind(*named[i].value, p[i + 1]);
      return sum(hadamard(encode_time(bind, enc, tape.constant(t), p[0]), tape.constant(w)));
    };
    CAPTURE(layers);
    CHECK(grad_check(f, params).max_relative_error < 1e-6);
  }
}

TEST_CASE("time encoder input validation") {
  Rng rng(1);
  const TimeEncoder enc = TimeEncoder::random(small_shape(), rng);
  const Matrix rep(1, 6, 0.1);
  CHECK_THROWS_AS(encode_time({std::numeric_limits<double>::infinity()}, rep, enc), NumericalError);
  CHECK_THROWS_AS(encode_time({std::numeric_limits<double>::quiet_NaN()}, rep, enc), NumericalError);
  CHECK_THROWS_AS(encode_time({-1.0}, rep, enc), NumericalError);
  CHECK_THROWS_AS(encode_time({1.0}, Matrix(1, 5), enc), ShapeError);
  TimeEncoderShape bad = small_shape();
  bad.layers = 0;
  CHECK_THROWS_AS(TimeEncoder::zeros(bad), ShapeError);
  CHECK(enc.out_width() == 3);
}
