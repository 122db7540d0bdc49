#include "ltn/time_encoder.hpp"

#include <cmath>

#include "ltn/errors.hpp"
#include "ltn/ops.hpp"

namespace ltn {
namespace {

void validate(const TimeEncoderShape& s) {
  if (s.layers < 1) throw ShapeError("time encoder needs at least one hidden layer");
  if (s.rep_dim == 0 || s.out_width == 0 || s.inner_width == 0 || s.hidden_width == 0) {
    throw ShapeError("time encoder widths must be positive");
  }
  if (!(s.time_scale > 0.0) || !std::isfinite(s.time_scale)) {
    throw ShapeError("time encoder time_scale must be positive and finite");
  }
}

}  // namespace

TimeEncoder TimeEncoder::zeros(const TimeEncoderShape& shape) {
  validate(shape);
  TimeEncoder enc;
  enc.shape = shape;
  enc.inner = Linear::zeros(1, shape.inner_width);
  std::size_t in = shape.inner_width + shape.rep_dim;
  for (std::size_t i = 0; i < shape.layers; ++i) {
    enc.hidden.push_back(Linear::zeros(in, shape.hidden_width));
    in = shape.hidden_width;
  }
  enc.output = Linear::zeros(in, shape.out_width);
  return enc;
}

TimeEncoder TimeEncoder::random(const TimeEncoderShape& shape, Rng& rng) {
  validate(shape);
  const double relu_gain = std::sqrt(2.0);
  TimeEncoder enc;
  enc.shape = shape;
  enc.inner = Linear::random(1, shape.inner_width, 1.0, rng);
  // Place each unit's kink uniformly in [0, 1] so every unit is active over part of the time range.
  std::uniform_real_distribution<double> kink(0.0, 1.0);
  for (std::size_t j = 0; j < shape.inner_width; ++j) enc.inner.bias[j] = -enc.inner.weight[j] * kink(rng);
  std::size_t in = shape.inner_width + shape.rep_dim;
  for (std::size_t i = 0; i < shape.layers; ++i) {
    enc.hidden.push_back(Linear::random(in, shape.hidden_width, relu_gain, rng));
    in = shape.hidden_width;
  }
  enc.output = Linear::random(in, shape.out_width, 1.0, rng);
  return enc;
}

void TimeEncoder::append_params(std::vector<NamedParam>& out, const std::string& prefix) {
  ltn::append_params(out, prefix + ".inner", inner);
  for (std::size_t i = 0; i < hidden.size(); ++i)
    ltn::append_params(out, prefix + ".hidden" + std::to_string(i), hidden[i]);
  ltn::append_params(out, prefix + ".output", output);
}

Var encode_time(Binder& bind, const TimeEncoder& enc, Var t_start, Var rep) {
  if (t_start.cols() != 1 || t_start.rows() != rep.rows()) {
    throw ShapeError("encode_time: t_start " + shape_str(t_start.value()) + " does not match rep " +
                     shape_str(rep.value()));
  }
  if (rep.cols() != enc.shape.rep_dim) {
    throw ShapeError("encode_time: rep width " + std::to_string(rep.cols()) + " != " +
                     std::to_string(enc.shape.rep_dim));
  }
  const Var t = scale(t_start, 1.0 / enc.shape.time_scale);
  const Var embedded = relu(apply(bind, enc.inner, t));
  Var h = concat_cols({embedded, rep});
  for (const Linear& layer : enc.hidden) h = relu(apply(bind, layer, h));
  return apply(bind, enc.output, h);
}

Matrix time_column(const std::vector<TimeShift>& shifts) {
  Matrix t(shifts.size(), 1);
  for (std::size_t i = 0; i < shifts.size(); ++i) {
    const double v = shifts[i].t_start;
    if (!std::isfinite(v)) throw NumericalError("t_start must be finite");
    if (v < 0.0) throw NumericalError("t_start must be non-negative");
    t(i, 0) = v;
  }
  return t;
}

Matrix encode_time(TimeShift dt, const Matrix& rep, const TimeEncoder& enc) {
  Tape tape;
  Binder bind(tape, false);
  const Var t = tape.constant(time_column({dt}));
  return encode_time(bind, enc, t, tape.constant(rep)).value();
}

}  // namespace ltn
