#pragma once

#include <cstddef>
#include <vector>

#include "ltn/matrix.hpp"
#include "ltn/nn.hpp"

namespace ltn {

/// Absolute start time, in seconds, of a segment within its source stream.
struct TimeShift {
  double t_start = 0.0;
};

struct TimeEncoderShape {
  std::size_t rep_dim = 64;
  std::size_t out_width = 8;     // M for the basis variants, rep_dim for linear addition
  std::size_t inner_width = 16;  // scalar-time embedding width
  std::size_t hidden_width = 64;
  std::size_t layers = 2;        // hidden layers of the outer MLP, >= 1
  double time_scale = 1.0;       // t_start is divided by this before embedding
};

/// e_t(dt, f) = MLP([MLP(t_start / time_scale), f]) with ReLU between layers
/// and a linear output.
struct TimeEncoder {
  TimeEncoderShape shape;
  Linear inner;
  std::vector<Linear> hidden;
  Linear output;

  static TimeEncoder zeros(const TimeEncoderShape& shape);
  static TimeEncoder random(const TimeEncoderShape& shape, Rng& rng);

  std::size_t out_width() const noexcept { return output.out(); }
  void append_params(std::vector<NamedParam>& out, const std::string& prefix);
};

/// Batched encoding: t_start is n x 1 (seconds), rep is n x rep_dim.
Var encode_time(Binder& bind, const TimeEncoder& enc, Var t_start, Var rep);

/// Single-view encoding. Throws on a non-finite or negative t_start.
Matrix encode_time(TimeShift dt, const Matrix& rep, const TimeEncoder& enc);

/// n x 1 column of start times, validated.
Matrix time_column(const std::vector<TimeShift>& shifts);

}  // namespace ltn
