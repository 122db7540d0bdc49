#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "ltn/tape.hpp"

// Differentiable primitives. Every function records one node on the tape of
// its operands; all operands must live on the same tape. Row-wise operations
// treat each row of an n x k operand as an independent sample, so a 1 x k row
// vector is the single-sample case.

namespace ltn {

inline constexpr double kNormEpsilon = 1e-12;

Var matmul(Var a, Var b);
Var transpose(Var a);
Var add(Var a, Var b);
Var sub(Var a, Var b);
Var hadamard(Var a, Var b);
Var scale(Var a, double s);
/// a (n x k) + bias (1 x k) added to every row.
Var add_row_broadcast(Var a, Var bias);
/// Row i of a (n x k) multiplied by s(i, 0), s is n x 1.
Var scale_rows(Var a, Var s);
/// Every entry of a multiplied by the 1x1 value s.
Var mul_scalar(Var a, Var s);
/// Every entry of a divided by the 1x1 value s.
Var div_scalar(Var a, Var s);

Var relu(Var a);
Var exp(Var a);
Var log(Var a);
Var sqrt(Var a);

/// Sum of all entries, 1x1.
Var sum(Var a);
/// Mean of all entries, 1x1.
Var mean(Var a);
/// n x 1 sums over each row.
Var row_sums(Var a);
/// Averages consecutive blocks of `group` rows: (n*group) x k -> n x k.
Var group_mean_rows(Var a, std::size_t group);
/// n x 1 log-sum-exp over each row, max-shifted.
Var logsumexp_rows(Var a);

/// Row-wise softmax, max-shifted. Errors on an empty operand.
Var softmax_rows(Var a);
/// Row-wise unit normalization; throws NumericalError when a row norm <= eps.
Var l2_normalize_rows(Var a, double eps = kNormEpsilon);

/// Column j as an n x 1 matrix.
Var column(Var a, std::size_t j);
Var slice_cols(Var a, std::size_t begin, std::size_t end);
Var slice_rows(Var a, std::size_t begin, std::size_t end);
Var concat_cols(const std::vector<Var>& parts);
Var concat_rows(const std::vector<Var>& parts);
/// Same row-major data viewed as rows x cols.
Var reshape(Var a, std::size_t rows, std::size_t cols);
/// Value copy with no gradient path back to `a`.
Var stop_gradient(Var a);

inline Var operator+(Var a, Var b) { return add(a, b); }
inline Var operator-(Var a, Var b) { return sub(a, b); }

// Tape-free row-wise helpers used by evaluation and key encoding.
Matrix softmax_rows(const Matrix& a);
Matrix l2_normalize_rows(const Matrix& a, double eps = kNormEpsilon);

}  // namespace ltn
