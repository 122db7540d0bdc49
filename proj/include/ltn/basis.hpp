#pragma once

#include <cstddef>

#include "ltn/matrix.hpp"
#include "ltn/nn.hpp"
#include "ltn/tape.hpp"

namespace ltn {

/// Smallest Gram-Schmidt residual norm accepted before a column is declared degenerate.
inline constexpr double kDegeneracyThreshold = 1e-8;

/// Learnable dim x M matrix whose orthonormalized columns span the
/// time-encoded subspace. Requires 1 <= M < dim.
struct OrthogonalBasis {
  Matrix raw;

  /// Gaussian entries with stddev 1/sqrt(dim), orthonormalized once.
  static OrthogonalBasis random(std::size_t dim, std::size_t m, Rng& rng);
  static void validate_shape(std::size_t dim, std::size_t m);

  std::size_t dim() const noexcept { return raw.rows(); }
  std::size_t size() const noexcept { return raw.cols(); }
};

enum class BasisGradient {
  Full,             // differentiate through the Gram-Schmidt arithmetic
  StraightThrough,  // Q's gradient is handed to raw unchanged
};

/// Modified Gram-Schmidt on the columns of `raw`. Throws DegenerateBasisError
/// naming the first column whose residual norm falls below the threshold.
Var orthogonalize(Var raw, BasisGradient mode = BasisGradient::Full);
Matrix orthogonalize(const Matrix& raw);
Matrix orthogonalize(const OrthogonalBasis& basis);

/// Coordinates v Q of each row of v inside span(Q).
Var span_project(Var v, Var q);
Matrix span_project(const Matrix& v, const Matrix& q);

/// v - (v Q) Q^T, the part of each row orthogonal to span(Q).
Var complement_residual(Var v, Var q);
Matrix complement_residual(const Matrix& v, const Matrix& q);

/// max |Q^T Q - I| over all entries.
double orthogonality_error(const Matrix& q);

}  // namespace ltn
