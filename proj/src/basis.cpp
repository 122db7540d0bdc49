#include "ltn/basis.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "ltn/errors.hpp"
#include "ltn/ops.hpp"

namespace ltn {
namespace {

void require_projection_shapes(const Matrix& v, const Matrix& q) {
  if (v.cols() != q.rows()) {
    throw ShapeError("projection shape mismatch: v " + shape_str(v) + " against basis " + shape_str(q));
  }
}

}  // namespace

void OrthogonalBasis::validate_shape(std::size_t dim, std::size_t m) {
  if (m < 1 || m >= dim) {
    throw ShapeError("basis size M=" + std::to_string(m) + " must satisfy 1 <= M < dim=" + std::to_string(dim));
  }
}

OrthogonalBasis OrthogonalBasis::random(std::size_t dim, std::size_t m, Rng& rng) {
  validate_shape(dim, m);
  Matrix raw = gaussian_matrix(dim, m, 1.0 / std::sqrt(static_cast<double>(dim)), rng);
  return {orthogonalize(raw)};
}

Var orthogonalize(Var raw, BasisGradient mode) {
  Tape& tape = raw.tape();
  if (mode == BasisGradient::StraightThrough) {
    Matrix q = orthogonalize(raw.value());
    return tape.record(std::move(q), {raw}, [raw](Tape& t, const Matrix& g, const Matrix&) {
      t.accumulate(raw, g);
    });
  }
  const std::size_t m = raw.cols();
  std::vector<Var> columns;
  columns.reserve(m);
  for (std::size_t j = 0; j < m; ++j) {
    Var v = column(raw, j);
    for (const Var& qi : columns) {
      const Var coef = matmul(transpose(qi), v);
      v = sub(v, mul_scalar(qi, coef));
    }
    const Var norm = sqrt(matmul(transpose(v), v));
    const double residual = norm.value()(0, 0);
    if (!(residual > kDegeneracyThreshold)) throw DegenerateBasisError(j, residual);
    columns.push_back(div_scalar(v, norm));
  }
  return concat_cols(columns);
}

Matrix orthogonalize(const Matrix& raw) {
  Tape tape;
  return orthogonalize(tape.constant(raw)).value();
}

Matrix orthogonalize(const OrthogonalBasis& basis) { return orthogonalize(basis.raw); }

Var span_project(Var v, Var q) {
  require_projection_shapes(v.value(), q.value());
  return matmul(v, q);
}

Matrix span_project(const Matrix& v, const Matrix& q) {
  require_projection_shapes(v, q);
  return matmul(v, q);
}

Var complement_residual(Var v, Var q) {
  require_projection_shapes(v.value(), q.value());
  return sub(v, matmul(matmul(v, q), transpose(q)));
}

Matrix complement_residual(const Matrix& v, const Matrix& q) {
  require_projection_shapes(v, q);
  return v - matmul_nt(matmul(v, q), q);
}

double orthogonality_error(const Matrix& q) {
  const Matrix gram = matmul_tn(q, q);
  double err = 0.0;
  for (std::size_t i = 0; i < gram.rows(); ++i)
    for (std::size_t j = 0; j < gram.cols(); ++j)
      err = std::max(err, std::abs(gram(i, j) - (i == j ? 1.0 : 0.0)));
  return err;
}

}  // namespace ltn
