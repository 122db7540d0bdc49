#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "ltn/matrix.hpp"
#include "ltn/nn.hpp"

namespace ltn {

/// Two-layer MLP phi: dim -> dim (ReLU) -> proj_dim.
struct ProjectionHead {
  Linear hidden;
  Linear output;

  static ProjectionHead random(std::size_t dim, std::size_t proj_dim, Rng& rng);
  static ProjectionHead identity(std::size_t dim);

  std::size_t proj_dim() const noexcept { return output.out(); }
  void append_params(std::vector<NamedParam>& out, const std::string& prefix);
};

Var project(Binder& bind, const ProjectionHead& head, Var x);
Matrix project(const ProjectionHead& head, const Matrix& x);

/// Row-wise cosine of phi(x), phi(y) divided by temp; n x 1.
Var similarity(Binder& bind, const ProjectionHead& head, Var x, Var y, double temp);
double similarity(const Matrix& x, const Matrix& y, const ProjectionHead& head, double temp);

enum class Denominator {
  PosNeg,   // standard InfoNCE: positives and negatives in the denominator
  NegOnly,  // negatives only
};

std::string to_string(Denominator d);
Denominator parse_denominator(const std::string& s);

/// Mean over queries of the multi-positive InfoNCE loss.
/// `query` is n x p of unit rows; `positives` holds P detached n x p matrices
/// of unit rows (row i pairs with query row i); `negatives` is N x p.
Var info_nce(Var query, std::span<const Matrix> positives, const Matrix& negatives, double temp,
             Denominator mode);

/// Reference form over precomputed (already temperature-scaled) similarities.
double info_nce(std::span<const double> positive_sims, std::span<const double> negative_sims, Denominator mode);

/// Negative-free objective: mean over positives of 2 - 2 cos(prediction, key).
Var cosine_regression(Var prediction, std::span<const Matrix> positives);

/// FIFO ring of unit-norm projected keys.
class NegativeQueue {
 public:
  NegativeQueue() = default;
  NegativeQueue(std::size_t capacity, std::size_t width);

  /// Appends each row of `keys`; rows must have unit norm within 1e-8.
  void enqueue(const Matrix& keys);

  std::size_t capacity() const noexcept { return capacity_; }
  std::size_t width() const noexcept { return buffer_.cols(); }
  std::size_t size() const noexcept { return size_; }
  std::size_t cursor() const noexcept { return cursor_; }
  bool empty() const noexcept { return size_ == 0; }

  /// The stored keys as a size x width matrix (storage order).
  Matrix active() const;
  /// Stored keys from oldest to newest.
  Matrix ordered() const;

  const Matrix& buffer() const noexcept { return buffer_; }
  /// Restores raw state (checkpoint load).
  void restore(Matrix buffer, std::size_t size, std::size_t cursor);

 private:
  std::size_t capacity_ = 0;
  std::size_t size_ = 0;
  std::size_t cursor_ = 0;
  Matrix buffer_;
};

/// shadow <- m * shadow + (1 - m) * online, entrywise, exact at m = 0 and m = 1
/// and when the two already agree. Throws ShapeError on any name or shape
/// drift between the two lists.
void momentum_update(std::span<const NamedParam> shadow, std::span<const NamedParam> online, double m);

}  // namespace ltn
