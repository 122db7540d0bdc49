#pragma once

#include <cstddef>
#include <functional>
#include <vector>

#include "ltn/matrix.hpp"

namespace ltn {

class Tape;

/// Handle to a value recorded on a Tape. Cheap to copy; valid while the tape lives.
class Var {
 public:
  Var() = default;

  const Matrix& value() const;
  /// Accumulated gradient after Tape::backward. Zero-filled if no gradient reached it.
  Matrix grad() const;
  std::size_t rows() const { return value().rows(); }
  std::size_t cols() const { return value().cols(); }
  Tape& tape() const { return *tape_; }
  std::size_t index() const noexcept { return index_; }
  bool valid() const noexcept { return tape_ != nullptr; }

 private:
  friend class Tape;
  Var(Tape* tape, std::size_t index) : tape_(tape), index_(index) {}

  Tape* tape_ = nullptr;
  std::size_t index_ = 0;
};

/// Reverse-mode gradient tape. Nodes are appended in evaluation order and
/// visited in exact reverse order by backward(). One tape per forward pass.
class Tape {
 public:
  /// Receives the gradient and value of the node's output and pushes
  /// contributions into its inputs through Tape::accumulate.
  using Backward = std::function<void(Tape&, const Matrix& out_grad, const Matrix& out_value)>;

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var constant(Matrix value);
  Var parameter(Matrix value);

  /// Appends an operation result. `inputs` decides whether the node needs a
  /// gradient; `backward` may be empty for nodes that never propagate.
  Var record(Matrix value, std::initializer_list<Var> inputs, Backward backward);
  Var record(Matrix value, const std::vector<Var>& inputs, Backward backward);

  /// Seeds d(loss)/d(loss) = 1 and propagates. `loss` must be 1x1.
  void backward(Var loss);

  bool needs_grad(Var v) const { return nodes_[v.index()].needs_grad; }
  void accumulate(Var v, const Matrix& g);
  /// Mutable gradient buffer for in-place accumulation; allocated on first use.
  Matrix& grad_buffer(Var v);

  const Matrix& value(std::size_t i) const { return nodes_[i].value; }
  Matrix grad(std::size_t i) const;
  std::size_t size() const noexcept { return nodes_.size(); }
  /// Indices of nodes whose backward rule ran during the last backward().
  const std::vector<std::size_t>& visit_log() const noexcept { return visit_log_; }

 private:
  struct Node {
    Matrix value;
    Matrix grad;
    bool needs_grad = false;
    bool has_grad = false;
    Backward backward;
  };

  Var push(Node node);

  std::vector<Node> nodes_;
  std::vector<std::size_t> visit_log_;
};

}  // namespace ltn
