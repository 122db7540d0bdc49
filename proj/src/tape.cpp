#include "ltn/tape.hpp"

#include "ltn/errors.hpp"

namespace ltn {

const Matrix& Var::value() const { return tape_->value(index_); }

Matrix Var::grad() const { return tape_->grad(index_); }

Var Tape::push(Node node) {
  if (!node.value.all_finite()) {
    throw NumericalError("non-finite value produced at tape node " + std::to_string(nodes_.size()));
  }
  nodes_.push_back(std::move(node));
  return Var(this, nodes_.size() - 1);
}

Var Tape::constant(Matrix value) {
  Node n;
  n.value = std::move(value);
  return push(std::move(n));
}

Var Tape::parameter(Matrix value) {
  Node n;
  n.value = std::move(value);
  n.needs_grad = true;
  return push(std::move(n));
}

Var Tape::record(Matrix value, std::initializer_list<Var> inputs, Backward backward) {
  Node n;
  n.value = std::move(value);
  for (const Var& v : inputs) {
    if (&v.tape() != this) throw Error("Var recorded on a different tape");
    n.needs_grad = n.needs_grad || nodes_[v.index()].needs_grad;
  }
  if (n.needs_grad) n.backward = std::move(backward);
  return push(std::move(n));
}

Var Tape::record(Matrix value, const std::vector<Var>& inputs, Backward backward) {
  Node n;
  n.value = std::move(value);
  for (const Var& v : inputs) {
    if (&v.tape() != this) throw Error("Var recorded on a different tape");
    n.needs_grad = n.needs_grad || nodes_[v.index()].needs_grad;
  }
  if (n.needs_grad) n.backward = std::move(backward);
  return push(std::move(n));
}

Matrix& Tape::grad_buffer(Var v) {
  Node& n = nodes_[v.index()];
  if (!n.has_grad) {
    n.grad = Matrix(n.value.rows(), n.value.cols());
    n.has_grad = true;
  }
  return n.grad;
}

void Tape::accumulate(Var v, const Matrix& g) {
  if (!nodes_[v.index()].needs_grad) return;
  grad_buffer(v) += g;
}

Matrix Tape::grad(std::size_t i) const {
  const Node& n = nodes_[i];
  if (n.has_grad) return n.grad;
  return Matrix(n.value.rows(), n.value.cols());
}

void Tape::backward(Var loss) {
  if (&loss.tape() != this) throw Error("backward on a Var from another tape");
  const Matrix& lv = value(loss.index());
  if (lv.rows() != 1 || lv.cols() != 1) {
    throw ShapeError("backward requires a 1x1 loss, got " + shape_str(lv));
  }
  for (auto& n : nodes_) {
    n.has_grad = false;
    n.grad = Matrix();
  }
  visit_log_.clear();
  if (!nodes_[loss.index()].needs_grad) return;
  grad_buffer(loss)(0, 0) = 1.0;
  for (std::size_t i = loss.index() + 1; i-- > 0;) {
    Node& n = nodes_[i];
    if (!n.has_grad || !n.backward) continue;
    visit_log_.push_back(i);
    n.backward(*this, n.grad, n.value);
  }
}

}  // namespace ltn
