#include "ltn/nn.hpp"

#include <cmath>

#include "ltn/ops.hpp"

namespace ltn {

Matrix gaussian_matrix(std::size_t rows, std::size_t cols, double stddev, Rng& rng) {
  std::normal_distribution<double> dist(0.0, stddev);
  Matrix m(rows, cols);
  for (double& v : m.data()) v = dist(rng);
  return m;
}

Linear Linear::zeros(std::size_t in, std::size_t out) { return {Matrix(in, out), Matrix(1, out)}; }

Linear Linear::random(std::size_t in, std::size_t out, double gain, Rng& rng) {
  return {gaussian_matrix(in, out, gain / std::sqrt(static_cast<double>(in)), rng), Matrix(1, out)};
}

void append_params(std::vector<NamedParam>& out, const std::string& prefix, Linear& layer) {
  out.push_back({prefix + ".weight", &layer.weight});
  out.push_back({prefix + ".bias", &layer.bias});
}

Var Binder::operator()(const Matrix& m) {
  if (auto it = vars_.find(&m); it != vars_.end()) return it->second;
  Var v = trainable_ ? tape_->parameter(m) : tape_->constant(m);
  vars_.emplace(&m, v);
  return v;
}

Var Binder::lookup(const Matrix& m) const {
  auto it = vars_.find(&m);
  return it == vars_.end() ? Var() : it->second;
}

Var apply(Binder& bind, const Linear& layer, Var x) {
  return add_row_broadcast(matmul(x, bind(layer.weight)), bind(layer.bias));
}

}  // namespace ltn
