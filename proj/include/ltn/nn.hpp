#pragma once

#include <cstddef>
#include <random>
#include <string>
#include <unordered_map>
#include <vector>

#include "ltn/matrix.hpp"
#include "ltn/tape.hpp"

namespace ltn {

using Rng = std::mt19937_64;

/// Fills a rows x cols matrix with N(0, stddev^2) draws.
Matrix gaussian_matrix(std::size_t rows, std::size_t cols, double stddev, Rng& rng);

/// Affine layer y = x W + b with W in x out and b 1 x out.
struct Linear {
  Matrix weight;
  Matrix bias;

  static Linear zeros(std::size_t in, std::size_t out);
  /// Gaussian weights with stddev gain/sqrt(in); zero bias.
  static Linear random(std::size_t in, std::size_t out, double gain, Rng& rng);

  std::size_t in() const noexcept { return weight.rows(); }
  std::size_t out() const noexcept { return weight.cols(); }
};

/// A learnable matrix with a stable name, used for checkpoints and updates.
struct NamedParam {
  std::string name;
  Matrix* value;
};

void append_params(std::vector<NamedParam>& out, const std::string& prefix, Linear& layer);

/// Maps parameter matrices onto tape Vars for one forward pass. Trainable
/// binders create gradient-tracking leaves; frozen binders create constants.
class Binder {
 public:
  Binder(Tape& tape, bool trainable) : tape_(&tape), trainable_(trainable) {}

  Var operator()(const Matrix& m);
  /// Routes `m` to an existing Var (grad checks bind their own leaves).
  void bind(const Matrix& m, Var v) { vars_[&m] = v; }
  /// Var previously produced for `m`, or an invalid Var if the forward never used it.
  Var lookup(const Matrix& m) const;
  Tape& tape() const noexcept { return *tape_; }

 private:
  Tape* tape_;
  bool trainable_;
  std::unordered_map<const Matrix*, Var> vars_;
};

Var apply(Binder& bind, const Linear& layer, Var x);

}  // namespace ltn
