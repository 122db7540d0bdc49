#include "ltn/contrastive.hpp"

#include <algorithm>
#include <cmath>

#include "ltn/errors.hpp"
#include "ltn/ops.hpp"

namespace ltn {

ProjectionHead ProjectionHead::random(std::size_t dim, std::size_t proj_dim, Rng& rng) {
  ProjectionHead head;
  head.hidden = Linear::random(dim, dim, std::sqrt(2.0), rng);
  head.output = Linear::random(dim, proj_dim, 1.0, rng);
  return head;
}

ProjectionHead ProjectionHead::identity(std::size_t dim) {
  // relu(x) - relu(-x) = x, realized with a 2*dim hidden layer.
  ProjectionHead head;
  head.hidden = Linear::zeros(dim, 2 * dim);
  head.output = Linear::zeros(2 * dim, dim);
  for (std::size_t i = 0; i < dim; ++i) {
    head.hidden.weight(i, i) = 1.0;
    head.hidden.weight(i, dim + i) = -1.0;
    head.output.weight(i, i) = 1.0;
    head.output.weight(dim + i, i) = -1.0;
  }
  return head;
}

void ProjectionHead::append_params(std::vector<NamedParam>& out, const std::string& prefix) {
  ltn::append_params(out, prefix + ".hidden", hidden);
  ltn::append_params(out, prefix + ".output", output);
}

Var project(Binder& bind, const ProjectionHead& head, Var x) {
  return apply(bind, head.output, relu(apply(bind, head.hidden, x)));
}

Matrix project(const ProjectionHead& head, const Matrix& x) {
  Tape tape;
  Binder bind(tape, false);
  return project(bind, head, tape.constant(x)).value();
}

Var similarity(Binder& bind, const ProjectionHead& head, Var x, Var y, double temp) {
  if (!(temp > 0.0)) throw NumericalError("temperature must be positive");
  const Var zx = l2_normalize_rows(project(bind, head, x));
  const Var zy = l2_normalize_rows(project(bind, head, y));
  return scale(row_sums(hadamard(zx, zy)), 1.0 / temp);
}

double similarity(const Matrix& x, const Matrix& y, const ProjectionHead& head, double temp) {
  if (x.rows() != 1 || !x.same_shape(y)) {
    throw ShapeError("similarity expects two 1 x dim rows, got " + shape_str(x) + " and " + shape_str(y));
  }
  Tape tape;
  Binder bind(tape, false);
  return similarity(bind, head, tape.constant(x), tape.constant(y), temp).value()(0, 0);
}

std::string to_string(Denominator d) { return d == Denominator::PosNeg ? "pos+neg" : "neg_only"; }

Denominator parse_denominator(const std::string& s) {
  if (s == "pos+neg") return Denominator::PosNeg;
  if (s == "neg_only") return Denominator::NegOnly;
  throw ConfigError("denominator", "expected pos+neg|neg_only, got '" + s + "'");
}

Var info_nce(Var query, std::span<const Matrix> positives, const Matrix& negatives, double temp,
             Denominator mode) {
  if (positives.empty()) throw Error("info_nce needs at least one positive key");
  if (negatives.rows() == 0) throw Error("info_nce needs a nonempty negative queue");
  if (!(temp > 0.0)) throw NumericalError("temperature must be positive");
  Tape& tape = query.tape();
  std::vector<Var> pos_cols;
  pos_cols.reserve(positives.size());
  for (const Matrix& keys : positives) {
    if (!keys.same_shape(query.value())) {
      throw ShapeError("positive keys " + shape_str(keys) + " do not match queries " + shape_str(query.value()));
    }
    pos_cols.push_back(row_sums(hadamard(query, tape.constant(keys))));
  }
  if (negatives.cols() != query.cols()) {
    throw ShapeError("negatives " + shape_str(negatives) + " do not match queries " + shape_str(query.value()));
  }
  const Var pos = scale(concat_cols(pos_cols), 1.0 / temp);
  const Var neg = scale(matmul(query, tape.constant(transpose(negatives))), 1.0 / temp);
  const Var denom = mode == Denominator::PosNeg ? logsumexp_rows(concat_cols({pos, neg})) : logsumexp_rows(neg);
  return mean(sub(denom, logsumexp_rows(pos)));
}

double info_nce(std::span<const double> positive_sims, std::span<const double> negative_sims, Denominator mode) {
  if (positive_sims.empty()) throw Error("info_nce needs at least one positive similarity");
  if (negative_sims.empty()) throw Error("info_nce needs at least one negative similarity");
  auto lse = [](std::initializer_list<std::span<const double>> groups) {
    double m = -INFINITY;
    for (auto g : groups)
      for (double v : g) m = std::max(m, v);
    double s = 0.0;
    for (auto g : groups)
      for (double v : g) s += std::exp(v - m);
    return m + std::log(s);
  };
  const double num = lse({positive_sims});
  const double den = mode == Denominator::PosNeg ? lse({positive_sims, negative_sims}) : lse({negative_sims});
  return den - num;
}

Var cosine_regression(Var prediction, std::span<const Matrix> positives) {
  if (positives.empty()) throw Error("cosine_regression needs at least one positive key");
  Tape& tape = prediction.tape();
  const Var p = l2_normalize_rows(prediction);
  std::vector<Var> cos;
  for (const Matrix& keys : positives) cos.push_back(row_sums(hadamard(p, tape.constant(keys))));
  const Var c = concat_cols(cos);
  const Var two = tape.constant(Matrix(c.rows(), c.cols(), 2.0));
  return mean(sub(two, scale(c, 2.0)));
}

NegativeQueue::NegativeQueue(std::size_t capacity, std::size_t width)
    : capacity_(capacity), buffer_(capacity, width) {
  if (capacity == 0) throw Error("queue capacity must be positive");
}

void NegativeQueue::enqueue(const Matrix& keys) {
  if (keys.cols() != width()) {
    throw ShapeError("enqueue width " + std::to_string(keys.cols()) + " != queue width " + std::to_string(width()));
  }
  for (std::size_t r = 0; r < keys.rows(); ++r) {
    double s = 0.0;
    for (double v : keys.row(r)) s += v * v;
    if (std::abs(std::sqrt(s) - 1.0) > 1e-8) {
      throw NumericalError("enqueue: key " + std::to_string(r) + " is not unit-normalized");
    }
  }
  for (std::size_t r = 0; r < keys.rows(); ++r) {
    std::copy(keys.row(r).begin(), keys.row(r).end(), buffer_.row(cursor_).begin());
    cursor_ = (cursor_ + 1) % capacity_;
    size_ = std::min(size_ + 1, capacity_);
  }
}

Matrix NegativeQueue::active() const {
  if (size_ == capacity_) return buffer_;
  std::vector<double> data(buffer_.data().begin(), buffer_.data().begin() + static_cast<std::ptrdiff_t>(size_ * width()));
  return Matrix(size_, width(), std::move(data));
}

Matrix NegativeQueue::ordered() const {
  Matrix out(size_, width());
  const std::size_t start = size_ == capacity_ ? cursor_ : 0;
  for (std::size_t i = 0; i < size_; ++i) {
    auto src = buffer_.row((start + i) % capacity_);
    std::copy(src.begin(), src.end(), out.row(i).begin());
  }
  return out;
}

void NegativeQueue::restore(Matrix buffer, std::size_t size, std::size_t cursor) {
  if (buffer.rows() == 0 || size > buffer.rows() || cursor >= buffer.rows()) {
    throw FormatError("queue state out of range");
  }
  capacity_ = buffer.rows();
  buffer_ = std::move(buffer);
  size_ = size;
  cursor_ = cursor;
}

void momentum_update(std::span<const NamedParam> shadow, std::span<const NamedParam> online, double m) {
  if (!(m >= 0.0 && m <= 1.0)) throw Error("momentum coefficient must lie in [0, 1]");
  if (shadow.size() != online.size()) {
    throw ShapeError("momentum update: " + std::to_string(shadow.size()) + " shadow tensors vs " +
                     std::to_string(online.size()) + " online tensors");
  }
  for (std::size_t i = 0; i < shadow.size(); ++i) {
    if (shadow[i].name != online[i].name || !shadow[i].value->same_shape(*online[i].value)) {
      throw ShapeError("momentum update: shape drift at '" + online[i].name + "' (" + shape_str(*online[i].value) +
                       " vs " + shape_str(*shadow[i].value) + ")");
    }
  }
  for (std::size_t i = 0; i < shadow.size(); ++i) {
    Matrix& s = *shadow[i].value;
    const Matrix& o = *online[i].value;
    for (std::size_t k = 0; k < s.size(); ++k) s[k] = std::lerp(o[k], s[k], m);
  }
}

}  // namespace ltn
