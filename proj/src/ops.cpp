#include "ltn/ops.hpp"

#include <algorithm>
#include <cmath>

#include "ltn/errors.hpp"

namespace ltn {
namespace {

void require_same_shape(const char* op, Var a, Var b) {
  if (!a.value().same_shape(b.value())) {
    throw ShapeError(std::string(op) + " shape mismatch: " + shape_str(a.value()) + " vs " +
                     shape_str(b.value()));
  }
}

void require_scalar(const char* op, Var s) {
  if (s.rows() != 1 || s.cols() != 1) {
    throw ShapeError(std::string(op) + " expects a 1x1 scalar, got " + shape_str(s.value()));
  }
}

template <class F>
Matrix map(const Matrix& a, F f) {
  Matrix out(a.rows(), a.cols());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = f(a[i]);
  return out;
}

}  // namespace

Var matmul(Var a, Var b) {
  Matrix out = matmul(a.value(), b.value());
  return a.tape().record(std::move(out), {a, b}, [a, b](Tape& t, const Matrix& g, const Matrix&) {
    if (t.needs_grad(a)) t.accumulate(a, matmul_nt(g, b.value()));
    if (t.needs_grad(b)) t.accumulate(b, matmul_tn(a.value(), g));
  });
}

Var transpose(Var a) {
  return a.tape().record(transpose(a.value()), {a}, [a](Tape& t, const Matrix& g, const Matrix&) {
    t.accumulate(a, transpose(g));
  });
}

Var add(Var a, Var b) {
  require_same_shape("add", a, b);
  return a.tape().record(a.value() + b.value(), {a, b}, [a, b](Tape& t, const Matrix& g, const Matrix&) {
    t.accumulate(a, g);
    t.accumulate(b, g);
  });
}

Var sub(Var a, Var b) {
  require_same_shape("sub", a, b);
  return a.tape().record(a.value() - b.value(), {a, b}, [a, b](Tape& t, const Matrix& g, const Matrix&) {
    t.accumulate(a, g);
    if (t.needs_grad(b)) t.accumulate(b, g * -1.0);
  });
}

Var hadamard(Var a, Var b) {
  require_same_shape("hadamard", a, b);
  const Matrix& av = a.value();
  const Matrix& bv = b.value();
  Matrix out(av.rows(), av.cols());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = av[i] * bv[i];
  return a.tape().record(std::move(out), {a, b}, [a, b](Tape& t, const Matrix& g, const Matrix&) {
    if (t.needs_grad(a)) {
      Matrix& ga = t.grad_buffer(a);
      const Matrix& bv = b.value();
      for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * bv[i];
    }
    if (t.needs_grad(b)) {
      Matrix& gb = t.grad_buffer(b);
      const Matrix& av = a.value();
      for (std::size_t i = 0; i < g.size(); ++i) gb[i] += g[i] * av[i];
    }
  });
}

Var scale(Var a, double s) {
  return a.tape().record(a.value() * s, {a}, [a, s](Tape& t, const Matrix& g, const Matrix&) {
    t.accumulate(a, g * s);
  });
}

Var add_row_broadcast(Var a, Var bias) {
  const Matrix& av = a.value();
  const Matrix& bv = bias.value();
  if (bv.rows() != 1 || bv.cols() != av.cols()) {
    throw ShapeError("add_row_broadcast shape mismatch: " + shape_str(av) + " + " + shape_str(bv));
  }
  Matrix out = av;
  for (std::size_t r = 0; r < out.rows(); ++r)
    for (std::size_t c = 0; c < out.cols(); ++c) out(r, c) += bv(0, c);
  return a.tape().record(std::move(out), {a, bias}, [a, bias](Tape& t, const Matrix& g, const Matrix&) {
    t.accumulate(a, g);
    if (t.needs_grad(bias)) {
      Matrix& gb = t.grad_buffer(bias);
      for (std::size_t r = 0; r < g.rows(); ++r)
        for (std::size_t c = 0; c < g.cols(); ++c) gb(0, c) += g(r, c);
    }
  });
}

Var scale_rows(Var a, Var s) {
  const Matrix& av = a.value();
  const Matrix& sv = s.value();
  if (sv.cols() != 1 || sv.rows() != av.rows()) {
    throw ShapeError("scale_rows shape mismatch: " + shape_str(av) + " by " + shape_str(sv));
  }
  Matrix out = av;
  for (std::size_t r = 0; r < out.rows(); ++r)
    for (std::size_t c = 0; c < out.cols(); ++c) out(r, c) *= sv(r, 0);
  return a.tape().record(std::move(out), {a, s}, [a, s](Tape& t, const Matrix& g, const Matrix&) {
    const Matrix& av = a.value();
    const Matrix& sv = s.value();
    if (t.needs_grad(a)) {
      Matrix& ga = t.grad_buffer(a);
      for (std::size_t r = 0; r < g.rows(); ++r)
        for (std::size_t c = 0; c < g.cols(); ++c) ga(r, c) += g(r, c) * sv(r, 0);
    }
    if (t.needs_grad(s)) {
      Matrix& gs = t.grad_buffer(s);
      for (std::size_t r = 0; r < g.rows(); ++r)
        for (std::size_t c = 0; c < g.cols(); ++c) gs(r, 0) += g(r, c) * av(r, c);
    }
  });
}

Var mul_scalar(Var a, Var s) {
  require_scalar("mul_scalar", s);
  const double sv = s.value()(0, 0);
  return a.tape().record(a.value() * sv, {a, s}, [a, s](Tape& t, const Matrix& g, const Matrix&) {
    const double sv = s.value()(0, 0);
    if (t.needs_grad(a)) t.accumulate(a, g * sv);
    if (t.needs_grad(s)) {
      double acc = 0.0;
      const Matrix& av = a.value();
      for (std::size_t i = 0; i < g.size(); ++i) acc += g[i] * av[i];
      t.grad_buffer(s)(0, 0) += acc;
    }
  });
}

Var div_scalar(Var a, Var s) {
  require_scalar("div_scalar", s);
  const double sv = s.value()(0, 0);
  if (sv == 0.0) throw NumericalError("div_scalar by zero");
  return a.tape().record(a.value() * (1.0 / sv), {a, s}, [a, s](Tape& t, const Matrix& g, const Matrix& out) {
    const double sv = s.value()(0, 0);
    if (t.needs_grad(a)) t.accumulate(a, g * (1.0 / sv));
    if (t.needs_grad(s)) {
      double acc = 0.0;
      for (std::size_t i = 0; i < g.size(); ++i) acc += g[i] * out[i];
      t.grad_buffer(s)(0, 0) -= acc / sv;
    }
  });
}

Var relu(Var a) {
  Matrix out = map(a.value(), [](double v) { return v > 0.0 ? v : 0.0; });
  return a.tape().record(std::move(out), {a}, [a](Tape& t, const Matrix& g, const Matrix&) {
    Matrix& ga = t.grad_buffer(a);
    const Matrix& av = a.value();
    for (std::size_t i = 0; i < g.size(); ++i)
      if (av[i] > 0.0) ga[i] += g[i];
  });
}

Var exp(Var a) {
  Matrix out = map(a.value(), [](double v) { return std::exp(v); });
  return a.tape().record(std::move(out), {a}, [a](Tape& t, const Matrix& g, const Matrix& out) {
    Matrix& ga = t.grad_buffer(a);
    for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * out[i];
  });
}

Var log(Var a) {
  for (double v : a.value().data())
    if (!(v > 0.0)) throw NumericalError("log of non-positive value");
  Matrix out = map(a.value(), [](double v) { return std::log(v); });
  return a.tape().record(std::move(out), {a}, [a](Tape& t, const Matrix& g, const Matrix&) {
    Matrix& ga = t.grad_buffer(a);
    const Matrix& av = a.value();
    for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] / av[i];
  });
}

Var sqrt(Var a) {
  for (double v : a.value().data())
    if (v < 0.0) throw NumericalError("sqrt of negative value");
  Matrix out = map(a.value(), [](double v) { return std::sqrt(v); });
  return a.tape().record(std::move(out), {a}, [a](Tape& t, const Matrix& g, const Matrix& out) {
    Matrix& ga = t.grad_buffer(a);
    for (std::size_t i = 0; i < g.size(); ++i) {
      if (out[i] == 0.0) throw NumericalError("sqrt gradient at zero");
      ga[i] += g[i] * 0.5 / out[i];
    }
  });
}

Var sum(Var a) {
  double s = 0.0;
  for (double v : a.value().data()) s += v;
  return a.tape().record(Matrix(1, 1, s), {a}, [a](Tape& t, const Matrix& g, const Matrix&) {
    Matrix& ga = t.grad_buffer(a);
    const double gv = g(0, 0);
    for (double& v : ga.data()) v += gv;
  });
}

Var mean(Var a) {
  const std::size_t n = a.value().size();
  if (n == 0) throw ShapeError("mean of empty matrix");
  return scale(sum(a), 1.0 / static_cast<double>(n));
}

Var row_sums(Var a) {
  const Matrix& av = a.value();
  Matrix out(av.rows(), 1);
  for (std::size_t r = 0; r < av.rows(); ++r) {
    double s = 0.0;
    for (double v : av.row(r)) s += v;
    out(r, 0) = s;
  }
  return a.tape().record(std::move(out), {a}, [a](Tape& t, const Matrix& g, const Matrix&) {
    Matrix& ga = t.grad_buffer(a);
    for (std::size_t r = 0; r < ga.rows(); ++r)
      for (double& v : ga.row(r)) v += g(r, 0);
  });
}

Var group_mean_rows(Var a, std::size_t group) {
  const Matrix& av = a.value();
  if (group == 0 || av.rows() % group != 0) {
    throw ShapeError("group_mean_rows: " + std::to_string(av.rows()) + " rows not divisible by " +
                     std::to_string(group));
  }
  const std::size_t n = av.rows() / group;
  const double inv = 1.0 / static_cast<double>(group);
  Matrix out(n, av.cols());
  for (std::size_t r = 0; r < av.rows(); ++r) {
    auto src = av.row(r);
    auto dst = out.row(r / group);
    for (std::size_t c = 0; c < src.size(); ++c) dst[c] += src[c] * inv;
  }
  return a.tape().record(std::move(out), {a}, [a, group, inv](Tape& t, const Matrix& g, const Matrix&) {
    Matrix& ga = t.grad_buffer(a);
    for (std::size_t r = 0; r < ga.rows(); ++r) {
      auto src = g.row(r / group);
      auto dst = ga.row(r);
      for (std::size_t c = 0; c < dst.size(); ++c) dst[c] += src[c] * inv;
    }
  });
}

Var logsumexp_rows(Var a) {
  const Matrix& av = a.value();
  if (av.cols() == 0) throw ShapeError("logsumexp_rows of empty rows");
  Matrix out(av.rows(), 1);
  for (std::size_t r = 0; r < av.rows(); ++r) {
    auto row = av.row(r);
    const double m = *std::max_element(row.begin(), row.end());
    double s = 0.0;
    for (double v : row) s += std::exp(v - m);
    out(r, 0) = m + std::log(s);
  }
  return a.tape().record(std::move(out), {a}, [a](Tape& t, const Matrix& g, const Matrix& out) {
    Matrix& ga = t.grad_buffer(a);
    const Matrix& av = a.value();
    for (std::size_t r = 0; r < av.rows(); ++r)
      for (std::size_t c = 0; c < av.cols(); ++c) ga(r, c) += g(r, 0) * std::exp(av(r, c) - out(r, 0));
  });
}

Matrix softmax_rows(const Matrix& a) {
  if (a.empty()) throw ShapeError("softmax of empty vector");
  Matrix out(a.rows(), a.cols());
  for (std::size_t r = 0; r < a.rows(); ++r) {
    auto row = a.row(r);
    const double m = *std::max_element(row.begin(), row.end());
    double s = 0.0;
    for (std::size_t c = 0; c < row.size(); ++c) s += (out(r, c) = std::exp(row[c] - m));
    for (std::size_t c = 0; c < row.size(); ++c) out(r, c) /= s;
  }
  return out;
}

Var softmax_rows(Var a) {
  return a.tape().record(softmax_rows(a.value()), {a}, [a](Tape& t, const Matrix& g, const Matrix& y) {
    Matrix& ga = t.grad_buffer(a);
    for (std::size_t r = 0; r < y.rows(); ++r) {
      double dot = 0.0;
      for (std::size_t c = 0; c < y.cols(); ++c) dot += g(r, c) * y(r, c);
      for (std::size_t c = 0; c < y.cols(); ++c) ga(r, c) += y(r, c) * (g(r, c) - dot);
    }
  });
}

Matrix l2_normalize_rows(const Matrix& a, double eps) {
  Matrix out = a;
  for (std::size_t r = 0; r < a.rows(); ++r) {
    double s = 0.0;
    for (double v : a.row(r)) s += v * v;
    const double norm = std::sqrt(s);
    if (!(norm > eps)) {
      throw NumericalError("l2_normalize: row " + std::to_string(r) + " has near-zero norm " +
                           std::to_string(norm) + " (collapsed representation)");
    }
    for (double& v : out.row(r)) v /= norm;
  }
  return out;
}

Var l2_normalize_rows(Var a, double eps) {
  Matrix out = l2_normalize_rows(a.value(), eps);
  return a.tape().record(std::move(out), {a}, [a](Tape& t, const Matrix& g, const Matrix& y) {
    Matrix& ga = t.grad_buffer(a);
    const Matrix& av = a.value();
    for (std::size_t r = 0; r < y.rows(); ++r) {
      double s = 0.0;
      for (double v : av.row(r)) s += v * v;
      const double norm = std::sqrt(s);
      double dot = 0.0;
      for (std::size_t c = 0; c < y.cols(); ++c) dot += g(r, c) * y(r, c);
      for (std::size_t c = 0; c < y.cols(); ++c) ga(r, c) += (g(r, c) - y(r, c) * dot) / norm;
    }
  });
}

Var column(Var a, std::size_t j) { return slice_cols(a, j, j + 1); }

Var slice_cols(Var a, std::size_t begin, std::size_t end) {
  const Matrix& av = a.value();
  if (begin > end || end > av.cols()) {
    throw ShapeError("slice_cols [" + std::to_string(begin) + "," + std::to_string(end) + ") out of " +
                     shape_str(av));
  }
  Matrix out(av.rows(), end - begin);
  for (std::size_t r = 0; r < av.rows(); ++r)
    for (std::size_t c = begin; c < end; ++c) out(r, c - begin) = av(r, c);
  return a.tape().record(std::move(out), {a}, [a, begin](Tape& t, const Matrix& g, const Matrix&) {
    Matrix& ga = t.grad_buffer(a);
    for (std::size_t r = 0; r < g.rows(); ++r)
      for (std::size_t c = 0; c < g.cols(); ++c) ga(r, c + begin) += g(r, c);
  });
}

Var slice_rows(Var a, std::size_t begin, std::size_t end) {
  const Matrix& av = a.value();
  if (begin > end || end > av.rows()) {
    throw ShapeError("slice_rows [" + std::to_string(begin) + "," + std::to_string(end) + ") out of " +
                     shape_str(av));
  }
  const std::size_t cols = av.cols();
  std::vector<double> data(av.data().begin() + static_cast<std::ptrdiff_t>(begin * cols),
                           av.data().begin() + static_cast<std::ptrdiff_t>(end * cols));
  Matrix out(end - begin, cols, std::move(data));
  return a.tape().record(std::move(out), {a}, [a, begin](Tape& t, const Matrix& g, const Matrix&) {
    Matrix& ga = t.grad_buffer(a);
    const std::size_t off = begin * g.cols();
    for (std::size_t i = 0; i < g.size(); ++i) ga[off + i] += g[i];
  });
}

Var concat_cols(const std::vector<Var>& parts) {
  if (parts.empty()) throw ShapeError("concat_cols of nothing");
  const std::size_t rows = parts.front().rows();
  std::size_t cols = 0;
  for (const Var& p : parts) {
    if (p.rows() != rows) throw ShapeError("concat_cols row mismatch: " + shape_str(p.value()));
    cols += p.cols();
  }
  Matrix out(rows, cols);
  std::size_t off = 0;
  for (const Var& p : parts) {
    const Matrix& pv = p.value();
    for (std::size_t r = 0; r < rows; ++r)
      for (std::size_t c = 0; c < pv.cols(); ++c) out(r, off + c) = pv(r, c);
    off += pv.cols();
  }
  return parts.front().tape().record(std::move(out), parts, [parts](Tape& t, const Matrix& g, const Matrix&) {
    std::size_t off = 0;
    for (const Var& p : parts) {
      const std::size_t pc = p.cols();
      if (t.needs_grad(p)) {
        Matrix& gp = t.grad_buffer(p);
        for (std::size_t r = 0; r < g.rows(); ++r)
          for (std::size_t c = 0; c < pc; ++c) gp(r, c) += g(r, off + c);
      }
      off += pc;
    }
  });
}

Var concat_rows(const std::vector<Var>& parts) {
  if (parts.empty()) throw ShapeError("concat_rows of nothing");
  std::vector<Matrix> values;
  values.reserve(parts.size());
  for (const Var& p : parts) values.push_back(p.value());
  Matrix out = vstack(values);
  return parts.front().tape().record(std::move(out), parts, [parts](Tape& t, const Matrix& g, const Matrix&) {
    std::size_t off = 0;
    for (const Var& p : parts) {
      const std::size_t n = p.value().size();
      if (t.needs_grad(p)) {
        Matrix& gp = t.grad_buffer(p);
        for (std::size_t i = 0; i < n; ++i) gp[i] += g[off + i];
      }
      off += n;
    }
  });
}

Var reshape(Var a, std::size_t rows, std::size_t cols) {
  const Matrix& av = a.value();
  if (rows * cols != av.size()) {
    throw ShapeError("reshape " + shape_str(av) + " to " + std::to_string(rows) + "x" + std::to_string(cols));
  }
  std::vector<double> data(av.data().begin(), av.data().end());
  return a.tape().record(Matrix(rows, cols, std::move(data)), {a}, [a](Tape& t, const Matrix& g, const Matrix&) {
    Matrix& ga = t.grad_buffer(a);
    for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i];
  });
}

Var stop_gradient(Var a) { return a.tape().constant(a.value()); }

}  // namespace ltn
