#include "ltn/grad_check.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "ltn/errors.hpp"

namespace ltn {
namespace {

double evaluate(const ScalarFunction& f, std::span<Matrix* const> params) {
  Tape tape;
  std::vector<Var> vars;
  vars.reserve(params.size());
  for (Matrix* p : params) vars.push_back(tape.constant(*p));
  const Var loss = f(tape, vars);
  const double v = loss.value()(0, 0);
  if (!std::isfinite(v)) throw NumericalError("grad_check: non-finite loss");
  return v;
}

}  // namespace

GradCheckReport grad_check(const ScalarFunction& f, std::span<Matrix* const> params,
                           const GradCheckOptions& options) {
  std::vector<Matrix> analytic;
  {
    Tape tape;
    std::vector<Var> vars;
    for (Matrix* p : params) vars.push_back(tape.parameter(*p));
    const Var loss = f(tape, vars);
    if (loss.rows() != 1 || loss.cols() != 1) throw ShapeError("grad_check: loss must be 1x1");
    if (!std::isfinite(loss.value()(0, 0))) throw NumericalError("grad_check: non-finite loss");
    tape.backward(loss);
    for (const Var& v : vars) analytic.push_back(v.grad());
  }

  std::mt19937_64 rng(options.seed);
  GradCheckReport report;
  const double h = options.step;
  for (std::size_t pi = 0; pi < params.size(); ++pi) {
    Matrix& p = *params[pi];
    std::vector<std::size_t> entries(p.size());
    std::iota(entries.begin(), entries.end(), 0);
    if (options.max_entries_per_param != 0 && entries.size() > options.max_entries_per_param) {
      std::shuffle(entries.begin(), entries.end(), rng);
      entries.resize(options.max_entries_per_param);
    }
    for (std::size_t e : entries) {
      const double saved = p[e];
      p[e] = saved + h;
      const double up = evaluate(f, params);
      p[e] = saved - h;
      const double down = evaluate(f, params);
      p[e] = saved;
      const double numeric = (up - down) / (2.0 * h);
      const double err = std::abs(analytic[pi][e] - numeric) / std::max(1.0, std::abs(numeric));
      ++report.entries_checked;
      if (err > report.max_relative_error || report.entries_checked == 1) {
        report.max_relative_error = std::max(report.max_relative_error, err);
        report.worst_param = pi;
        report.worst_entry = e;
      }
    }
  }
  return report;
}

double grad_check(const ScalarFunction& f, Matrix& param, double step) {
  Matrix* ptrs[] = {&param};
  GradCheckOptions options;
  options.step = step;
  return grad_check(f, ptrs, options).max_relative_error;
}

}  // namespace ltn
