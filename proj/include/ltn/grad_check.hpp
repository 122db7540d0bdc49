#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "ltn/tape.hpp"

namespace ltn {

/// Builds a 1x1 loss on `tape` from the bound parameter Vars (same order as
/// the matrices handed to grad_check).
using ScalarFunction = std::function<Var(Tape& tape, std::span<const Var> params)>;

struct GradCheckOptions {
  double step = 1e-5;
  /// Entries probed per parameter matrix; 0 probes every entry.
  std::size_t max_entries_per_param = 0;
  std::uint64_t seed = 0;
};

struct GradCheckReport {
  double max_relative_error = 0.0;
  std::size_t worst_param = 0;
  std::size_t worst_entry = 0;
  std::size_t entries_checked = 0;
};

/// Compares tape gradients against central differences. The error for one
/// entry is |analytic - numeric| / max(1, |numeric|); the report carries the
/// maximum. Throws NumericalError if the loss is non-finite at any probe.
/// The matrices are perturbed in place and restored before returning.
GradCheckReport grad_check(const ScalarFunction& f, std::span<Matrix* const> params,
                           const GradCheckOptions& options = {});

double grad_check(const ScalarFunction& f, Matrix& param, double step = 1e-5);

}  // namespace ltn
