#pragma once

#include <string>
#include <vector>

namespace ltn {

struct SelftestCheck {
  std::string name;
  bool passed = false;
  std::string detail;
};

/// Gradient checks of every primitive and model block plus the core
/// invariants (orthonormality, subspace locality, InfoNCE reference, queue
/// order, momentum rule, determinism, checkpoint replay). Runs in seconds.
std::vector<SelftestCheck> run_selftest();

}  // namespace ltn
