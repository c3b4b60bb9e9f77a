#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace catgeo {

/// One named numeric check: passes when `value` lies within the stated bound.
struct CheckResult {
  std::string name;
  double value = 0.0;
  std::string bound;
  bool passed = false;
};

bool all_passed(const std::vector<CheckResult>& checks);

/// Noise-free planted invariants on the default tree:
/// member/non-member projection identity, orthogonality statements (a)-(d),
/// sibling simplices, and the zero outside centroid of each sibling polytope.
std::vector<CheckResult> run_planted_selfcheck(std::uint64_t seed, double tol = 1e-10);

}  // namespace catgeo
