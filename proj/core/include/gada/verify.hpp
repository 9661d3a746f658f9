#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "gada/tensor.hpp"

namespace gada {

/// One oracle check: the measured worst error and the bound it must stay
/// under (strictly below counts as a pass).
struct CheckResult {
  std::string name;
  bool pass = false;
  double max_error = 0.0;
  double bound = 0.0;
  std::string detail;
};

bool all_passed(const std::vector<CheckResult>& results);

/// Finite-difference gradient checks of the composite objective on a small
/// instance, one result per parameter group. Runs the attached-attention
/// configuration, where the network is differentiable end to end.
std::vector<CheckResult> verify_gradcheck(std::uint64_t seed);

/// Power-iteration PageRank against the dense linear-system oracle on
/// `trees` random trees with random personalizations.
std::vector<CheckResult> verify_ppr(std::uint64_t seed, Index trees = 100);

/// Structural invariants: mask soundness, softmax normalization, residual
/// identity, adjacency symmetry and spectral radius, reversal semantics,
/// and the loss decomposition identity.
std::vector<CheckResult> verify_invariants(std::uint64_t seed);

/// All three suites concatenated.
std::vector<CheckResult> verify_all(std::uint64_t seed);

}  // namespace gada
