#pragma once

#include <functional>
#include <span>
#include <string>

#include "gada/autodiff.hpp"

namespace gada {

struct FiniteDiffOptions {
  double eps = 1e-5;
  Index max_coords_per_param = 0;  // 0 checks every coordinate
  std::uint64_t seed = 0;          // coordinate subsampling stream
};

struct FiniteDiffReport {
  double max_rel_error = 0.0;
  std::string worst_param;
  Index worst_coord = -1;
};

/// Central-difference check of analytic gradients over the given parameters.
/// build_loss must be pure: same parameter values, same scalar. Train-mode
/// batch norm mutates running stats, so check it with eval mode or with the
/// stats momentum set to zero.
FiniteDiffReport finite_diff_check(
    const std::function<Var(Graph&)>& build_loss,
    std::span<Parameter* const> params, const FiniteDiffOptions& opt = {});

}  // namespace gada
