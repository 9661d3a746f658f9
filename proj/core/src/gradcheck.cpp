#include "gada/gradcheck.hpp"

#include <cmath>
#include <numeric>

#include "gada/rng.hpp"

namespace gada {

FiniteDiffReport finite_diff_check(
    const std::function<Var(Graph&)>& build_loss,
    std::span<Parameter* const> params, const FiniteDiffOptions& opt) {
  require(opt.eps > 0.0, "finite_diff_check: eps must be positive");
  for (Parameter* p : params) p->zero_grad();
  {
    Graph g;
    Var root = build_loss(g);
    g.backward(root);
  }
  std::vector<Tensor> analytic;
  analytic.reserve(params.size());
  for (Parameter* p : params) analytic.push_back(p->grad);

  auto eval_loss = [&]() {
    Graph g;
    return g.value(build_loss(g)).item();
  };

  Rng rng(opt.seed);
  FiniteDiffReport rep;
  for (std::size_t pi = 0; pi < params.size(); ++pi) {
    Parameter& p = *params[pi];
    const Index total = p.value.numel();
    std::vector<Index> coords(static_cast<std::size_t>(total));
    std::iota(coords.begin(), coords.end(), Index{0});
    if (opt.max_coords_per_param > 0 && total > opt.max_coords_per_param) {
      for (Index i = 0; i < opt.max_coords_per_param; ++i) {
        const Index j = i + rng.uniform_int(total - i);
        std::swap(coords[static_cast<std::size_t>(i)],
                  coords[static_cast<std::size_t>(j)]);
      }
      coords.resize(static_cast<std::size_t>(opt.max_coords_per_param));
    }
    for (Index ci : coords) {
      const double orig = p.value.at(ci);
      p.value.at(ci) = orig + opt.eps;
      const double lp = eval_loss();
      p.value.at(ci) = orig - opt.eps;
      const double lm = eval_loss();
      p.value.at(ci) = orig;
      const double numeric = (lp - lm) / (2.0 * opt.eps);
      const double a = analytic[pi].at(ci);
      const double denom =
          std::max(std::max(std::fabs(a), std::fabs(numeric)), 1e-8);
      const double rel = std::fabs(a - numeric) / denom;
      if (rel > rep.max_rel_error) {
        rep.max_rel_error = rel;
        rep.worst_param = p.name;
        rep.worst_coord = ci;
      }
    }
  }
  return rep;
}

}  // namespace gada
