#include "gada/verify.hpp"

#include <algorithm>
#include <cmath>
#include <span>

#include "gada/gradcheck.hpp"
#include "gada/hierarchy.hpp"
#include "gada/model.hpp"
#include "gada/objective.hpp"
#include "gada/rng.hpp"
#include "gada/synth.hpp"
#include "gada/train.hpp"

namespace gada {

namespace {

/// Small instance shared by the suites: 6 classes on a pruned 3-ary tree,
/// 2x2x8 grids, 3 shared classes.
ScenarioConfig small_scenario_config(std::uint64_t seed) {
  ScenarioConfig cfg;
  cfg.name = "verify-small";
  cfg.class_count = 6;
  cfg.shared_count = 3;
  cfg.depth = 2;
  cfg.branching = 3;
  cfg.height = 2;
  cfg.width = 2;
  cfg.input_dim = 8;
  cfg.source_shared_per_class = 3;
  cfg.source_nonshared_per_class = 3;
  cfg.target_per_class = 3;
  cfg.noise_sigma = 0.5;
  cfg.seed = seed;
  return cfg;
}

ModelConfig small_model_config(const ScenarioConfig& s, bool attached) {
  ModelConfig m;
  m.input_dim = s.input_dim;
  m.height = s.height;
  m.width = s.width;
  m.hgr.feature_dim = 8;
  m.hgr.semantic_dim = 4;
  m.hgr.detach_attention = !attached;
  // A short unroll keeps the attached-mode graphs small; the iteration has
  // converged long before this on 10-node trees.
  m.hgr.ppr.max_iterations = attached ? 40 : 100;
  return m;
}

struct SmallBatches {
  Batch shared_b, full_b, target_b;
};

SmallBatches small_batches(const Scenario& s) {
  SmallBatches b;
  std::vector<Index> shared_pick, full_pick, target_pick;
  for (size_t i = 0; i < s.source_inputs.size() && shared_pick.size() < 2;
       ++i) {
    if (s.source_is_shared[i]) shared_pick.push_back(static_cast<Index>(i));
  }
  for (size_t i = 0; i < s.source_inputs.size() && full_pick.size() < 3;
       i += 5) {
    full_pick.push_back(static_cast<Index>(i));
  }
  for (size_t i = 0; i < s.target_inputs.size() && target_pick.size() < 2;
       i += 2) {
    target_pick.push_back(static_cast<Index>(i));
  }
  b.shared_b = make_batch(s.source_inputs, s.source_labels, shared_pick);
  b.full_b = make_batch(s.source_inputs, s.source_labels, full_pick);
  b.target_b = make_batch(s.target_inputs, s.target_labels, target_pick);
  return b;
}

CheckResult make_result(std::string name, double err, double bound,
                        std::string detail = "") {
  CheckResult r;
  r.name = std::move(name);
  r.max_error = err;
  r.bound = bound;
  r.pass = err < bound;
  r.detail = std::move(detail);
  return r;
}

}  // namespace

bool all_passed(const std::vector<CheckResult>& results) {
  for (const CheckResult& r : results) {
    if (!r.pass) return false;
  }
  return true;
}

std::vector<CheckResult> verify_gradcheck(std::uint64_t seed) {
  ScenarioConfig scfg = small_scenario_config(derive_seed(seed, "gc-scn"));
  Scenario scenario = sample_scenario(scfg);
  GadaModel model(scenario.hierarchy, scenario.mask,
                  small_model_config(scfg, /*attached=*/true),
                  derive_seed(seed, "gc-model"));
  SmallBatches b = small_batches(scenario);

  ObjectiveConfig ocfg;
  // gamma 0 holds the confidence gate fully open: the gate is a step
  // function of the backbone probabilities, which finite differences must
  // not straddle.
  ocfg.gamma = 0.0;
  auto build_loss = [&](Graph& g) -> Var {
    LossTerms t = build_loss_terms(g, b.shared_b, b.full_b, b.target_b,
                                   model, Mode::eval, ocfg, 0.0,
                                   /*reversal=*/false);
    Var big = g.scale(g.add(t.l_k1, t.l_k2), ocfg.lambda1);
    return g.add(t.l_shared, g.add(big, g.scale(t.j, ocfg.lambda2)));
  };

  std::vector<CheckResult> results;
  for (Parameter* p : model.trainable()) {
    Parameter* const arr[] = {p};
    FiniteDiffReport r = finite_diff_check(build_loss, std::span(arr, 1));
    results.push_back(make_result("gradcheck/" + p->name, r.max_rel_error,
                                  1e-4,
                                  "worst coord " + std::to_string(r.worst_coord)));
  }
  return results;
}

std::vector<CheckResult> verify_ppr(std::uint64_t seed, Index trees) {
  double worst = 0.0, worst_mass = 0.0;
  for (Index t = 0; t < trees; ++t) {
    HierarchyGraph g =
        random_tree(derive_seed(seed, "ppr-tree-" + std::to_string(t)), 64);
    Rng rng(derive_seed(seed, "ppr-pers-" + std::to_string(t)));
    Tensor v(Shape{g.node_count});
    for (double& x : v.values) {
      x = rng.uniform() < 0.3 ? 0.0 : rng.uniform();
    }
    bool any = false;
    for (double x : v.values) any = any || x > 0.0;
    if (!any) v.values[0] = 1.0;

    Tensor a = personalized_pagerank(g, v, {});
    Tensor oracle = ppr_oracle_solve(g, v, 0.85);
    worst = std::max(worst, max_abs_diff(a, oracle));
    double mass = 0.0;
    for (double x : a.values) mass += x;
    worst_mass = std::max(worst_mass, std::abs(mass - 1.0));
  }
  return {make_result("ppr/oracle-equivalence", worst, 1e-8,
                      std::to_string(trees) + " random trees"),
          make_result("ppr/mass-conservation", worst_mass, 1e-9)};
}

std::vector<CheckResult> verify_invariants(std::uint64_t seed) {
  std::vector<CheckResult> results;
  ScenarioConfig scfg = small_scenario_config(derive_seed(seed, "inv-scn"));
  Scenario scenario = sample_scenario(scfg);

  {  // Mask soundness and softmax normalization over random models/inputs.
    double violations = 0.0, worst_sum = 0.0;
    for (Index m = 0; m < 10; ++m) {
      GadaModel model(scenario.hierarchy, scenario.mask,
                      small_model_config(scfg, false),
                      derive_seed(seed, "inv-model-" + std::to_string(m)));
      Rng rng(derive_seed(seed, "inv-input-" + std::to_string(m)));
      for (Index i = 0; i < 20; ++i) {
        Tensor grid = rng.gaussian_tensor(
            Shape{scfg.height, scfg.width, scfg.input_dim}, 2.0);
        Predictions p = model.forward_all(grid, Mode::eval);
        if (scenario.mask.values[p.h1] != 1.0) violations += 1.0;
        if (scenario.mask.values[p.h2] != 1.0) violations += 1.0;
        for (Index k = 0; k < model.class_count(); ++k) {
          if (scenario.mask.values[k] == 0.0) {
            if (p.p1_pp.values[k] != 0.0) violations += 1.0;
            if (p.p2_pp.values[k] != 0.0) violations += 1.0;
          }
        }
        for (const Tensor* probs : {&p.p1, &p.p1_plus, &p.p2_plus}) {
          double sum = 0.0;
          for (double x : probs->values) sum += x;
          worst_sum = std::max(worst_sum, std::abs(sum - 1.0));
        }
      }
    }
    results.push_back(make_result("invariants/mask-soundness", violations,
                                  0.5, "200 random model/input draws"));
    results.push_back(
        make_result("invariants/softmax-normalization", worst_sum, 1e-9));
  }

  {  // Residual identity with the write-back MLP's final layer zeroed.
    Rng layer_rng(derive_seed(seed, "inv-layer"));
    HgrConfig hcfg;
    hcfg.feature_dim = 8;
    hcfg.semantic_dim = 4;
    HgrLayer layer(scenario.hierarchy, hcfg, layer_rng, "inv.");
    std::fill(layer.params().mlp_out_w2.value.values.begin(),
              layer.params().mlp_out_w2.value.values.end(), 0.0);
    std::fill(layer.params().mlp_out_b2.value.values.begin(),
              layer.params().mlp_out_b2.value.values.end(), 0.0);
    Rng rng(derive_seed(seed, "inv-res"));
    double mismatches = 0.0;
    for (Index i = 0; i < 100; ++i) {
      Tensor grid = rng.gaussian_tensor(Shape{2, 2, 8}, 1.0);
      Tensor p1 = rng.gaussian_tensor(Shape{6}, 1.0);
      double mx = p1.values[0];
      for (double x : p1.values) mx = std::max(mx, x);
      double z = 0.0;
      for (double& x : p1.values) {
        x = std::exp(x - mx);
        z += x;
      }
      for (double& x : p1.values) x /= z;
      Tensor out = layer.forward_value(grid, p1, Mode::eval);
      if (!bitwise_equal(out, grid)) mismatches += 1.0;
    }
    results.push_back(make_result("invariants/residual-identity", mismatches,
                                  0.5, "100 inputs, zeroed final layer"));
  }

  {  // Normalized adjacency: symmetry and spectral radius on random trees.
    double asym = 0.0, radius_excess = 0.0;
    for (Index t = 0; t < 100; ++t) {
      HierarchyGraph g =
          random_tree(derive_seed(seed, "inv-adj-" + std::to_string(t)), 48);
      Tensor a = normalized_adjacency(g);
      const Index n = g.node_count;
      for (Index i = 0; i < n; ++i) {
        for (Index j = 0; j < n; ++j) {
          asym = std::max(asym, std::abs(a.at(i, j) - a.at(j, i)));
        }
      }
      Rng rng(derive_seed(seed, "inv-pow-" + std::to_string(t)));
      Tensor v = rng.gaussian_tensor(Shape{n}, 1.0);
      double norm = 0.0;
      for (Index s = 0; s < 200; ++s) {
        Tensor next(Shape{n});
        for (Index i = 0; i < n; ++i) {
          double acc = 0.0;
          for (Index j = 0; j < n; ++j) acc += a.at(i, j) * v.values[j];
          next.values[i] = acc;
        }
        norm = 0.0;
        for (double x : next.values) norm += x * x;
        norm = std::sqrt(norm);
        require(norm > 0.0, "verify: power iteration collapsed");
        for (double& x : next.values) x /= norm;
        v = std::move(next);
      }
      radius_excess = std::max(radius_excess, norm - 1.0);
    }
    results.push_back(make_result("invariants/adjacency-symmetry", asym,
                                  1e-12, "100 random trees"));
    results.push_back(make_result("invariants/spectral-radius",
                                  std::max(radius_excess, 0.0), 1e-9));
  }

  {  // Reversal semantics: identity forward, -eta gradient backward.
    Parameter p("p", Tensor({3}, {0.5, -1.25, 2.0}));
    Graph g;
    Var x = g.leaf(p);
    Var y = g.grad_reverse(x, 2.5);
    double fwd_err = max_abs_diff(g.value(y), p.value);
    g.backward(g.sum(g.mul(y, y)));
    double grad_err = 0.0;
    for (Index i = 0; i < 3; ++i) {
      const double want = -2.5 * 2.0 * p.value.values[i];
      grad_err = std::max(grad_err, std::abs(p.grad.values[i] - want));
    }
    results.push_back(
        make_result("invariants/reversal-forward-identity", fwd_err, 1e-300));
    results.push_back(
        make_result("invariants/reversal-gradient", grad_err, 1e-12));
  }

  {  // SCF gate reads the backbone only: perturbing enhancement parameters
     // must not change the kept set.
    GadaModel model(scenario.hierarchy, scenario.mask,
                    small_model_config(scfg, false),
                    derive_seed(seed, "inv-scf"));
    SmallBatches b = small_batches(scenario);
    // Pick the threshold strictly between the batch's lowest and highest
    // backbone confidence so the kept set is a proper nonempty subset.
    std::vector<double> conf;
    for (size_t i = 0; i < b.full_b.size(); ++i) {
      Predictions p = model.forward_all(*b.full_b.inputs[i], Mode::eval);
      conf.push_back(p.p1.values[b.full_b.labels[i]]);
    }
    std::sort(conf.begin(), conf.end());
    const double gamma = 0.5 * (conf.front() + conf.back());
    ScfResult before = big_source_loss_scf(b.full_b, model, gamma);
    Rng rng(derive_seed(seed, "inv-scf-noise"));
    for (double& v : model.layers()[0]->params().mlp_in_w1.value.values) {
      v += rng.gaussian();
    }
    ScfResult after = big_source_loss_scf(b.full_b, model, gamma);
    results.push_back(make_result(
        "invariants/scf-gate-asymmetry",
        std::abs(static_cast<double>(before.kept - after.kept)), 0.5,
        "kept " + std::to_string(before.kept) + "/" +
            std::to_string(before.total)));
  }

  {  // Loss decomposition identity across a short training run.
    GadaModel model(scenario.hierarchy, scenario.mask,
                    small_model_config(scfg, false),
                    derive_seed(seed, "inv-train"));
    TrainOptions opts;
    opts.steps = 5;
    opts.batch_size = 4;
    opts.eval_interval = 0;
    opts.seed = derive_seed(seed, "inv-train-loop");
    TrainResult r = train(model, scenario, opts);
    double worst = 0.0;
    for (const StepRecord& rec : r.log) {
      const double recomputed =
          rec.losses.l_shared +
          opts.objective.lambda1 * (rec.losses.l_k1 + rec.losses.l_k2) +
          opts.objective.lambda2 * rec.losses.l_adv;
      worst = std::max(worst, std::abs(rec.losses.total - recomputed));
    }
    results.push_back(
        make_result("invariants/loss-decomposition", worst, 1e-12));
  }

  return results;
}

std::vector<CheckResult> verify_all(std::uint64_t seed) {
  std::vector<CheckResult> out = verify_gradcheck(seed);
  for (CheckResult& r : verify_ppr(seed)) out.push_back(std::move(r));
  for (CheckResult& r : verify_invariants(seed)) out.push_back(std::move(r));
  return out;
}

}  // namespace gada
