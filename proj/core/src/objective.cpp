#include "gada/objective.hpp"

#include <cmath>
#include <string>

namespace gada {

namespace {

constexpr double kProbClamp = 1e-7;

void check_labels(const Batch& batch, Index class_count, const char* who) {
  require(!batch.inputs.empty(), std::string(who) + ": empty batch");
  require(batch.labels.size() == batch.inputs.size(),
          std::string(who) + ": " + std::to_string(batch.inputs.size()) +
              " inputs vs " + std::to_string(batch.labels.size()) + " labels");
  for (Index y : batch.labels) {
    require(y >= 0 && y < class_count,
            std::string(who) + ": label " + std::to_string(y) +
                " outside 0.." + std::to_string(class_count - 1));
  }
}

/// -log clamp(probs[label]) as a single-element node.
Var neg_log_at(Graph& g, Var probs, Index label) {
  Var p = g.clamp(g.gather(probs, label), kProbClamp, 1.0 - kProbClamp);
  return g.scale(g.log(p), -1.0);
}

Var mean_terms(Graph& g, const std::vector<Var>& terms) {
  return g.mean(g.stack_scalars(terms));
}

double scalar(const Graph& g, Var v) { return g.value(v).values[0]; }

void check_finite(double v, const char* term) {
  require(std::isfinite(v),
          std::string("loss term ") + term + " is not finite");
}

}  // namespace

LossTerms build_loss_terms(Graph& g, const Batch& shared_batch,
                           const Batch& full_batch, const Batch& target_batch,
                           GadaModel& model, Mode mode,
                           const ObjectiveConfig& cfg, double grl_eta,
                           bool reversal) {
  const double gamma = cfg.gamma;
  const double lambda3 = cfg.lambda3;
  const Index k = model.class_count();
  check_labels(shared_batch, k, "shared_loss");
  check_labels(full_batch, k, "big_source_loss");
  require(!target_batch.inputs.empty(), "mdd_discrepancy: empty target batch");
  const Tensor& mask = model.mask();
  for (Index y : shared_batch.labels) {
    require(mask.values[y] == 1.0,
            "shared_loss: label " + std::to_string(y) +
                " is not a shared class");
  }

  std::vector<const Tensor*> all;
  all.reserve(shared_batch.inputs.size() + full_batch.inputs.size() +
              target_batch.inputs.size());
  for (const Tensor* t : shared_batch.inputs) all.push_back(t);
  for (const Tensor* t : full_batch.inputs) all.push_back(t);
  for (const Tensor* t : target_batch.inputs) all.push_back(t);
  std::vector<SampleOut> outs =
      model.forward_batch(g, all, mode, grl_eta, reversal);

  const Index ns = shared_batch.size();
  const Index nf = full_batch.size();
  const Index nt = target_batch.size();

  LossTerms t;
  std::vector<Var> shared_terms, k1_terms, k2_terms, adv_s, adv_t;
  for (Index i = 0; i < ns; ++i) {
    shared_terms.push_back(
        neg_log_at(g, outs[i].p1_pp, shared_batch.labels[i]));
  }
  t.l_shared = mean_terms(g, shared_terms);

  for (Index i = 0; i < nf; ++i) {
    const SampleOut& o = outs[ns + i];
    const Index y = full_batch.labels[i];
    k1_terms.push_back(neg_log_at(g, o.p1, y));
    // The gate reads the backbone confidence as data; the kept set is
    // therefore invariant to the enhancement parameters.
    const bool nonshared = mask.values[y] == 0.0;
    const bool kept = g.value(o.p1).values[y] > gamma;
    t.scf_total += 1;
    t.scf_total_nonshared += nonshared ? 1 : 0;
    if (kept) {
      t.scf_kept += 1;
      t.scf_kept_nonshared += nonshared ? 1 : 0;
      k2_terms.push_back(neg_log_at(g, o.p1_plus, y));
    }
  }
  t.l_k1 = mean_terms(g, k1_terms);
  t.l_k2 = k2_terms.empty() ? g.input(Tensor(Shape{1}))
                            : mean_terms(g, k2_terms);

  // Pseudo-labels h1 are constants; only p2 carries gradient here. The
  // source expectation runs over the full-source batch: that is the batch
  // drawn from the source domain proper, and its rich classes keep the
  // auxiliary head anchored.
  for (Index i = 0; i < nf; ++i) {
    const SampleOut& o = outs[ns + i];
    Var p = g.clamp(g.gather(o.p2_pp, o.h1), kProbClamp, 1.0 - kProbClamp);
    adv_s.push_back(g.log(p));
  }
  for (Index i = 0; i < nt; ++i) {
    const SampleOut& o = outs[ns + nf + i];
    Var p = g.clamp(g.gather(o.p2_pp, o.h1), kProbClamp, 1.0 - kProbClamp);
    adv_t.push_back(g.log(g.rsub_const(1.0, p)));
  }
  t.j = g.add(mean_terms(g, adv_t), g.scale(mean_terms(g, adv_s), lambda3));
  return t;
}

Batch make_batch(const std::vector<Tensor>& data,
                 const std::vector<Index>& labels,
                 const std::vector<Index>& pick) {
  require(data.size() == labels.size(),
          "make_batch: data/label count mismatch");
  Batch b;
  for (Index i : pick) {
    require(i >= 0 && i < static_cast<Index>(data.size()),
            "make_batch: pick index out of range");
    b.inputs.push_back(&data[i]);
    b.labels.push_back(labels[i]);
  }
  return b;
}

double grl_eta_at(const ObjectiveConfig& cfg, Index step, Index total_steps) {
  const double warm = cfg.grl_warmup_frac * static_cast<double>(total_steps);
  if (warm <= 0.0) return cfg.grl_eta_max;
  const double ramp = static_cast<double>(step) / warm;
  return cfg.grl_eta_max * std::min(1.0, ramp);
}

double shared_loss(const Batch& batch, GadaModel& model, Mode mode) {
  check_labels(batch, model.class_count(), "shared_loss");
  const Tensor& mask = model.mask();
  for (Index y : batch.labels) {
    require(mask.values[y] == 1.0,
            "shared_loss: label " + std::to_string(y) +
                " is not a shared class");
  }
  Graph g;
  std::vector<SampleOut> outs =
      model.forward_batch(g, batch.inputs, mode, 0.0, false);
  std::vector<Var> terms;
  for (Index i = 0; i < batch.size(); ++i) {
    terms.push_back(neg_log_at(g, outs[i].p1_pp, batch.labels[i]));
  }
  return scalar(g, mean_terms(g, terms));
}

double big_source_loss_backbone(const Batch& batch, GadaModel& model,
                                Mode mode) {
  check_labels(batch, model.class_count(), "big_source_loss");
  Graph g;
  std::vector<SampleOut> outs =
      model.forward_batch(g, batch.inputs, mode, 0.0, false);
  std::vector<Var> terms;
  for (Index i = 0; i < batch.size(); ++i) {
    terms.push_back(neg_log_at(g, outs[i].p1, batch.labels[i]));
  }
  return scalar(g, mean_terms(g, terms));
}

ScfResult big_source_loss_scf(const Batch& batch, GadaModel& model,
                              double gamma, Mode mode) {
  check_labels(batch, model.class_count(), "big_source_loss");
  require(gamma >= 0.0 && gamma <= 1.0, "scf: gamma must be in [0, 1]");
  Graph g;
  std::vector<SampleOut> outs =
      model.forward_batch(g, batch.inputs, mode, 0.0, false);
  ScfResult r;
  std::vector<Var> terms;
  for (Index i = 0; i < batch.size(); ++i) {
    const Index y = batch.labels[i];
    r.total += 1;
    if (g.value(outs[i].p1).values[y] > gamma) {
      r.kept += 1;
      terms.push_back(neg_log_at(g, outs[i].p1_plus, y));
    }
  }
  r.loss = terms.empty() ? 0.0 : scalar(g, mean_terms(g, terms));
  return r;
}

double mdd_discrepancy(const Batch& source_batch, const Batch& target_batch,
                       GadaModel& model, double lambda3, Mode mode) {
  require(!source_batch.inputs.empty(), "mdd_discrepancy: empty source batch");
  require(!target_batch.inputs.empty(), "mdd_discrepancy: empty target batch");
  Graph g;
  std::vector<const Tensor*> all = source_batch.inputs;
  for (const Tensor* t : target_batch.inputs) all.push_back(t);
  std::vector<SampleOut> outs =
      model.forward_batch(g, all, mode, 0.0, false);
  const Index ns = source_batch.size();
  std::vector<Var> s_terms, t_terms;
  for (Index i = 0; i < ns; ++i) {
    Var p = g.clamp(g.gather(outs[i].p2_pp, outs[i].h1), kProbClamp,
                    1.0 - kProbClamp);
    s_terms.push_back(g.log(p));
  }
  for (Index i = ns; i < static_cast<Index>(outs.size()); ++i) {
    Var p = g.clamp(g.gather(outs[i].p2_pp, outs[i].h1), kProbClamp,
                    1.0 - kProbClamp);
    t_terms.push_back(g.log(g.rsub_const(1.0, p)));
  }
  Var j = g.add(mean_terms(g, t_terms),
                g.scale(mean_terms(g, s_terms), lambda3));
  return scalar(g, j);
}

LossBreakdown total_loss(const Batch& shared_batch, const Batch& full_batch,
                         const Batch& target_batch, GadaModel& model,
                         SgdOptimizer& optimizer, const ObjectiveConfig& cfg,
                         double grl_eta) {
  require(cfg.lambda1 >= 0.0 && cfg.lambda2 >= 0.0 && cfg.lambda3 >= 0.0,
          "total_loss: lambdas must be >= 0");
  Graph g;
  LossTerms t = build_loss_terms(g, shared_batch, full_batch, target_batch,
                                 model, Mode::train, cfg, grl_eta, true);

  LossBreakdown bd;
  bd.l_shared = scalar(g, t.l_shared);
  bd.l_k1 = scalar(g, t.l_k1);
  bd.l_k2 = scalar(g, t.l_k2);
  bd.l_adv = scalar(g, t.j);
  check_finite(bd.l_shared, "l_shared");
  check_finite(bd.l_k1, "l_k1");
  check_finite(bd.l_k2, "l_k2");
  check_finite(bd.l_adv, "l_adv");
  bd.total = bd.l_shared + cfg.lambda1 * (bd.l_k1 + bd.l_k2) +
             cfg.lambda2 * bd.l_adv;
  bd.scf_kept = t.scf_kept;
  bd.scf_total = t.scf_total;
  bd.scf_kept_nonshared = t.scf_kept_nonshared;
  bd.scf_total_nonshared = t.scf_total_nonshared;

  // Optimizer root: the discrepancy enters negated so the auxiliary head
  // ascends J while the reversal hands the features a descent direction.
  Var root = g.add(t.l_shared,
                   g.add(g.scale(g.add(t.l_k1, t.l_k2), cfg.lambda1),
                         g.scale(t.j, -cfg.lambda2)));
  optimizer.zero_grad();
  g.backward(root);
  optimizer.step();
  return bd;
}

}  // namespace gada
