#pragma once

#include <vector>

#include "gada/model.hpp"
#include "gada/optim.hpp"

namespace gada {

/// A labeled mini-batch referencing caller-owned sample grids. Target
/// batches carry hidden labels that the losses never read.
struct Batch {
  std::vector<const Tensor*> inputs;
  std::vector<Index> labels;

  Index size() const { return static_cast<Index>(inputs.size()); }
};

/// Convenience view builder: batch of data[pick[i]] for each pick entry.
Batch make_batch(const std::vector<Tensor>& data,
                 const std::vector<Index>& labels,
                 const std::vector<Index>& pick);

struct ObjectiveConfig {
  double lambda1 = 2.0;  // weight of the big-source losses
  double lambda2 = 3.2;  // weight of the adversarial term
  double lambda3 = 4.0;  // source-side margin factor inside the discrepancy
  double gamma = 0.7;    // confidence filter threshold
  double grl_eta_max = 1.0;
  double grl_warmup_frac = 0.1;  // fraction of total steps to ramp eta over
};

/// Reversal strength at a step: linear ramp from 0 to eta_max across the
/// first warmup fraction of training, eta_max afterwards.
double grl_eta_at(const ObjectiveConfig& cfg, Index step, Index total_steps);

struct LossBreakdown {
  double l_shared = 0.0;
  double l_k1 = 0.0;  // backbone cross-entropy over all K classes
  double l_k2 = 0.0;  // confidence-filtered enhanced-feature loss
  double l_adv = 0.0; // discrepancy J (the value the auxiliary head ascends)
  double total = 0.0; // l_shared + lambda1 (l_k1 + l_k2) + lambda2 l_adv
  Index scf_kept = 0;
  Index scf_total = 0;
  // The filter's behavior is tracked where it matters: on non-shared samples.
  Index scf_kept_nonshared = 0;
  Index scf_total_nonshared = 0;
};

/// Mean cross-entropy -log p1_pp[y] over a batch of shared-class samples.
/// Errors if any label is non-shared.
double shared_loss(const Batch& batch, GadaModel& model,
                   Mode mode = Mode::eval);

/// Mean -log p1[y] over a full-source batch; no mask, no enhancement.
double big_source_loss_backbone(const Batch& batch, GadaModel& model,
                                Mode mode = Mode::eval);

struct ScfResult {
  double loss = 0.0;
  Index kept = 0;
  Index total = 0;
};

/// Confidence-filtered loss: mean -log p1_plus[y] over the samples whose
/// backbone confidence p1[y] exceeds gamma; 0 when none qualify. The gate
/// reads the backbone prediction, the loss reads the enhanced one.
ScfResult big_source_loss_scf(const Batch& batch, GadaModel& model,
                              double gamma, Mode mode = Mode::eval);

/// Discrepancy J = E_target[log(1 - p2_pp[h1])] + lambda3 E_source[log
/// p2_pp[h1]], probabilities clamped to [1e-7, 1 - 1e-7] before the logs.
/// The auxiliary head maximizes J; features minimize it via the reversal.
double mdd_discrepancy(const Batch& source_batch, const Batch& target_batch,
                       GadaModel& model, double lambda3,
                       Mode mode = Mode::eval);

/// The four loss terms as live graph nodes, for callers that drive their
/// own backward pass (the train step, gradient checks, reversal tests).
struct LossTerms {
  Var l_shared, l_k1, l_k2, j;
  Index scf_kept = 0, scf_total = 0;
  Index scf_kept_nonshared = 0, scf_total_nonshared = 0;
};

/// Builds all four terms on one graph; the three batches are concatenated
/// into a single forward pass, so every batch-norm site sees one combined
/// batch. reversal=false omits the gradient-reversal node (identical
/// values, plain gradients end to end).
LossTerms build_loss_terms(Graph& g, const Batch& shared_batch,
                           const Batch& full_batch, const Batch& target_batch,
                           GadaModel& model, Mode mode,
                           const ObjectiveConfig& cfg, double grl_eta,
                           bool reversal);

/// One full training step: builds every loss term on one graph,
/// backpropagates the optimizer root l_shared + lambda1 (l_k1 + l_k2) -
/// lambda2 J, and applies one optimizer step. The reported total re-adds J
/// with +lambda2, matching the recorded decomposition. Throws with the
/// offending term's name if any term is non-finite (before any parameter
/// is touched).
LossBreakdown total_loss(const Batch& shared_batch, const Batch& full_batch,
                         const Batch& target_batch, GadaModel& model,
                         SgdOptimizer& optimizer, const ObjectiveConfig& cfg,
                         double grl_eta);

}  // namespace gada
