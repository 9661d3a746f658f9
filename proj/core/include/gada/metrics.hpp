#pragma once

#include <functional>
#include <string>
#include <vector>

#include "gada/model.hpp"
#include "gada/synth.hpp"

namespace gada {

/// Counts over the shared classes only; rows are true classes, columns
/// predictions, both indexed by slot in `classes` (ascending class ids).
struct ConfusionMatrix {
  std::vector<Index> classes;
  std::vector<Index> counts;  // row-major, classes.size()^2

  Index dim() const { return static_cast<Index>(classes.size()); }
  Index& at(Index true_slot, Index pred_slot) {
    return counts[true_slot * dim() + pred_slot];
  }
  Index at(Index true_slot, Index pred_slot) const {
    return counts[true_slot * dim() + pred_slot];
  }
  Index total() const;
  Index trace() const;
  /// Slot of a class id, -1 when the id is not a shared class.
  Index slot_of(Index class_id) const;
};

struct ClassScore {
  Index class_id = -1;
  Index support = 0;  // true-label count in the evaluated set
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;  // 0 by convention when precision + recall == 0
};

struct EvalReport {
  Index sample_count = 0;
  double accuracy = 0.0;
  std::vector<ClassScore> per_class;  // one entry per shared class
  /// Unweighted mean F1 over the shared classes present in the evaluated
  /// set (support > 0); absent classes are excluded from the average.
  double macro_f1 = 0.0;
  /// Means over the scenario's designated sparse / non-sparse shared sets
  /// (f1 = 0 convention applies if a designated class is absent).
  double sparse_f1 = 0.0;
  double nonsparse_f1 = 0.0;
  Index sparse_class_count = 0;  // designated sparse classes in the scenario
};

/// Predicts each input with the masked argmax h1 and scores against the
/// hidden labels. Labels must be shared classes.
ConfusionMatrix confusion(GadaModel& model, const std::vector<Tensor>& inputs,
                          const std::vector<Index>& labels,
                          const std::vector<Index>& shared_classes);

EvalReport report_from_confusion(const ConfusionMatrix& cm,
                                 const std::vector<Index>& sparse_classes);

/// Full evaluation of a model on a scenario's target domain.
EvalReport evaluate(GadaModel& model, const Scenario& scenario);

/// Leave-five-out protocol: fold i marks shared slots 5i..5i+4 sparse,
/// regenerates the scenario, and hands it to `trainer` (train a fresh
/// model, return its target evaluation). Reports fold means.
struct LfoReport {
  std::vector<EvalReport> folds;
  double mean_sparse_f1 = 0.0;
  double mean_nonsparse_f1 = 0.0;
  double mean_accuracy = 0.0;
  double mean_macro_f1 = 0.0;
};

LfoReport leave_five_out(
    const std::function<EvalReport(const Scenario&)>& trainer,
    const ScenarioConfig& family);

/// Pooled enhanced features of every source then target sample as CSV:
/// header f0..f{D-1},label,domain with domain 0 = source, 1 = target.
void dump_embeddings(GadaModel& model, const Scenario& scenario,
                     const std::string& path);

/// Report as a JSON object (17-significant-digit doubles, one line).
std::string report_json(const EvalReport& r);

}  // namespace gada
