#pragma once

#include <string>
#include <vector>

#include "gada/metrics.hpp"
#include "gada/objective.hpp"

namespace gada {

struct TrainOptions {
  Index steps = 2000;
  Index batch_size = 16;    // per role: shared, full-source, target
  Index eval_interval = 200;  // 0 disables periodic target evaluation
  OptConfig opt;
  ObjectiveConfig objective;
  std::uint64_t seed = 0;  // batch-sampling stream
};

struct StepRecord {
  Index step = 0;  // 0-based; the reversal warm-up indexes the same way
  LossBreakdown losses;
  /// SCF keep rate among the non-shared samples of the full-source batch;
  /// 0 when the batch drew none.
  double scf_keep_rate = 0.0;
  bool has_eval = false;
  double target_acc = 0.0;
  double target_macro_f1 = 0.0;
};

/// One NDJSON log line (no trailing newline). Doubles are emitted with 17
/// significant digits so parsing them back is exact.
std::string step_record_json(const StepRecord& rec);

struct TrainResult {
  std::vector<StepRecord> log;
  EvalReport final_report;
};

/// The full training loop. Each step draws a shared-source, a full-source,
/// and a target batch (uniformly, with replacement) and applies one
/// total_loss step; the target set is evaluated every eval_interval steps
/// and once more after the last step. Deterministic given (model seed,
/// scenario, options). A non-finite loss aborts with the step and term.
TrainResult train(GadaModel& model, const Scenario& scenario,
                  const TrainOptions& opts);

}  // namespace gada
