#include "gada/train.hpp"

#include "gada/format.hpp"
#include "gada/rng.hpp"

namespace gada {

namespace {

std::vector<Index> draw(Rng& rng, const std::vector<Index>& pool,
                        Index count) {
  std::vector<Index> out(count);
  for (Index i = 0; i < count; ++i) {
    out[i] = pool[rng.uniform_int(static_cast<Index>(pool.size()))];
  }
  return out;
}

}  // namespace

std::string step_record_json(const StepRecord& rec) {
  std::string s = "{\"step\":" + std::to_string(rec.step);
  s += ",\"l_shared\":" + fmt_g17(rec.losses.l_shared);
  s += ",\"l_k1\":" + fmt_g17(rec.losses.l_k1);
  s += ",\"l_k2\":" + fmt_g17(rec.losses.l_k2);
  s += ",\"l_adv\":" + fmt_g17(rec.losses.l_adv);
  s += ",\"total\":" + fmt_g17(rec.losses.total);
  s += ",\"scf_keep_rate\":" + fmt_g17(rec.scf_keep_rate);
  if (rec.has_eval) {
    s += ",\"target_acc\":" + fmt_g17(rec.target_acc);
    s += ",\"target_macro_f1\":" + fmt_g17(rec.target_macro_f1);
  }
  s += "}";
  return s;
}

TrainResult train(GadaModel& model, const Scenario& scenario,
                  const TrainOptions& opts) {
  require(opts.steps >= 0, "train: steps must be >= 0");
  require(opts.batch_size >= 1, "train: batch_size must be >= 1");
  require(opts.eval_interval >= 0, "train: eval_interval must be >= 0");

  std::vector<Index> shared_pool, full_pool, target_pool;
  for (size_t i = 0; i < scenario.source_inputs.size(); ++i) {
    full_pool.push_back(static_cast<Index>(i));
    if (scenario.source_is_shared[i]) {
      shared_pool.push_back(static_cast<Index>(i));
    }
  }
  for (size_t i = 0; i < scenario.target_inputs.size(); ++i) {
    target_pool.push_back(static_cast<Index>(i));
  }
  require(!shared_pool.empty(), "train: scenario has no shared source data");
  require(!target_pool.empty(), "train: scenario has no target data");

  SgdOptimizer optimizer(model.trainable(), opts.opt);
  Rng rng(derive_seed(opts.seed, "train"));
  TrainResult result;

  for (Index step = 0; step < opts.steps; ++step) {
    Batch shared_b = make_batch(scenario.source_inputs,
                                scenario.source_labels,
                                draw(rng, shared_pool, opts.batch_size));
    Batch full_b = make_batch(scenario.source_inputs, scenario.source_labels,
                              draw(rng, full_pool, opts.batch_size));
    Batch target_b = make_batch(scenario.target_inputs,
                                scenario.target_labels,
                                draw(rng, target_pool, opts.batch_size));
    const double eta = grl_eta_at(opts.objective, step, opts.steps);

    StepRecord rec;
    rec.step = step;
    try {
      rec.losses = total_loss(shared_b, full_b, target_b, model, optimizer,
                              opts.objective, eta);
    } catch (const Error& e) {
      fail("train: step " + std::to_string(step) + ": " + e.what());
    }
    rec.scf_keep_rate =
        rec.losses.scf_total_nonshared > 0
            ? static_cast<double>(rec.losses.scf_kept_nonshared) /
                  static_cast<double>(rec.losses.scf_total_nonshared)
            : 0.0;
    if (opts.eval_interval > 0 && (step + 1) % opts.eval_interval == 0) {
      EvalReport r = evaluate(model, scenario);
      rec.has_eval = true;
      rec.target_acc = r.accuracy;
      rec.target_macro_f1 = r.macro_f1;
    }
    result.log.push_back(rec);
  }

  result.final_report = evaluate(model, scenario);
  return result;
}

}  // namespace gada
