#include "gada/metrics.hpp"

#include <algorithm>
#include <fstream>

#include "gada/format.hpp"

namespace gada {

Index ConfusionMatrix::total() const {
  Index sum = 0;
  for (Index c : counts) sum += c;
  return sum;
}

Index ConfusionMatrix::trace() const {
  Index sum = 0;
  for (Index i = 0; i < dim(); ++i) sum += at(i, i);
  return sum;
}

Index ConfusionMatrix::slot_of(Index class_id) const {
  auto it = std::lower_bound(classes.begin(), classes.end(), class_id);
  if (it == classes.end() || *it != class_id) return -1;
  return static_cast<Index>(it - classes.begin());
}

ConfusionMatrix confusion(GadaModel& model, const std::vector<Tensor>& inputs,
                          const std::vector<Index>& labels,
                          const std::vector<Index>& shared_classes) {
  require(!inputs.empty(), "evaluate: empty evaluation set");
  require(inputs.size() == labels.size(),
          "evaluate: input/label count mismatch");
  ConfusionMatrix cm;
  cm.classes = shared_classes;
  require(std::is_sorted(cm.classes.begin(), cm.classes.end()),
          "evaluate: shared class ids must be ascending");
  cm.counts.assign(cm.classes.size() * cm.classes.size(), 0);
  for (size_t i = 0; i < inputs.size(); ++i) {
    const Index true_slot = cm.slot_of(labels[i]);
    require(true_slot >= 0, "evaluate: label " + std::to_string(labels[i]) +
                                " is not a shared class");
    Predictions pred = model.forward_all(inputs[i], Mode::eval);
    const Index pred_slot = cm.slot_of(pred.h1);
    require(pred_slot >= 0, "evaluate: prediction escaped the shared set");
    cm.at(true_slot, pred_slot) += 1;
  }
  return cm;
}

EvalReport report_from_confusion(const ConfusionMatrix& cm,
                                 const std::vector<Index>& sparse_classes) {
  EvalReport r;
  r.sample_count = cm.total();
  require(r.sample_count > 0, "evaluate: empty confusion matrix");
  r.accuracy = static_cast<double>(cm.trace()) /
               static_cast<double>(r.sample_count);

  const Index k = cm.dim();
  std::vector<bool> sparse_flag(k, false);
  for (Index id : sparse_classes) {
    const Index slot = cm.slot_of(id);
    require(slot >= 0, "evaluate: sparse class " + std::to_string(id) +
                           " is not a shared class");
    sparse_flag[slot] = true;
  }

  double macro_sum = 0.0, sparse_sum = 0.0, nonsparse_sum = 0.0;
  Index present = 0;
  for (Index s = 0; s < k; ++s) {
    ClassScore score;
    score.class_id = cm.classes[s];
    Index tp = cm.at(s, s), row = 0, col = 0;
    for (Index j = 0; j < k; ++j) {
      row += cm.at(s, j);
      col += cm.at(j, s);
    }
    score.support = row;
    score.precision = col > 0 ? static_cast<double>(tp) / col : 0.0;
    score.recall = row > 0 ? static_cast<double>(tp) / row : 0.0;
    const double pr = score.precision + score.recall;
    score.f1 = pr > 0.0 ? 2.0 * score.precision * score.recall / pr : 0.0;
    r.per_class.push_back(score);
    if (score.support > 0) {
      macro_sum += score.f1;
      present += 1;
    }
    (sparse_flag[s] ? sparse_sum : nonsparse_sum) += score.f1;
  }
  r.macro_f1 = present > 0 ? macro_sum / present : 0.0;
  const Index sparse_n = static_cast<Index>(sparse_classes.size());
  r.sparse_f1 = sparse_n > 0 ? sparse_sum / sparse_n : 0.0;
  r.nonsparse_f1 = k > sparse_n ? nonsparse_sum / (k - sparse_n) : 0.0;
  r.sparse_class_count = sparse_n;
  return r;
}

EvalReport evaluate(GadaModel& model, const Scenario& scenario) {
  ConfusionMatrix cm = confusion(model, scenario.target_inputs,
                                 scenario.target_labels,
                                 scenario.shared_classes);
  return report_from_confusion(cm, scenario.sparse_classes);
}

LfoReport leave_five_out(
    const std::function<EvalReport(const Scenario&)>& trainer,
    const ScenarioConfig& family) {
  require(family.shared_count % 5 == 0,
          "leave_five_out: K' = " + std::to_string(family.shared_count) +
              " is not divisible by 5");
  LfoReport out;
  const Index folds = family.shared_count / 5;
  for (Index f = 0; f < folds; ++f) {
    ScenarioConfig cfg = family;
    cfg.sparse_start = 5 * f;
    cfg.sparse_count = 5;
    EvalReport r = trainer(sample_scenario(cfg));
    out.mean_sparse_f1 += r.sparse_f1;
    out.mean_nonsparse_f1 += r.nonsparse_f1;
    out.mean_accuracy += r.accuracy;
    out.mean_macro_f1 += r.macro_f1;
    out.folds.push_back(std::move(r));
  }
  out.mean_sparse_f1 /= folds;
  out.mean_nonsparse_f1 /= folds;
  out.mean_accuracy /= folds;
  out.mean_macro_f1 /= folds;
  return out;
}

void dump_embeddings(GadaModel& model, const Scenario& scenario,
                     const std::string& path) {
  std::ofstream os(path);
  require(os.good(), "dump_embeddings: cannot write " + path);
  const Index d = model.config().hgr.feature_dim;
  for (Index e = 0; e < d; ++e) os << "f" << e << ",";
  os << "label,domain\n";
  auto write_rows = [&](const std::vector<Tensor>& inputs,
                        const std::vector<Index>& labels, int domain) {
    for (size_t i = 0; i < inputs.size(); ++i) {
      Tensor feat = model.pooled_enhanced(inputs[i], Mode::eval);
      for (Index e = 0; e < d; ++e) os << fmt_g17(feat.values[e]) << ",";
      os << labels[i] << "," << domain << "\n";
    }
  };
  write_rows(scenario.source_inputs, scenario.source_labels, 0);
  write_rows(scenario.target_inputs, scenario.target_labels, 1);
  require(os.good(), "dump_embeddings: write failed for " + path);
}

std::string report_json(const EvalReport& r) {
  std::string s = "{\"sample_count\":" + std::to_string(r.sample_count);
  s += ",\"accuracy\":" + fmt_g17(r.accuracy);
  s += ",\"macro_f1\":" + fmt_g17(r.macro_f1);
  s += ",\"sparse_f1\":" + fmt_g17(r.sparse_f1);
  s += ",\"nonsparse_f1\":" + fmt_g17(r.nonsparse_f1);
  s += ",\"per_class\":[";
  for (size_t i = 0; i < r.per_class.size(); ++i) {
    const ClassScore& c = r.per_class[i];
    if (i) s += ",";
    s += "{\"class\":" + std::to_string(c.class_id);
    s += ",\"support\":" + std::to_string(c.support);
    s += ",\"precision\":" + fmt_g17(c.precision);
    s += ",\"recall\":" + fmt_g17(c.recall);
    s += ",\"f1\":" + fmt_g17(c.f1) + "}";
  }
  s += "]}";
  return s;
}

}  // namespace gada
