#include "gada/model.hpp"

#include <cmath>
#include <map>

#include "gada/rng.hpp"

namespace gada {

namespace {

Tensor validate_mask(const Tensor& mask, Index class_count) {
  require(mask.shape.size() == 1 && mask.shape[0] == class_count,
          "model: mask must be rank-1 of length K=" +
              std::to_string(class_count) + ", got " + shape_str(mask.shape));
  for (double v : mask.values) {
    require(v == 0.0 || v == 1.0, "model: mask entries must be 0 or 1");
  }
  return mask;
}

Tensor init_weight(Rng& rng, Index fan_in, Shape shape) {
  return rng.gaussian_tensor(std::move(shape),
                             1.0 / std::sqrt(static_cast<double>(fan_in)));
}

}  // namespace

GadaModel::Head::Head(const std::string& prefix, Index in_dim, Index out_dim,
                      Rng& rng)
    : w(prefix + ".w", init_weight(rng, in_dim, Shape{in_dim, out_dim})),
      b(prefix + ".b", Tensor(Shape{out_dim}), false) {}

GadaModel::GadaModel(const HierarchyGraph& graph, const Tensor& mask,
                     const ModelConfig& cfg, std::uint64_t seed)
    : cfg_(cfg),
      class_count_(graph.leaf_count()),
      mask_(validate_mask(mask, class_count_)) {
  require(cfg_.input_dim > 0 && cfg_.height > 0 && cfg_.width > 0,
          "model: grid dims must be positive");
  require(cfg_.hgr.feature_dim > 0, "model: feature_dim must be positive");
  require(cfg_.hgr_layers >= 0, "model: hgr_layers must be >= 0");
  for (double v : mask_.values) shared_count_ += (v == 1.0) ? 1 : 0;
  require(shared_count_ >= 1, "model: mask selects no shared class");

  // One stream, fixed draw order: backbone, enhancement layers, f1, f2.
  Rng rng(derive_seed(seed, "model"));
  const Index dl = cfg_.hgr.feature_dim;
  backbone_w = Parameter("backbone.w",
                         init_weight(rng, cfg_.input_dim,
                                     Shape{cfg_.input_dim, dl}));
  backbone_b = Parameter("backbone.b", Tensor(Shape{dl}), false);
  for (Index l = 0; l < cfg_.hgr_layers; ++l) {
    layers_.push_back(std::make_unique<HgrLayer>(
        graph, cfg_.hgr, rng, "hgr" + std::to_string(l) + "."));
  }
  f1_ = Head("f1", dl, class_count_, rng);
  f2_ = Head("f2", dl, class_count_, rng);
}

Var GadaModel::head_probs(Graph& g, Var pooled, Head& head) {
  Var logits = g.add_rowvec(g.matmul(pooled, g.leaf(head.w)), g.leaf(head.b));
  return g.softmax(g.reshape(logits, Shape{class_count_}), 0);
}

std::vector<SampleOut> GadaModel::forward_batch(
    Graph& g, const std::vector<const Tensor*>& inputs, Mode mode,
    double grl_eta, bool reversal) {
  const Index batch = static_cast<Index>(inputs.size());
  require(batch > 0, "model: empty batch");
  const Index locs = cfg_.height * cfg_.width;
  const Index din = cfg_.input_dim;

  // All grids stacked into one [(B locs), D_in] matrix; one backbone matmul.
  Tensor stacked(Shape{batch * locs, din});
  for (Index i = 0; i < batch; ++i) {
    const Tensor& t = *inputs[i];
    require(shape_numel(t.shape) == locs * din,
            "model: input " + std::to_string(i) + " has shape " +
                shape_str(t.shape) + ", want " + std::to_string(locs) + "x" +
                std::to_string(din));
    std::copy(t.values.begin(), t.values.end(),
              stacked.values.begin() + i * locs * din);
  }
  Var feat_all = g.add_rowvec(g.matmul(g.input(std::move(stacked)),
                                       g.leaf(backbone_w)),
                              g.leaf(backbone_b));

  std::vector<Var> feats(batch);
  std::vector<SampleOut> out(batch);
  for (Index i = 0; i < batch; ++i) {
    feats[i] = g.slice_rows(feat_all, i * locs, locs);
    out[i].p1 = head_probs(g, g.mean_rows(feats[i]), f1_);
  }

  std::vector<Var> enhanced = feats;
  if (cfg_.use_hgr) {
    for (auto& layer : layers_) {
      if (layer->config().detach_attention) {
        std::vector<Tensor> p1_data(batch);
        for (Index i = 0; i < batch; ++i) p1_data[i] = g.value(out[i].p1);
        enhanced = layer->forward(g, enhanced, p1_data, mode);
      } else {
        std::vector<Var> p1_vars(batch);
        for (Index i = 0; i < batch; ++i) p1_vars[i] = out[i].p1;
        enhanced = layer->forward_attached(g, enhanced, p1_vars, mode);
      }
    }
  }

  Var mask_node = g.input(mask_);
  const bool bypass = !cfg_.use_hgr || layers_.empty();
  for (Index i = 0; i < batch; ++i) {
    out[i].pooled = g.mean_rows(enhanced[i]);
    // With enhancement bypassed p1_plus is literally the p1 path.
    out[i].p1_plus = bypass ? out[i].p1 : head_probs(g, out[i].pooled, f1_);
    out[i].p1_pp = g.mul(out[i].p1_plus, mask_node);
    out[i].h1 = argmax_masked(g.value(out[i].p1_pp), mask_);
    Var adv = reversal ? g.grad_reverse(out[i].pooled, grl_eta)
                       : out[i].pooled;
    out[i].p2_plus = head_probs(g, adv, f2_);
    out[i].p2_pp = g.mul(out[i].p2_plus, mask_node);
    out[i].h2 = argmax_masked(g.value(out[i].p2_pp), mask_);
  }
  return out;
}

Predictions GadaModel::forward_all(const Tensor& input, Mode mode) {
  Graph g;
  std::vector<SampleOut> outs = forward_batch(g, {&input}, mode, 0.0, false);
  const SampleOut& s = outs[0];
  return Predictions{g.value(s.p1),      g.value(s.p1_plus), g.value(s.p1_pp),
                     g.value(s.p2_plus), g.value(s.p2_pp),   s.h1, s.h2};
}

Tensor GadaModel::pooled_enhanced(const Tensor& input, Mode mode) {
  Graph g;
  std::vector<SampleOut> outs = forward_batch(g, {&input}, mode, 0.0, false);
  Tensor flat(Shape{cfg_.hgr.feature_dim});
  flat.values = g.value(outs[0].pooled).values;
  return flat;
}

std::vector<Parameter*> GadaModel::trainable() {
  std::vector<Parameter*> out{&backbone_w, &backbone_b};
  for (auto& layer : layers_) {
    for (Parameter* p : layer->params().trainable()) out.push_back(p);
  }
  out.push_back(&f1_.w);
  out.push_back(&f1_.b);
  out.push_back(&f2_.w);
  out.push_back(&f2_.b);
  return out;
}

std::vector<std::pair<std::string, Tensor*>> GadaModel::state() {
  std::vector<std::pair<std::string, Tensor*>> out;
  out.emplace_back(backbone_w.name, &backbone_w.value);
  out.emplace_back(backbone_b.name, &backbone_b.value);
  for (auto& layer : layers_) {
    for (auto& entry : layer->params().state()) out.push_back(entry);
  }
  out.emplace_back(f1_.w.name, &f1_.w.value);
  out.emplace_back(f1_.b.name, &f1_.b.value);
  out.emplace_back(f2_.w.name, &f2_.w.value);
  out.emplace_back(f2_.b.name, &f2_.b.value);
  return out;
}

void GadaModel::load_state(
    const std::vector<std::pair<std::string, Tensor>>& entries) {
  std::map<std::string, const Tensor*> by_name;
  for (const auto& [name, tensor] : entries) {
    require(by_name.emplace(name, &tensor).second,
            "model: duplicate checkpoint entry '" + name + "'");
  }
  auto slots = state();
  require(by_name.size() == slots.size(),
          "model: checkpoint has " + std::to_string(by_name.size()) +
              " tensors, model expects " + std::to_string(slots.size()));
  for (auto& [name, slot] : slots) {
    auto it = by_name.find(name);
    require(it != by_name.end(), "model: checkpoint missing '" + name + "'");
    require(it->second->shape == slot->shape,
            "model: checkpoint '" + name + "' has shape " +
                shape_str(it->second->shape) + ", model expects " +
                shape_str(slot->shape));
    *slot = *it->second;
  }
}

}  // namespace gada
