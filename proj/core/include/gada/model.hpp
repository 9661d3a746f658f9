#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "gada/autodiff.hpp"
#include "gada/hgr.hpp"
#include "gada/hierarchy.hpp"

namespace gada {

struct ModelConfig {
  Index input_dim = 32;  // channels of the raw feature grid
  Index height = 4;
  Index width = 4;
  HgrConfig hgr;       // hgr.feature_dim is the backbone output width
  Index hgr_layers = 1;
  /// Ablation switch: when false the enhancement layers are skipped and the
  /// enhanced-feature predictions coincide with the backbone ones.
  bool use_hgr = true;
};

/// Per-sample network outputs. The probability nodes are rank-1 [K]; h1 and
/// h2 are masked argmax indices and always land in the shared-class set.
struct SampleOut {
  Var p1;       // backbone feature -> f1
  Var p1_plus;  // enhanced feature -> f1
  Var p1_pp;    // p1_plus masked
  Var p2_plus;  // enhanced feature -> reversal -> f2
  Var p2_pp;    // p2_plus masked
  Var pooled;   // enhanced pooled feature [1, D^l], pre-reversal
  Index h1 = -1;
  Index h2 = -1;
};

/// Value-level snapshot of SampleOut for callers without a Graph.
struct Predictions {
  Tensor p1, p1_plus, p1_pp, p2_plus, p2_pp;
  Index h1 = -1;
  Index h2 = -1;
};

/// The full network: per-location affine backbone, optional feature
/// enhancement layers over the class hierarchy, two independent classifier
/// heads f1/f2, and a 0/1 shared-class mask applied to both heads' softmax
/// outputs. Parameters are owned here; forwards build nodes on a caller
/// Graph so batches from several data roles can share one tape (and one set
/// of batch-norm statistics).
class GadaModel {
 public:
  /// mask is a length-K 0/1 vector over class ids, 1 at shared classes.
  GadaModel(const HierarchyGraph& graph, const Tensor& mask,
            const ModelConfig& cfg, std::uint64_t seed);
  GadaModel(const GadaModel&) = delete;
  GadaModel& operator=(const GadaModel&) = delete;

  /// Batched forward. Inputs are raw grids, [H, W, D_in] or [(H W), D_in].
  /// All samples share one backbone matmul and one batch-norm pass per BN
  /// site. `grl_eta` scales the reversed gradient ahead of f2; `reversal`
  /// false drops the reversal node entirely (plain gradients, used by
  /// finite-difference checks; forward values are identical either way).
  std::vector<SampleOut> forward_batch(Graph& g,
                                       const std::vector<const Tensor*>& inputs,
                                       Mode mode, double grl_eta,
                                       bool reversal = true);

  /// Single-sample forward on a private graph; values only.
  Predictions forward_all(const Tensor& input, Mode mode);

  /// Pooled enhanced feature [D^l] for one sample; the representation that
  /// feeds both heads. Used by embedding dumps.
  Tensor pooled_enhanced(const Tensor& input, Mode mode);

  std::vector<Parameter*> trainable();
  /// Named tensors for checkpointing: parameters plus BN running stats.
  std::vector<std::pair<std::string, Tensor*>> state();
  /// Installs checkpoint tensors by name; every model tensor must be
  /// covered exactly once and shapes must match.
  void load_state(const std::vector<std::pair<std::string, Tensor>>& entries);

  const Tensor& mask() const { return mask_; }
  const ModelConfig& config() const { return cfg_; }
  Index class_count() const { return class_count_; }
  Index shared_count() const { return shared_count_; }
  std::vector<std::unique_ptr<HgrLayer>>& layers() { return layers_; }

 private:
  struct Head {
    Parameter w, b;
    Head() = default;
    Head(const std::string& prefix, Index in_dim, Index out_dim, Rng& rng);
  };

  /// Rank-1 [K] class probabilities from a pooled [1, D^l] feature.
  Var head_probs(Graph& g, Var pooled, Head& head);

  ModelConfig cfg_;
  Index class_count_ = 0;
  Index shared_count_ = 0;
  Tensor mask_;
  Parameter backbone_w, backbone_b;
  std::vector<std::unique_ptr<HgrLayer>> layers_;
  Head f1_, f2_;
};

}  // namespace gada
