#pragma once

#include <string>
#include <utility>
#include <vector>

#include "gada/autodiff.hpp"
#include "gada/hierarchy.hpp"
#include "gada/rng.hpp"

namespace gada {

struct HgrConfig {
  Index feature_dim = 32;   // D^l, channel width of the local feature grid
  Index semantic_dim = 16;  // D^S, node embedding width
  Index hidden_dim = 0;     // MLP hidden width; 0 -> max(D^l, 2 D^S)
  PprConfig ppr;
  /// Attention personalization treated as data (no gradient through the
  /// class predictions). When false, the PPR power iteration is unrolled
  /// in-graph for a fixed ppr.max_iterations steps.
  bool detach_attention = true;

  Index resolved_hidden() const {
    return hidden_dim > 0 ? hidden_dim
                          : std::max(feature_dim, 2 * semantic_dim);
  }
};

/// Trainable state of one feature-enhancement layer.
struct HgrParams {
  Parameter node_embed;            // S  [N, D^S], no weight decay
  Parameter mlp_in_w1, mlp_in_b1;  // D^l -> hidden
  Parameter mlp_in_w2, mlp_in_b2;  // hidden -> D^S
  Parameter attn_w;                // W^a [N, D^S]
  Parameter bn_nodes_gamma, bn_nodes_beta;
  BatchNormStats bn_nodes_stats;
  Parameter graph_w;  // W^g [2 D^S, D^S]
  Parameter bn_reason_gamma, bn_reason_beta;
  BatchNormStats bn_reason_stats;
  Parameter mlp_out_w1, mlp_out_b1;  // D^S -> hidden
  Parameter mlp_out_w2, mlp_out_b2;  // hidden -> D^l

  HgrParams(const HgrConfig& cfg, Index node_count, Rng& rng,
            const std::string& prefix);

  std::vector<Parameter*> trainable();
  /// Named tensors for checkpointing: parameters plus BN running stats.
  std::vector<std::pair<std::string, Tensor*>> state();
};

/// One HGR layer: projects local features into the semantic space,
/// aggregates them onto taxonomy nodes re-weighted by prediction-personalized
/// PageRank, reasons over the graph, and writes the result back onto the
/// local features through attention with a residual connection.
class HgrLayer {
 public:
  HgrLayer(const HierarchyGraph& graph, const HgrConfig& cfg, Rng& rng,
           const std::string& prefix);

  /// Batched forward. x[i] is one sample's flattened local feature matrix
  /// [(H W), D^l]; p1[i] its backbone class probabilities (data, detached).
  /// Batch-norm statistics are shared across the whole batch: node features
  /// are stacked to (batch * N) rows before both BN sites. Returns the
  /// enhanced features per sample, same shapes as x.
  std::vector<Var> forward(Graph& g, const std::vector<Var>& x,
                           const std::vector<Tensor>& p1, Mode mode);

  /// In-graph attention variant (detach_attention = false): p1 enters as
  /// graph nodes and gradients flow through the unrolled PPR.
  std::vector<Var> forward_attached(Graph& g, const std::vector<Var>& x,
                                    const std::vector<Var>& p1, Mode mode);

  /// Single-sample value-level forward; grid is [H, W, D^l] or [(H W), D^l].
  Tensor forward_value(const Tensor& grid, const Tensor& p1, Mode mode);

  /// Replaces the node embeddings S, e.g. with vectors from
  /// load_node_embeddings. Shape must be [N, D^S].
  void set_node_embeddings(const Tensor& s);

  HgrParams& params() { return params_; }
  const HgrConfig& config() const { return cfg_; }
  const Tensor& norm_adj() const { return norm_adj_; }
  Index node_count() const { return node_count_; }

 private:
  std::vector<Var> forward_impl(Graph& g, const std::vector<Var>& x,
                                const std::vector<Tensor>* p1_data,
                                const std::vector<Var>* p1_vars, Mode mode);
  /// hierarchy_attention on the stored transition/leaf-map copies.
  Tensor attention_scores(const Tensor& p1) const;
  Var build_attention_scores(Graph& g, Var p1);

  HgrConfig cfg_;
  Index node_count_ = 0;
  std::vector<Index> leaf_map_;
  Tensor norm_adj_;     // [N, N]
  Tensor transition_;   // [N, N] column-stochastic
  HgrParams params_;
};

// The layer's sub-steps as standalone value-level operations. They run the
// same graph builders as training, so train-mode calls advance BN running
// statistics.

/// X^S = MLP_in(X^l): [(H W), D^l] (or [H, W, D^l]) -> [(H W), D^S].
Tensor local_to_semantic(const Tensor& x, HgrParams& p, const HgrConfig& cfg);
/// Row n of the embedding matrix scaled by node score a_n.
Tensor attended_embeddings(const Tensor& node_scores,
                           const Tensor& node_embed);
/// Location-to-node attention pooling: softmax over the node axis per
/// location, then H^S_n = sum_i a_{i->n} X^S_i. Returns [N, D^S].
Tensor aggregate_to_nodes(const Tensor& x_semantic, const Tensor& attn_w);
/// concat(relu(BN(H^S)), S^a) along channels -> [N, 2 D^S].
Tensor fuse_nodes(const Tensor& node_agg, const Tensor& s_att, HgrParams& p,
                  Mode mode);
/// relu(BN(A_hat * fused * W^g)) -> [N, D^S].
Tensor graph_reason(const Tensor& fused, const Tensor& norm_adj, HgrParams& p,
                    Mode mode);
/// H^l = MLP_out(reasoned): [N, D^S] -> [N, D^l].
Tensor semantic_to_local(const Tensor& reasoned, HgrParams& p);
/// Scaled dot-product attention with queries X^l and keys/values H^l;
/// softmax over nodes, scores scaled by 1/sqrt(D^l). Returns [(H W), D^l].
Tensor graph_to_local_attention(const Tensor& x, const Tensor& h_local);
/// Full layer on one sample: the sub-steps above plus the residual add.
Tensor hgr_forward(HgrLayer& layer, const Tensor& grid, const Tensor& p1,
                   Mode mode);

/// Node embedding file: u32 N, u32 D header, then N*D little-endian f64
/// values row-major.
Tensor load_node_embeddings(const std::string& path);
void save_node_embeddings(const std::string& path, const Tensor& s);

}  // namespace gada
