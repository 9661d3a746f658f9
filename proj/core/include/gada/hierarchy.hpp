#pragma once

#include <string>
#include <utility>
#include <vector>

#include "gada/tensor.hpp"

namespace gada {

/// Class taxonomy: a rooted tree over N named nodes whose childless nodes
/// carry the K classes. leaf_map[k] is the node index of class k.
struct HierarchyGraph {
  Index node_count = 0;
  std::vector<std::string> names;
  std::vector<std::pair<Index, Index>> edges;  // (parent, child)
  std::vector<Index> leaf_map;
  Tensor adjacency;  // [N,N] symmetric 0/1, no self-loops

  std::vector<Index> parent;  // -1 at the root
  std::vector<std::vector<Index>> children;
  Index root = -1;

  Index leaf_count() const { return static_cast<Index>(leaf_map.size()); }
  /// Node index for a name, -1 if absent.
  Index find_node(const std::string& name) const;
};

/// Validates and finishes a graph from named edges plus the class leaves in
/// class-id order. Node ids follow first appearance in the edge list. A
/// single-node graph (no edges, one class naming the only node) is allowed.
HierarchyGraph build_graph(
    const std::vector<std::pair<std::string, std::string>>& edges,
    const std::vector<std::string>& class_leaves);

/// Text formats: edge list has one "parent child" pair per line; leaf map has
/// one "k node_name" pair per line with k densely covering 0..K-1. Blank
/// lines and '#' comments are ignored in both.
HierarchyGraph load_graph(const std::string& edge_list_path,
                          const std::string& leaf_map_path);
void write_graph_files(const HierarchyGraph& g,
                       const std::string& edge_list_path,
                       const std::string& leaf_map_path);

/// Symmetrically normalized adjacency with self-loops:
/// D^{-1/2} (A + I) D^{-1/2} with D the row sums of A + I.
Tensor normalized_adjacency(const HierarchyGraph& g);

/// Column-stochastic random-walk matrix over the tree edges. An isolated
/// node (only in the single-node graph) gets a self-transition.
Tensor transition_matrix(const HierarchyGraph& g);

/// Zero-pads a K-class probability vector onto the N graph nodes via the
/// leaf map. The input must sum to 1 within 1e-9.
Tensor expand_prediction(const Tensor& p_classes, const HierarchyGraph& g);

struct PprConfig {
  double alpha = 0.85;      // restart (damping) weight on the personalization
  double tolerance = 1e-8;  // L1 stopping threshold between iterates
  Index max_iterations = 100;
};

/// Personalized PageRank by power iteration:
///   a <- alpha * v + (1 - alpha) * P * a,  a0 = v,
/// with v the L1-normalized personalization. Stops when the L1 change drops
/// below cfg.tolerance or after cfg.max_iterations.
Tensor personalized_pagerank(const HierarchyGraph& g,
                             const Tensor& personalization,
                             const PprConfig& cfg = {});

/// The same power iteration on an explicit column-stochastic transition
/// matrix and an already L1-normalized personalization.
Tensor ppr_power(const Tensor& transition, const Tensor& v_normalized,
                 const PprConfig& cfg);

/// Direct dense solve of (I - (1-alpha) P) a = alpha v; the PPR fixed point
/// without iteration. Reference oracle for personalized_pagerank.
Tensor ppr_oracle_solve(const HierarchyGraph& g, const Tensor& personalization,
                        double alpha = 0.85);

/// Node attention scores: PPR of the expanded prediction plus the expanded
/// prediction itself.
Tensor hierarchy_attention(const Tensor& p_classes, const HierarchyGraph& g,
                           const PprConfig& cfg = {});

}  // namespace gada
