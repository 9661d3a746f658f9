#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "gada/hierarchy.hpp"
#include "gada/tensor.hpp"

namespace gada {

/// Recipe for one synthetic NI-UDA scenario. Classes live on a pruned
/// branching^depth taxonomy; non-shared classes appear only in the source
/// domain; the target domain is a fixed affine image (rotation plus bias)
/// of the source distribution.
struct ScenarioConfig {
  std::string name = "custom";
  Index class_count = 24;  // K
  Index shared_count = 8;  // K'
  Index depth = 3;
  Index branching = 3;
  Index height = 4;
  Index width = 4;
  Index input_dim = 32;
  Index source_shared_per_class = 10;
  Index source_nonshared_per_class = 60;
  Index target_per_class = 60;
  Index target_sparse_per_class = 10;
  // Sparse marking: sparse_count consecutive slots of the shared-class
  // list, starting at sparse_start. Sparse classes use the sparse target
  // count and feed the sparse-F1 breakdown.
  Index sparse_count = 0;
  Index sparse_start = 0;
  double shift_angle = 0.7;  // radians, applied in seeded coordinate pairs
  // Fraction of the coordinate pairs the rotation touches. Below 1, the
  // remaining channels are domain-stable, so coarse class evidence survives
  // the shift even when shift_angle is large.
  double shift_fraction = 1.0;
  double shift_bias = 1.5;  // L2 norm of the additive shift
  double noise_sigma = 1.0;  // per-location gaussian noise, both domains
  // Scale of the per-node prototype vectors. Small leaf_sigma makes sibling
  // classes nearly confusable while subtrees stay far apart, which is the
  // regime the hierarchy layer is built for.
  double internal_sigma = 1.0;
  double leaf_sigma = 0.5;
  std::uint64_t seed = 0;
};

struct Scenario {
  ScenarioConfig config;
  HierarchyGraph hierarchy;
  std::vector<Index> shared_classes;  // ascending class ids, size K'
  std::vector<Index> sparse_classes;  // subset of shared_classes
  Tensor mask;                        // [K], 1 at shared classes

  std::vector<Tensor> source_inputs;  // [H, W, D_in] grids
  std::vector<Index> source_labels;
  std::vector<bool> source_is_shared;
  std::vector<Tensor> target_inputs;
  /// Ground truth for evaluation only; training never reads these.
  std::vector<Index> target_labels;

  // Generation byproducts, kept for oracle tests. Empty after
  // load_scenario (the samples are already materialized).
  std::vector<Tensor> prototypes;  // K vectors of [D_in]
  Tensor shift_rotation;           // [D_in, D_in] orthogonal
  Tensor shift_bias_vec;           // [D_in]

  Index class_count() const { return config.class_count; }
};

/// Builds the pruned taxonomy plus one prototype per class: the sum of the
/// seeded per-node gaussian vectors along the root path (internal nodes
/// internal_sigma, the leaf's own offset leaf_sigma), so sibling prototypes
/// differ only in their leaf offsets.
std::pair<HierarchyGraph, std::vector<Tensor>> build_synthetic_hierarchy(
    const ScenarioConfig& cfg);

/// Materializes a full scenario: hierarchy, shared/sparse class sets, and
/// both domains' samples. Deterministic in cfg (including seed).
Scenario sample_scenario(const ScenarioConfig& cfg);

/// The named presets; unknown names raise an error listing these.
std::vector<std::string> standard_scenario_names();
ScenarioConfig standard_scenario_config(const std::string& name,
                                        std::uint64_t seed);
/// sample_scenario over the named preset.
Scenario standard_scenario(const std::string& name, std::uint64_t seed);

/// On-disk layout under dir/: hierarchy.edges + hierarchy.leaves (the
/// hierarchy text formats), source.bin / target.bin (u32 count, H, W, D
/// header then row-major little-endian f64 grids), labels.csv
/// (index,label,is_shared; source rows first, then target rows), and
/// scenario.txt (the config plus derived class sets, key=value).
void save_scenario(const Scenario& s, const std::string& dir);
Scenario load_scenario(const std::string& dir);

/// Uniformly shaped random tree on 2..max_nodes nodes: node i attaches to a
/// uniform parent among 0..i-1; childless nodes become the classes. Used by
/// the hierarchy oracles.
HierarchyGraph random_tree(std::uint64_t seed, Index max_nodes);

}  // namespace gada
