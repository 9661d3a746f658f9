#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "gada/model.hpp"
#include "gada/synth.hpp"
#include "gada/train.hpp"

namespace gada {

/// Everything a run needs, assembled from a flat key=value config file plus
/// command-line overrides. Keys named "scenario.<field>" collect into
/// scenario_overrides and reshape a generated scenario preset.
struct RunConfig {
  std::string scenario = "imbalanced-source-10";  // preset name or directory
  bool has_seed = false;
  std::uint64_t seed = 0;
  std::string out_dir;
  std::string checkpoint;  // model file to load (eval)

  Index steps = 2000;
  Index eval_interval = 200;
  Index batch_size = 16;
  double learning_rate = 1e-3;
  double momentum = 0.9;
  double weight_decay = 5e-4;
  bool nesterov = true;

  double lambda1 = 2.0;
  double lambda2 = 3.2;
  double lambda3 = 4.0;
  double gamma = 0.7;
  double grl_eta = 1.0;
  double grl_warmup = 0.1;

  Index feature_dim = 32;
  Index semantic_dim = 16;
  Index hidden_dim = 0;  // 0 picks the default MLP width
  Index hgr_layers = 1;
  bool use_hgr = true;
  bool detach_attention = true;
  double ppr_alpha = 0.85;
  double ppr_tolerance = 1e-8;
  Index ppr_max_iterations = 100;

  std::vector<std::pair<std::string, std::string>> scenario_overrides;
};

/// Applies one key=value assignment; `context` prefixes error messages
/// (e.g. "config.txt line 3"). Unknown keys and unparsable values throw.
void apply_config_entry(RunConfig& cfg, const std::string& key,
                        const std::string& value, const std::string& context);

/// Parses a flat key=value file; '#' comments and blank lines are ignored.
RunConfig load_run_config(const std::string& path);

/// Range checks shared by every command; errors mention the offending key.
/// The seed is mandatory (no implicit entropy anywhere).
void validate_run_config(const RunConfig& cfg);

/// Canonical (key, value) listing for manifests: sorted keys, every value
/// in its parseable text form. The output directory is deliberately
/// excluded so reruns into different directories stay byte-identical.
std::vector<std::pair<std::string, std::string>> config_entries(
    const RunConfig& cfg);

/// Resolves cfg.scenario: a standard preset name (plus any
/// scenario_overrides) is generated in memory with cfg.seed; anything else
/// must be a directory produced by save_scenario (overrides rejected).
Scenario resolve_scenario(const RunConfig& cfg);

/// Assembles the nested component configs from the flat run config.
ModelConfig model_config_from(const RunConfig& cfg,
                              const ScenarioConfig& scenario);
TrainOptions train_options_from(const RunConfig& cfg);

}  // namespace gada
