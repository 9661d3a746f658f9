#pragma once

#include <string>

#include "gada/metrics.hpp"
#include "gada/runconfig.hpp"

namespace gada {

/// The CLI commands as library calls. Each writes a manifest.txt
/// (command, library version, and the full config in parseable form) next
/// to its outputs; none of the written files embeds a timestamp or path,
/// so identical (config, seed) runs are byte-identical.

/// Materializes the configured scenario into cfg.out_dir.
void run_gen(const RunConfig& cfg);

/// Trains a fresh model; writes log.ndjson (one record per step),
/// checkpoint.bin, report.json (final target evaluation), manifest.txt.
/// Returns the final report.
EvalReport run_train(const RunConfig& cfg);

/// Loads cfg.checkpoint into a fresh model and evaluates it on the
/// configured scenario; writes report.json, embeddings.csv, manifest.txt.
EvalReport run_eval(const RunConfig& cfg);

}  // namespace gada
