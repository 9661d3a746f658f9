#include "gada/pipeline.hpp"

#include <filesystem>
#include <fstream>

#include "gada/checkpoint.hpp"
#include "gada/train.hpp"
#include "gada/version.hpp"

namespace gada {

namespace {

void write_manifest(const RunConfig& cfg, const std::string& command) {
  std::ofstream os(cfg.out_dir + "/manifest.txt");
  require(os.good(), "cannot write manifest.txt in " + cfg.out_dir);
  os << "command=" << command << "\n";
  os << "version=" << kVersion << "\n";
  for (const auto& [key, value] : config_entries(cfg)) {
    os << key << "=" << value << "\n";
  }
  require(os.good(), "write failed for manifest.txt");
}

void prepare_out_dir(const RunConfig& cfg, const char* command) {
  require(!cfg.out_dir.empty(),
          std::string(command) + ": an output directory is required (--out)");
  std::filesystem::create_directories(cfg.out_dir);
}

void write_text(const std::string& path, const std::string& content) {
  std::ofstream os(path);
  require(os.good(), "cannot write " + path);
  os << content;
  require(os.good(), "write failed for " + path);
}

void write_model_checkpoint(GadaModel& model, const std::string& path) {
  std::vector<std::pair<std::string, const Tensor*>> entries;
  for (auto& [name, tensor] : model.state()) entries.emplace_back(name, tensor);
  save_checkpoint(path, entries);
}

}  // namespace

void run_gen(const RunConfig& cfg) {
  validate_run_config(cfg);
  prepare_out_dir(cfg, "gen");
  Scenario scenario = resolve_scenario(cfg);
  save_scenario(scenario, cfg.out_dir);
  write_manifest(cfg, "gen");
}

EvalReport run_train(const RunConfig& cfg) {
  validate_run_config(cfg);
  prepare_out_dir(cfg, "train");
  Scenario scenario = resolve_scenario(cfg);
  GadaModel model(scenario.hierarchy, scenario.mask,
                  model_config_from(cfg, scenario.config), cfg.seed);
  TrainResult result = train(model, scenario, train_options_from(cfg));

  std::string log;
  for (const StepRecord& rec : result.log) {
    log += step_record_json(rec);
    log += "\n";
  }
  write_text(cfg.out_dir + "/log.ndjson", log);
  write_model_checkpoint(model, cfg.out_dir + "/checkpoint.bin");
  write_text(cfg.out_dir + "/report.json",
             report_json(result.final_report) + "\n");
  write_manifest(cfg, "train");
  return result.final_report;
}

EvalReport run_eval(const RunConfig& cfg) {
  validate_run_config(cfg);
  prepare_out_dir(cfg, "eval");
  require(!cfg.checkpoint.empty(), "eval: a checkpoint path is required");
  Scenario scenario = resolve_scenario(cfg);
  GadaModel model(scenario.hierarchy, scenario.mask,
                  model_config_from(cfg, scenario.config), cfg.seed);
  model.load_state(load_checkpoint(cfg.checkpoint));
  EvalReport report = evaluate(model, scenario);
  write_text(cfg.out_dir + "/report.json", report_json(report) + "\n");
  dump_embeddings(model, scenario, cfg.out_dir + "/embeddings.csv");
  write_manifest(cfg, "eval");
  return report;
}

}  // namespace gada
