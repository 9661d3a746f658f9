// Command-line entry point: scenario generation, training, evaluation, and
// the verification suites. All behavior lives in the core library; this file
// only maps flags onto RunConfig and prints results.

#include <cstdio>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "gada/pipeline.hpp"
#include "gada/runconfig.hpp"
#include "gada/tensor.hpp"
#include "gada/verify.hpp"
#include "gada/version.hpp"

namespace {

// Flag values that override the config file. Optionals distinguish "not
// given" from a default, so file settings survive unless explicitly changed.
struct Overrides {
  std::optional<std::string> scenario, out, checkpoint;
  std::optional<std::uint64_t> seed;
  std::optional<long long> steps, eval_interval, batch_size, hgr_layers;
  std::optional<double> gamma, lambda1, lambda2, lambda3, learning_rate;
  bool no_hgr = false;
};

void add_run_options(CLI::App* cmd, std::string& config_path, Overrides& o) {
  cmd->add_option("--config", config_path,
                  "flat key=value config file (flags override it)");
  cmd->add_option("--scenario", o.scenario,
                  "scenario preset name or generated directory");
  cmd->add_option("--seed", o.seed, "RNG seed (mandatory, no implicit entropy)");
  cmd->add_option("--out", o.out, "output directory");
  cmd->add_option("--steps", o.steps, "training steps");
  cmd->add_option("--eval-interval", o.eval_interval,
                  "steps between target evaluations (0 disables)");
  cmd->add_option("--batch-size", o.batch_size, "samples per batch per stream");
  cmd->add_option("--checkpoint", o.checkpoint, "model file to load");
  cmd->add_option("--gamma", o.gamma, "confidence gate threshold");
  cmd->add_option("--lambda1", o.lambda1, "source-classifier loss weight");
  cmd->add_option("--lambda2", o.lambda2, "adversarial loss weight");
  cmd->add_option("--lambda3", o.lambda3, "source term weight inside the discrepancy");
  cmd->add_option("--lr", o.learning_rate, "SGD learning rate");
  cmd->add_option("--hgr-layers", o.hgr_layers, "stacked enhancement layers");
  cmd->add_flag("--no-hgr", o.no_hgr,
                "bypass the enhancement layer (plain adversarial baseline)");
}

gada::RunConfig build_config(const std::string& config_path,
                             const Overrides& o) {
  gada::RunConfig cfg;
  if (!config_path.empty()) cfg = gada::load_run_config(config_path);
  auto set = [&cfg](const std::string& key, const std::string& value) {
    gada::apply_config_entry(cfg, key, value, "flag --" + key);
  };
  if (o.scenario) set("scenario", *o.scenario);
  if (o.seed) set("seed", std::to_string(*o.seed));
  if (o.out) set("out", *o.out);
  if (o.checkpoint) set("checkpoint", *o.checkpoint);
  if (o.steps) set("steps", std::to_string(*o.steps));
  if (o.eval_interval) set("eval_interval", std::to_string(*o.eval_interval));
  if (o.batch_size) set("batch_size", std::to_string(*o.batch_size));
  if (o.gamma) set("gamma", std::to_string(*o.gamma));
  if (o.lambda1) set("lambda1", std::to_string(*o.lambda1));
  if (o.lambda2) set("lambda2", std::to_string(*o.lambda2));
  if (o.lambda3) set("lambda3", std::to_string(*o.lambda3));
  if (o.learning_rate) set("learning_rate", std::to_string(*o.learning_rate));
  if (o.hgr_layers) set("hgr_layers", std::to_string(*o.hgr_layers));
  if (o.no_hgr) set("use_hgr", "false");
  return cfg;
}

void print_report(const gada::EvalReport& r) {
  std::printf("target samples %lld  accuracy %.4f  macro-F1 %.4f\n",
              static_cast<long long>(r.sample_count), r.accuracy, r.macro_f1);
  if (r.sparse_class_count > 0) {
    std::printf("sparse-F1 %.4f  nonsparse-F1 %.4f\n", r.sparse_f1,
                r.nonsparse_f1);
  }
}

int print_checks(const std::vector<gada::CheckResult>& results) {
  for (const gada::CheckResult& r : results) {
    std::printf("%-44s %s  max %.3e  (bound %.1e)%s%s\n", r.name.c_str(),
                r.pass ? "PASS" : "FAIL", r.max_error, r.bound,
                r.detail.empty() ? "" : "  ", r.detail.c_str());
  }
  if (!gada::all_passed(results)) {
    std::printf("verification FAILED\n");
    return 1;
  }
  std::printf("all %zu checks passed\n", results.size());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"hierarchy-enhanced adversarial domain adaptation toolkit"};
  app.set_version_flag("--version", gada::kVersion);
  app.require_subcommand(1);

  std::string gen_cfg, train_cfg, eval_cfg;
  Overrides gen_o, train_o, eval_o;
  CLI::App* gen = app.add_subcommand("gen", "materialize a scenario to disk");
  add_run_options(gen, gen_cfg, gen_o);
  CLI::App* train =
      app.add_subcommand("train", "train a model and write log/checkpoint/report");
  add_run_options(train, train_cfg, train_o);
  CLI::App* eval =
      app.add_subcommand("eval", "evaluate a checkpoint on a scenario's target");
  add_run_options(eval, eval_cfg, eval_o);

  CLI::App* verify = app.add_subcommand("verify", "run the oracle suites");
  std::string suite = "all";
  std::uint64_t verify_seed = 0;
  verify->add_option("suite", suite, "gradcheck | ppr | invariants | all")
      ->check(CLI::IsMember({"gradcheck", "ppr", "invariants", "all"}));
  verify->add_option("--seed", verify_seed, "suite seed");

  CLI11_PARSE(app, argc, argv);

  try {
    if (gen->parsed()) {
      gada::run_gen(build_config(gen_cfg, gen_o));
      return 0;
    }
    if (train->parsed()) {
      print_report(gada::run_train(build_config(train_cfg, train_o)));
      return 0;
    }
    if (eval->parsed()) {
      print_report(gada::run_eval(build_config(eval_cfg, eval_o)));
      return 0;
    }
    std::vector<gada::CheckResult> results;
    if (suite == "gradcheck") {
      results = gada::verify_gradcheck(verify_seed);
    } else if (suite == "ppr") {
      results = gada::verify_ppr(verify_seed);
    } else if (suite == "invariants") {
      results = gada::verify_invariants(verify_seed);
    } else {
      results = gada::verify_all(verify_seed);
    }
    return print_checks(results);
  } catch (const gada::Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
}
