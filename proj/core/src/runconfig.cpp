#include "gada/runconfig.hpp"

#include <algorithm>
#include <fstream>

#include "gada/format.hpp"

namespace gada {

namespace {

std::string trim(const std::string& s) {
  size_t a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  size_t b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

[[noreturn]] void bad(const std::string& context, const std::string& msg) {
  fail(context.empty() ? msg : context + ": " + msg);
}

Index parse_index(const std::string& v, const std::string& ctx,
                  const std::string& key) {
  try {
    size_t used = 0;
    Index out = std::stoll(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return out;
  } catch (const std::exception&) {
    bad(ctx, "key '" + key + "' needs an integer, got '" + v + "'");
  }
}

std::uint64_t parse_u64(const std::string& v, const std::string& ctx,
                        const std::string& key) {
  try {
    size_t used = 0;
    unsigned long long out = std::stoull(v, &used);
    if (used != v.size() || v.empty() || v[0] == '-') {
      throw std::invalid_argument(v);
    }
    return out;
  } catch (const std::exception&) {
    bad(ctx, "key '" + key + "' needs an unsigned integer, got '" + v + "'");
  }
}

double parse_double(const std::string& v, const std::string& ctx,
                    const std::string& key) {
  try {
    size_t used = 0;
    double out = std::stod(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return out;
  } catch (const std::exception&) {
    bad(ctx, "key '" + key + "' needs a number, got '" + v + "'");
  }
}

bool parse_bool(const std::string& v, const std::string& ctx,
                const std::string& key) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  bad(ctx, "key '" + key + "' needs true/false, got '" + v + "'");
}

const char* const kScenarioFields[] = {
    "class_count",   "shared_count",
    "depth",         "branching",
    "height",        "width",
    "input_dim",     "source_shared_per_class",
    "source_nonshared_per_class", "target_per_class",
    "target_sparse_per_class",    "sparse_count",
    "sparse_start",  "shift_angle",
    "shift_fraction", "shift_bias",
    "noise_sigma",   "internal_sigma",
    "leaf_sigma",
};

bool known_scenario_field(const std::string& field) {
  for (const char* f : kScenarioFields) {
    if (field == f) return true;
  }
  return false;
}

void apply_scenario_override(ScenarioConfig& s, const std::string& field,
                             const std::string& value,
                             const std::string& ctx) {
  const std::string key = "scenario." + field;
  if (field == "class_count") s.class_count = parse_index(value, ctx, key);
  else if (field == "shared_count") s.shared_count = parse_index(value, ctx, key);
  else if (field == "depth") s.depth = parse_index(value, ctx, key);
  else if (field == "branching") s.branching = parse_index(value, ctx, key);
  else if (field == "height") s.height = parse_index(value, ctx, key);
  else if (field == "width") s.width = parse_index(value, ctx, key);
  else if (field == "input_dim") s.input_dim = parse_index(value, ctx, key);
  else if (field == "source_shared_per_class")
    s.source_shared_per_class = parse_index(value, ctx, key);
  else if (field == "source_nonshared_per_class")
    s.source_nonshared_per_class = parse_index(value, ctx, key);
  else if (field == "target_per_class")
    s.target_per_class = parse_index(value, ctx, key);
  else if (field == "target_sparse_per_class")
    s.target_sparse_per_class = parse_index(value, ctx, key);
  else if (field == "sparse_count") s.sparse_count = parse_index(value, ctx, key);
  else if (field == "sparse_start") s.sparse_start = parse_index(value, ctx, key);
  else if (field == "shift_angle") s.shift_angle = parse_double(value, ctx, key);
  else if (field == "shift_fraction")
    s.shift_fraction = parse_double(value, ctx, key);
  else if (field == "shift_bias") s.shift_bias = parse_double(value, ctx, key);
  else if (field == "noise_sigma") s.noise_sigma = parse_double(value, ctx, key);
  else if (field == "internal_sigma")
    s.internal_sigma = parse_double(value, ctx, key);
  else if (field == "leaf_sigma") s.leaf_sigma = parse_double(value, ctx, key);
  else bad(ctx, "unknown scenario field '" + field + "'");
}

}  // namespace

void apply_config_entry(RunConfig& cfg, const std::string& raw_key,
                        const std::string& raw_value,
                        const std::string& context) {
  const std::string key = trim(raw_key);
  const std::string value = trim(raw_value);
  if (key.rfind("scenario.", 0) == 0) {
    const std::string field = key.substr(9);
    if (!known_scenario_field(field)) {
      bad(context, "unknown scenario field '" + field + "'");
    }
    // Last assignment wins, mirroring the plain keys.
    for (auto& [f, v] : cfg.scenario_overrides) {
      if (f == field) {
        v = value;
        return;
      }
    }
    cfg.scenario_overrides.emplace_back(field, value);
    return;
  }
  if (key == "scenario") cfg.scenario = value;
  else if (key == "seed") {
    cfg.seed = parse_u64(value, context, key);
    cfg.has_seed = true;
  } else if (key == "out") cfg.out_dir = value;
  else if (key == "checkpoint") cfg.checkpoint = value;
  else if (key == "steps") cfg.steps = parse_index(value, context, key);
  else if (key == "eval_interval")
    cfg.eval_interval = parse_index(value, context, key);
  else if (key == "batch_size")
    cfg.batch_size = parse_index(value, context, key);
  else if (key == "learning_rate")
    cfg.learning_rate = parse_double(value, context, key);
  else if (key == "momentum") cfg.momentum = parse_double(value, context, key);
  else if (key == "weight_decay")
    cfg.weight_decay = parse_double(value, context, key);
  else if (key == "nesterov") cfg.nesterov = parse_bool(value, context, key);
  else if (key == "lambda1") cfg.lambda1 = parse_double(value, context, key);
  else if (key == "lambda2") cfg.lambda2 = parse_double(value, context, key);
  else if (key == "lambda3") cfg.lambda3 = parse_double(value, context, key);
  else if (key == "gamma") cfg.gamma = parse_double(value, context, key);
  else if (key == "grl_eta") cfg.grl_eta = parse_double(value, context, key);
  else if (key == "grl_warmup")
    cfg.grl_warmup = parse_double(value, context, key);
  else if (key == "feature_dim")
    cfg.feature_dim = parse_index(value, context, key);
  else if (key == "semantic_dim")
    cfg.semantic_dim = parse_index(value, context, key);
  else if (key == "hidden_dim")
    cfg.hidden_dim = parse_index(value, context, key);
  else if (key == "hgr_layers")
    cfg.hgr_layers = parse_index(value, context, key);
  else if (key == "use_hgr") cfg.use_hgr = parse_bool(value, context, key);
  else if (key == "detach_attention")
    cfg.detach_attention = parse_bool(value, context, key);
  else if (key == "ppr_alpha")
    cfg.ppr_alpha = parse_double(value, context, key);
  else if (key == "ppr_tolerance")
    cfg.ppr_tolerance = parse_double(value, context, key);
  else if (key == "ppr_max_iterations")
    cfg.ppr_max_iterations = parse_index(value, context, key);
  else bad(context, "unknown config key '" + key + "'");
}

RunConfig load_run_config(const std::string& path) {
  std::ifstream is(path);
  require(is.good(), "config: cannot open " + path);
  RunConfig cfg;
  std::string line;
  Index line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    auto eq = t.find('=');
    const std::string ctx = path + " line " + std::to_string(line_no);
    require(eq != std::string::npos,
            ctx + ": expected key=value, got '" + t + "'");
    apply_config_entry(cfg, t.substr(0, eq), t.substr(eq + 1), ctx);
  }
  return cfg;
}

void validate_run_config(const RunConfig& cfg) {
  require(cfg.has_seed, "config: seed is required (no implicit entropy)");
  require(cfg.lambda1 >= 0 && cfg.lambda2 >= 0 && cfg.lambda3 >= 0,
          "config: lambda1/2/3 must be >= 0");
  require(cfg.gamma >= 0.0 && cfg.gamma <= 1.0,
          "config: gamma must be in [0, 1]");
  require(cfg.steps >= 0, "config: steps must be >= 0");
  require(cfg.eval_interval >= 0, "config: eval_interval must be >= 0");
  require(cfg.batch_size >= 1, "config: batch_size must be >= 1");
  require(cfg.learning_rate >= 0, "config: learning_rate must be >= 0");
  require(cfg.momentum >= 0, "config: momentum must be >= 0");
  require(cfg.weight_decay >= 0, "config: weight_decay must be >= 0");
  require(cfg.grl_eta >= 0, "config: grl_eta must be >= 0");
  require(cfg.grl_warmup >= 0.0 && cfg.grl_warmup <= 1.0,
          "config: grl_warmup must be in [0, 1]");
  require(cfg.feature_dim >= 1 && cfg.semantic_dim >= 1,
          "config: feature_dim and semantic_dim must be >= 1");
  require(cfg.hidden_dim >= 0, "config: hidden_dim must be >= 0");
  require(cfg.hgr_layers >= 0, "config: hgr_layers must be >= 0");
  require(cfg.ppr_alpha > 0.0 && cfg.ppr_alpha < 1.0,
          "config: ppr_alpha must be in (0, 1)");
  require(cfg.ppr_tolerance > 0.0, "config: ppr_tolerance must be > 0");
  require(cfg.ppr_max_iterations >= 1,
          "config: ppr_max_iterations must be >= 1");
}

std::vector<std::pair<std::string, std::string>> config_entries(
    const RunConfig& cfg) {
  std::vector<std::pair<std::string, std::string>> out;
  out.emplace_back("batch_size", std::to_string(cfg.batch_size));
  if (!cfg.checkpoint.empty()) out.emplace_back("checkpoint", cfg.checkpoint);
  out.emplace_back("detach_attention",
                   cfg.detach_attention ? "true" : "false");
  out.emplace_back("eval_interval", std::to_string(cfg.eval_interval));
  out.emplace_back("feature_dim", std::to_string(cfg.feature_dim));
  out.emplace_back("gamma", fmt_g17(cfg.gamma));
  out.emplace_back("grl_eta", fmt_g17(cfg.grl_eta));
  out.emplace_back("grl_warmup", fmt_g17(cfg.grl_warmup));
  out.emplace_back("hgr_layers", std::to_string(cfg.hgr_layers));
  out.emplace_back("hidden_dim", std::to_string(cfg.hidden_dim));
  out.emplace_back("lambda1", fmt_g17(cfg.lambda1));
  out.emplace_back("lambda2", fmt_g17(cfg.lambda2));
  out.emplace_back("lambda3", fmt_g17(cfg.lambda3));
  out.emplace_back("learning_rate", fmt_g17(cfg.learning_rate));
  out.emplace_back("momentum", fmt_g17(cfg.momentum));
  out.emplace_back("nesterov", cfg.nesterov ? "true" : "false");
  out.emplace_back("ppr_alpha", fmt_g17(cfg.ppr_alpha));
  out.emplace_back("ppr_max_iterations",
                   std::to_string(cfg.ppr_max_iterations));
  out.emplace_back("ppr_tolerance", fmt_g17(cfg.ppr_tolerance));
  out.emplace_back("scenario", cfg.scenario);
  out.emplace_back("seed", std::to_string(cfg.seed));
  out.emplace_back("semantic_dim", std::to_string(cfg.semantic_dim));
  out.emplace_back("steps", std::to_string(cfg.steps));
  out.emplace_back("use_hgr", cfg.use_hgr ? "true" : "false");
  out.emplace_back("weight_decay", fmt_g17(cfg.weight_decay));
  std::vector<std::pair<std::string, std::string>> overrides =
      cfg.scenario_overrides;
  std::sort(overrides.begin(), overrides.end());
  for (auto& [field, value] : overrides) {
    out.emplace_back("scenario." + field, value);
  }
  return out;
}

Scenario resolve_scenario(const RunConfig& cfg) {
  const std::vector<std::string> names = standard_scenario_names();
  if (std::find(names.begin(), names.end(), cfg.scenario) != names.end()) {
    ScenarioConfig scen = standard_scenario_config(cfg.scenario, cfg.seed);
    for (const auto& [field, value] : cfg.scenario_overrides) {
      apply_scenario_override(scen, field, value, "config");
    }
    return sample_scenario(scen);
  }
  require(cfg.scenario_overrides.empty(),
          "config: scenario.* overrides apply only to generated presets, "
          "not to the scenario directory '" + cfg.scenario + "'");
  std::ifstream probe(cfg.scenario + "/scenario.txt");
  if (!probe.good()) {
    std::string known;
    for (const std::string& n : names) {
      if (!known.empty()) known += ", ";
      known += n;
    }
    fail("config: unknown scenario '" + cfg.scenario +
         "': not a preset (" + known + ") and not a generated directory");
  }
  return load_scenario(cfg.scenario);
}

ModelConfig model_config_from(const RunConfig& cfg,
                              const ScenarioConfig& scenario) {
  ModelConfig m;
  m.input_dim = scenario.input_dim;
  m.height = scenario.height;
  m.width = scenario.width;
  m.hgr.feature_dim = cfg.feature_dim;
  m.hgr.semantic_dim = cfg.semantic_dim;
  m.hgr.hidden_dim = cfg.hidden_dim;
  m.hgr.ppr.alpha = cfg.ppr_alpha;
  m.hgr.ppr.tolerance = cfg.ppr_tolerance;
  m.hgr.ppr.max_iterations = cfg.ppr_max_iterations;
  m.hgr.detach_attention = cfg.detach_attention;
  m.hgr_layers = cfg.hgr_layers;
  m.use_hgr = cfg.use_hgr;
  return m;
}

TrainOptions train_options_from(const RunConfig& cfg) {
  TrainOptions t;
  t.steps = cfg.steps;
  t.batch_size = cfg.batch_size;
  t.eval_interval = cfg.eval_interval;
  t.opt.learning_rate = cfg.learning_rate;
  t.opt.momentum = cfg.momentum;
  t.opt.weight_decay = cfg.weight_decay;
  t.opt.nesterov = cfg.nesterov;
  t.objective.lambda1 = cfg.lambda1;
  t.objective.lambda2 = cfg.lambda2;
  t.objective.lambda3 = cfg.lambda3;
  t.objective.gamma = cfg.gamma;
  t.objective.grl_eta_max = cfg.grl_eta;
  t.objective.grl_warmup_frac = cfg.grl_warmup;
  t.seed = cfg.seed;
  return t;
}

}  // namespace gada
