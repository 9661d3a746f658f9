#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <string>
#include <vector>

#include "gada/metrics.hpp"
#include "gada/runconfig.hpp"
#include "gada/synth.hpp"
#include "test_util.hpp"

using namespace gada;
using testutil::state_tensor;
using testutil::zero_tensor;

namespace {

ScenarioConfig tiny_cfg() {
  ScenarioConfig c;
  c.name = "tiny";
  c.class_count = 4;
  c.shared_count = 2;
  c.depth = 2;
  c.branching = 2;
  c.height = 2;
  c.width = 2;
  c.input_dim = 6;
  c.source_shared_per_class = 5;
  c.source_nonshared_per_class = 4;
  c.target_per_class = 5;
  c.target_sparse_per_class = 2;
  c.seed = 11;
  return c;
}

ModelConfig tiny_model_cfg() {
  ModelConfig m;
  m.input_dim = 6;
  m.height = 2;
  m.width = 2;
  m.hgr.feature_dim = 8;
  m.hgr.semantic_dim = 4;
  return m;
}

bool scenario_bitwise_equal(const Scenario& a, const Scenario& b) {
  if (a.source_labels != b.source_labels) return false;
  if (a.target_labels != b.target_labels) return false;
  if (a.source_is_shared != b.source_is_shared) return false;
  if (a.shared_classes != b.shared_classes) return false;
  if (a.sparse_classes != b.sparse_classes) return false;
  if (!bitwise_equal(a.mask, b.mask)) return false;
  if (a.source_inputs.size() != b.source_inputs.size()) return false;
  for (size_t i = 0; i < a.source_inputs.size(); ++i) {
    if (!bitwise_equal(a.source_inputs[i], b.source_inputs[i])) return false;
  }
  if (a.target_inputs.size() != b.target_inputs.size()) return false;
  for (size_t i = 0; i < a.target_inputs.size(); ++i) {
    if (!bitwise_equal(a.target_inputs[i], b.target_inputs[i])) return false;
  }
  return true;
}

ConfusionMatrix make_cm(const std::vector<Index>& classes,
                        const std::vector<Index>& counts) {
  ConfusionMatrix cm;
  cm.classes = classes;
  cm.counts = counts;
  return cm;
}

}  // namespace

TEST_CASE("sample_scenario: bitwise deterministic in its config") {
  Scenario a = sample_scenario(tiny_cfg());
  Scenario b = sample_scenario(tiny_cfg());
  CHECK(scenario_bitwise_equal(a, b));
  REQUIRE(a.prototypes.size() == b.prototypes.size());
  for (size_t i = 0; i < a.prototypes.size(); ++i) {
    CHECK(bitwise_equal(a.prototypes[i], b.prototypes[i]));
  }
  CHECK(bitwise_equal(a.shift_rotation, b.shift_rotation));
  CHECK(bitwise_equal(a.shift_bias_vec, b.shift_bias_vec));

  ScenarioConfig other = tiny_cfg();
  other.seed = 12;
  CHECK(!scenario_bitwise_equal(a, sample_scenario(other)));
}

TEST_CASE("build_synthetic_hierarchy: pruned tree sizes") {
  ScenarioConfig c = tiny_cfg();
  auto [g4, protos4] = build_synthetic_hierarchy(c);
  // Full binary depth-2 tree: root + 2 internals + 4 leaves.
  CHECK(g4.node_count == 7);
  CHECK(g4.leaf_count() == 4);
  CHECK(static_cast<Index>(protos4.size()) == 4);

  c.branching = 3;
  c.class_count = 6;
  c.shared_count = 2;
  auto [g6, protos6] = build_synthetic_hierarchy(c);
  // Nine leaf slots pruned to six: the first two internals keep all their
  // leaves, the third loses every leaf and is pruned away with them.
  CHECK(g6.node_count == 9);
  CHECK(g6.leaf_count() == 6);

  c.class_count = 99;  // over the 9-leaf capacity
  CHECK_THROWS_AS(build_synthetic_hierarchy(c), Error);
  c.class_count = 6;
  c.depth = 1;
  CHECK_THROWS_AS(build_synthetic_hierarchy(c), Error);
}

TEST_CASE("sample_scenario: per-class sample budget and shared bookkeeping") {
  ScenarioConfig c = tiny_cfg();
  c.sparse_count = 1;
  c.sparse_start = 1;
  Scenario s = sample_scenario(c);

  CHECK(s.mask.sum() == 2.0);
  REQUIRE(s.shared_classes.size() == 2);
  CHECK(std::is_sorted(s.shared_classes.begin(), s.shared_classes.end()));
  REQUIRE(s.sparse_classes.size() == 1);
  CHECK(s.sparse_classes[0] == s.shared_classes[1]);
  for (Index cls : s.shared_classes) CHECK(s.mask.at(cls) == 1.0);

  std::map<Index, Index> src_count, tgt_count;
  for (size_t i = 0; i < s.source_labels.size(); ++i) {
    src_count[s.source_labels[i]] += 1;
    CHECK(s.source_is_shared[i] == (s.mask.at(s.source_labels[i]) == 1.0));
    CHECK(s.source_inputs[i].shape == Shape{2, 2, 6});
  }
  for (Index y : s.target_labels) {
    tgt_count[y] += 1;
    CHECK(s.mask.at(y) == 1.0);
  }
  for (Index cls = 0; cls < 4; ++cls) {
    const bool shared = s.mask.at(cls) == 1.0;
    CHECK(src_count[cls] == (shared ? 5 : 4));
  }
  const Index sparse_cls = s.sparse_classes[0];
  for (Index cls : s.shared_classes) {
    CHECK(tgt_count[cls] == (cls == sparse_cls ? 2 : 5));
  }
}

TEST_CASE("standard scenarios: preset table and the unknown-name error") {
  CHECK(standard_scenario_names().size() == 6);

  ScenarioConfig s10 = standard_scenario_config("imbalanced-source-10", 3);
  CHECK(s10.class_count == 24);
  CHECK(s10.shared_count == 8);
  CHECK(s10.source_shared_per_class == 10);
  CHECK(s10.source_nonshared_per_class == 60);
  CHECK(s10.target_per_class == 60);
  CHECK(s10.sparse_count == 0);
  CHECK(s10.seed == 3);

  CHECK(standard_scenario_config("imbalanced-source-20", 0)
            .source_shared_per_class == 20);
  CHECK(standard_scenario_config("imbalanced-source-50", 0)
            .source_shared_per_class == 50);

  ScenarioConfig its = standard_scenario_config("imbalanced-target-sparse", 0);
  CHECK(its.source_shared_per_class == 60);
  CHECK(its.sparse_count == 5);
  CHECK(its.target_sparse_per_class == 10);

  ScenarioConfig ith = standard_scenario_config("imbalanced-target-half", 0);
  CHECK(ith.sparse_count == 4);
  CHECK(ith.target_sparse_per_class == 30);

  ScenarioConfig fs = standard_scenario_config("full-sparse", 0);
  CHECK(fs.sparse_count == 8);
  CHECK(fs.target_per_class == 10);
  CHECK(fs.target_sparse_per_class == 10);

  bool threw = false;
  try {
    standard_scenario_config("no-such-scenario", 0);
  } catch (const Error& e) {
    threw = true;
    CHECK(std::string(e.what()).find("imbalanced-source-10") !=
          std::string::npos);
  }
  CHECK(threw);
}

TEST_CASE("standard scenarios: sparse preset materializes 5 classes of 10") {
  Scenario s = standard_scenario("imbalanced-target-sparse", 1);
  REQUIRE(s.sparse_classes.size() == 5);
  std::map<Index, Index> tgt_count;
  for (Index y : s.target_labels) tgt_count[y] += 1;
  for (Index cls : s.shared_classes) {
    const bool sparse = std::find(s.sparse_classes.begin(),
                                  s.sparse_classes.end(),
                                  cls) != s.sparse_classes.end();
    CHECK(tgt_count[cls] == (sparse ? 10 : 60));
  }
}

TEST_CASE("prototypes: siblings stay closer than cousins") {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    ScenarioConfig c;
    c.class_count = 24;
    c.shared_count = 8;
    c.input_dim = 32;
    c.seed = seed;
    auto [g, protos] = build_synthetic_hierarchy(c);

    auto dist2 = [&](Index a, Index b) {
      double d = 0;
      for (Index i = 0; i < c.input_dim; ++i) {
        const double diff = protos[static_cast<size_t>(a)].at(i) -
                            protos[static_cast<size_t>(b)].at(i);
        d += diff * diff;
      }
      return d;
    };
    double sib_sum = 0, cousin_sum = 0;
    Index sib_n = 0, cousin_n = 0;
    for (Index a = 0; a < c.class_count; ++a) {
      for (Index b = a + 1; b < c.class_count; ++b) {
        const Index pa = g.parent[g.leaf_map[a]];
        const Index pb = g.parent[g.leaf_map[b]];
        if (pa == pb) {
          sib_sum += dist2(a, b);
          sib_n += 1;
        } else {
          cousin_sum += dist2(a, b);
          cousin_n += 1;
        }
      }
    }
    REQUIRE(sib_n > 0);
    REQUIRE(cousin_n > 0);
    // leaf_sigma 0.5 vs internal_sigma 1.0 over 32 dims separates the two
    // populations by a wide margin.
    CHECK(sib_sum / static_cast<double>(sib_n) <
          0.5 * cousin_sum / static_cast<double>(cousin_n));
  }
}

TEST_CASE("domain shift: identity transform reproduces the prototypes") {
  ScenarioConfig c = tiny_cfg();
  c.noise_sigma = 0.0;
  c.shift_angle = 0.0;
  c.shift_bias = 0.0;
  Scenario s = sample_scenario(c);
  for (size_t i = 0; i < s.source_inputs.size(); ++i) {
    const Tensor& proto =
        s.prototypes[static_cast<size_t>(s.source_labels[i])];
    const Tensor& grid = s.source_inputs[i];
    for (Index loc = 0; loc < 4; ++loc) {
      for (Index d = 0; d < 6; ++d) {
        CHECK(grid.values[static_cast<size_t>(loc * 6 + d)] == proto.at(d));
      }
    }
  }
  for (size_t i = 0; i < s.target_inputs.size(); ++i) {
    const Tensor& proto =
        s.prototypes[static_cast<size_t>(s.target_labels[i])];
    const Tensor& grid = s.target_inputs[i];
    for (Index loc = 0; loc < 4; ++loc) {
      for (Index d = 0; d < 6; ++d) {
        CHECK(grid.values[static_cast<size_t>(loc * 6 + d)] ==
              doctest::Approx(proto.at(d)).epsilon(1e-12));
      }
    }
  }
}

TEST_CASE("domain shift: the affine map inverts back to the prototypes") {
  ScenarioConfig c = tiny_cfg();
  c.noise_sigma = 0.0;
  Scenario s = sample_scenario(c);
  const Tensor& rot = s.shift_rotation;
  const Tensor& bias = s.shift_bias_vec;
  REQUIRE(rot.shape == Shape{6, 6});
  REQUIRE(bias.shape == Shape{6});

  // R^T R == I.
  for (Index i = 0; i < 6; ++i) {
    for (Index j = 0; j < 6; ++j) {
      double acc = 0;
      for (Index k = 0; k < 6; ++k) acc += rot.at(k, i) * rot.at(k, j);
      CHECK(acc == doctest::Approx(i == j ? 1.0 : 0.0).epsilon(1e-13));
    }
  }
  // The bias vector carries the configured L2 norm.
  double norm2 = 0;
  for (Index d = 0; d < 6; ++d) norm2 += bias.at(d) * bias.at(d);
  CHECK(std::sqrt(norm2) == doctest::Approx(c.shift_bias).epsilon(1e-12));

  // Noise-free target locations are exactly R proto + b.
  for (size_t i = 0; i < s.target_inputs.size(); ++i) {
    const Tensor& proto =
        s.prototypes[static_cast<size_t>(s.target_labels[i])];
    const Tensor& grid = s.target_inputs[i];
    for (Index loc = 0; loc < 4; ++loc) {
      for (Index d = 0; d < 6; ++d) {
        double recovered = 0;
        for (Index k = 0; k < 6; ++k) {
          recovered += rot.at(k, d) *
                       (grid.values[static_cast<size_t>(loc * 6 + k)] -
                        bias.at(k));
        }
        CHECK(recovered == doctest::Approx(proto.at(d)).epsilon(1e-12));
      }
    }
  }
}

TEST_CASE("scenario files: round-trip through save and load") {
  ScenarioConfig c = tiny_cfg();
  c.sparse_count = 1;
  Scenario s = sample_scenario(c);
  testutil::TempDir dir("scen");
  save_scenario(s, dir.str());
  Scenario r = load_scenario(dir.str());
  CHECK(scenario_bitwise_equal(s, r));
  CHECK(r.prototypes.empty());
  CHECK(r.shift_rotation.values.empty());
  CHECK(r.config.name == c.name);
  CHECK(r.config.class_count == c.class_count);
  CHECK(r.config.seed == c.seed);
  CHECK(r.hierarchy.node_count == s.hierarchy.node_count);
  CHECK(r.hierarchy.leaf_map == s.hierarchy.leaf_map);

  // A corrupt payload is rejected.
  testutil::write_file(dir.file("source.bin"), "nope");
  CHECK_THROWS_AS(load_scenario(dir.str()), Error);
}

TEST_CASE("scenario validation errors") {
  ScenarioConfig c = tiny_cfg();
  c.noise_sigma = -1.0;
  CHECK_THROWS_AS(sample_scenario(c), Error);
  c = tiny_cfg();
  c.shift_fraction = 1.5;
  CHECK_THROWS_AS(sample_scenario(c), Error);
  c = tiny_cfg();
  c.shared_count = 9;
  CHECK_THROWS_AS(sample_scenario(c), Error);
  c = tiny_cfg();
  c.sparse_start = 2;
  c.sparse_count = 1;  // runs past the two shared slots
  CHECK_THROWS_AS(sample_scenario(c), Error);
  c = tiny_cfg();
  c.source_shared_per_class = 0;
  c.source_nonshared_per_class = 0;
  CHECK_THROWS_AS(sample_scenario(c), Error);
}

TEST_CASE("report_from_confusion: closed-form scores") {
  SUBCASE("perfect predictor") {
    ConfusionMatrix cm = make_cm({2, 5, 9}, {4, 0, 0, 0, 6, 0, 0, 0, 3});
    EvalReport r = report_from_confusion(cm, {});
    CHECK(r.accuracy == 1.0);
    CHECK(r.macro_f1 == 1.0);
    CHECK(r.sample_count == 13);
    CHECK(r.per_class[1].class_id == 5);
    CHECK(r.per_class[1].support == 6);
    CHECK(r.per_class[1].f1 == 1.0);
  }

  SUBCASE("constant predictor: accuracy 1/2, macro-F1 1/3") {
    ConfusionMatrix cm = make_cm({0, 1}, {10, 0, 10, 0});
    EvalReport r = report_from_confusion(cm, {});
    CHECK(r.accuracy == 0.5);
    CHECK(r.per_class[0].precision == 0.5);
    CHECK(r.per_class[0].recall == 1.0);
    CHECK(r.per_class[0].f1 == doctest::Approx(2.0 / 3.0).epsilon(1e-15));
    CHECK(r.per_class[1].f1 == 0.0);
    CHECK(r.macro_f1 == doctest::Approx(1.0 / 3.0).epsilon(1e-15));
  }

  SUBCASE("absent class is excluded from macro but scored 0 when sparse") {
    ConfusionMatrix cm = make_cm({0, 1, 2},
                                 {5, 0, 0, 0, 5, 0, 0, 0, 0});
    EvalReport r = report_from_confusion(cm, {2});
    CHECK(r.macro_f1 == 1.0);  // two present classes, both perfect
    CHECK(r.sparse_f1 == 0.0);
    CHECK(r.nonsparse_f1 == 1.0);
    CHECK(r.sparse_class_count == 1);
  }

  SUBCASE("guards") {
    ConfusionMatrix empty = make_cm({0, 1}, {0, 0, 0, 0});
    CHECK_THROWS_AS(report_from_confusion(empty, {}), Error);
    ConfusionMatrix cm = make_cm({0, 1}, {1, 0, 0, 1});
    CHECK_THROWS_AS(report_from_confusion(cm, {7}), Error);
  }
}

TEST_CASE("confusion: a tied head predicts the lowest shared class") {
  HierarchyGraph g = testutil::star_graph(3);
  Tensor mask(Shape{3});
  mask.at(1) = 1.0;
  mask.at(2) = 1.0;
  ModelConfig mc;
  mc.input_dim = 3;
  mc.height = 1;
  mc.width = 1;
  mc.hgr.feature_dim = 3;
  mc.use_hgr = false;
  GadaModel model(g, mask, mc, 3);
  zero_tensor(*state_tensor(model, "f1.w"));
  zero_tensor(*state_tensor(model, "f1.b"));

  Rng rng(5);
  std::vector<Tensor> inputs;
  std::vector<Index> labels;
  for (int i = 0; i < 6; ++i) {
    inputs.push_back(rng.gaussian_tensor({1, 1, 3}, 1.0));
    labels.push_back(1 + (i % 2));
  }
  ConfusionMatrix cm = confusion(model, inputs, labels, {1, 2});
  // All predictions land on class 1 (ties resolve to the first shared id).
  CHECK(cm.at(0, 0) == 3);
  CHECK(cm.at(1, 0) == 3);
  CHECK(cm.at(0, 1) == 0);
  CHECK(cm.at(1, 1) == 0);

  CHECK_THROWS_AS(confusion(model, inputs, {0, 0, 0, 0, 0, 0}, {1, 2}), Error);
  CHECK_THROWS_AS(confusion(model, {}, {}, {1, 2}), Error);
}

TEST_CASE("evaluate: agrees with the confusion + report pipeline") {
  Scenario sc = sample_scenario(tiny_cfg());
  GadaModel model(sc.hierarchy, sc.mask, tiny_model_cfg(), 8);
  EvalReport direct = evaluate(model, sc);
  ConfusionMatrix cm = confusion(model, sc.target_inputs, sc.target_labels,
                                 sc.shared_classes);
  EvalReport via_cm = report_from_confusion(cm, sc.sparse_classes);
  CHECK(report_json(direct) == report_json(via_cm));
  CHECK(direct.sample_count ==
        static_cast<Index>(sc.target_inputs.size()));
}

TEST_CASE("leave_five_out: fold slots and mean aggregation") {
  ScenarioConfig family = tiny_cfg();
  family.branching = 4;
  family.class_count = 12;
  family.shared_count = 10;
  family.source_shared_per_class = 3;
  family.source_nonshared_per_class = 2;
  family.target_per_class = 3;
  family.target_sparse_per_class = 2;

  std::vector<std::vector<Index>> seen_sparse;
  auto trainer = [&](const Scenario& sc) {
    seen_sparse.push_back(sc.sparse_classes);
    GadaModel model(sc.hierarchy, sc.mask, tiny_model_cfg(), 4);
    return evaluate(model, sc);
  };
  LfoReport rep = leave_five_out(trainer, family);
  REQUIRE(rep.folds.size() == 2);
  REQUIRE(seen_sparse.size() == 2);

  Scenario probe = sample_scenario(family);
  std::vector<Index> first(probe.shared_classes.begin(),
                           probe.shared_classes.begin() + 5);
  std::vector<Index> second(probe.shared_classes.begin() + 5,
                            probe.shared_classes.end());
  CHECK(seen_sparse[0] == first);
  CHECK(seen_sparse[1] == second);

  CHECK(rep.mean_sparse_f1 ==
        doctest::Approx((rep.folds[0].sparse_f1 + rep.folds[1].sparse_f1) /
                        2.0).epsilon(1e-15));
  CHECK(rep.mean_accuracy ==
        doctest::Approx((rep.folds[0].accuracy + rep.folds[1].accuracy) /
                        2.0).epsilon(1e-15));

  family.shared_count = 8;
  CHECK_THROWS_AS(leave_five_out(trainer, family), Error);
}

TEST_CASE("dump_embeddings: header, row budget, determinism") {
  Scenario sc = sample_scenario(tiny_cfg());
  GadaModel model(sc.hierarchy, sc.mask, tiny_model_cfg(), 14);
  testutil::TempDir dir("emb");
  dump_embeddings(model, sc, dir.file("e.csv"));
  std::string text = testutil::read_file(dir.file("e.csv"));

  std::vector<std::string> lines;
  size_t start = 0;
  while (start < text.size()) {
    size_t end = text.find('\n', start);
    if (end == std::string::npos) break;
    lines.push_back(text.substr(start, end - start));
    start = end + 1;
  }
  REQUIRE(lines.size() ==
          1 + sc.source_inputs.size() + sc.target_inputs.size());
  CHECK(lines[0] == "f0,f1,f2,f3,f4,f5,f6,f7,label,domain");
  CHECK(lines[1].substr(lines[1].size() - 2) == ",0");
  CHECK(lines.back().substr(lines.back().size() - 2) == ",1");

  dump_embeddings(model, sc, dir.file("e2.csv"));
  CHECK(testutil::read_file(dir.file("e2.csv")) == text);
}

TEST_CASE("report_json: parses back with identical fields") {
  ConfusionMatrix cm = make_cm({0, 3}, {7, 2, 1, 5});
  EvalReport r = report_from_confusion(cm, {3});
  nlohmann::json j = nlohmann::json::parse(report_json(r));
  CHECK(j["sample_count"].get<Index>() == r.sample_count);
  CHECK(j["accuracy"].get<double>() == r.accuracy);
  CHECK(j["macro_f1"].get<double>() == r.macro_f1);
  CHECK(j["sparse_f1"].get<double>() == r.sparse_f1);
  CHECK(j["nonsparse_f1"].get<double>() == r.nonsparse_f1);
  REQUIRE(j["per_class"].size() == 2);
  CHECK(j["per_class"][0]["class"].get<Index>() == 0);
  CHECK(j["per_class"][0]["precision"].get<double>() ==
        r.per_class[0].precision);
  CHECK(j["per_class"][1]["f1"].get<double>() == r.per_class[1].f1);
}

TEST_CASE("run config: entry parsing and file loading") {
  RunConfig cfg;
  apply_config_entry(cfg, "steps", "123", "test");
  CHECK(cfg.steps == 123);
  apply_config_entry(cfg, "seed", "7", "test");
  CHECK(cfg.has_seed);
  CHECK(cfg.seed == 7);
  apply_config_entry(cfg, "use_hgr", "false", "test");
  CHECK(!cfg.use_hgr);
  apply_config_entry(cfg, "nesterov", "1", "test");
  CHECK(cfg.nesterov);
  apply_config_entry(cfg, "gamma", "0.25", "test");
  CHECK(cfg.gamma == 0.25);
  apply_config_entry(cfg, "out", "/tmp/x", "test");
  CHECK(cfg.out_dir == "/tmp/x");
  apply_config_entry(cfg, "scenario.noise_sigma", "0.5", "test");
  REQUIRE(cfg.scenario_overrides.size() == 1);
  CHECK(cfg.scenario_overrides[0].first == "noise_sigma");

  bool threw = false;
  try {
    apply_config_entry(cfg, "no_such_key", "1", "ctx7");
  } catch (const Error& e) {
    threw = true;
    CHECK(std::string(e.what()).find("ctx7") != std::string::npos);
    CHECK(std::string(e.what()).find("no_such_key") != std::string::npos);
  }
  CHECK(threw);
  CHECK_THROWS_AS(apply_config_entry(cfg, "steps", "abc", "t"), Error);
  CHECK_THROWS_AS(apply_config_entry(cfg, "gamma", "sideways", "t"), Error);
  CHECK_THROWS_AS(apply_config_entry(cfg, "use_hgr", "maybe", "t"), Error);

  testutil::TempDir dir("cfg");
  testutil::write_file(dir.file("run.cfg"),
                       "# comment\nseed=4\n\nsteps=50\nbatch_size=8\n");
  RunConfig loaded = load_run_config(dir.file("run.cfg"));
  CHECK(loaded.seed == 4);
  CHECK(loaded.steps == 50);
  CHECK(loaded.batch_size == 8);

  testutil::write_file(dir.file("bad.cfg"), "seed=1\nsteps=2\nnot a pair\n");
  threw = false;
  try {
    load_run_config(dir.file("bad.cfg"));
  } catch (const Error& e) {
    threw = true;
    CHECK(std::string(e.what()).find("line 3") != std::string::npos);
  }
  CHECK(threw);
  CHECK_THROWS_AS(load_run_config(dir.file("absent.cfg")), Error);
}

TEST_CASE("run config: validation ranges") {
  RunConfig cfg;
  CHECK_THROWS_AS(validate_run_config(cfg), Error);  // missing seed
  cfg.has_seed = true;
  validate_run_config(cfg);  // defaults are valid

  RunConfig bad = cfg;
  bad.gamma = 1.5;
  CHECK_THROWS_AS(validate_run_config(bad), Error);
  bad = cfg;
  bad.batch_size = 0;
  CHECK_THROWS_AS(validate_run_config(bad), Error);
  bad = cfg;
  bad.learning_rate = -1e-3;
  CHECK_THROWS_AS(validate_run_config(bad), Error);
  bad = cfg;
  bad.ppr_alpha = 1.0;
  CHECK_THROWS_AS(validate_run_config(bad), Error);
  bad = cfg;
  bad.lambda2 = -0.1;
  CHECK_THROWS_AS(validate_run_config(bad), Error);
  bad = cfg;
  bad.grl_warmup = 1.01;
  CHECK_THROWS_AS(validate_run_config(bad), Error);
}

TEST_CASE("run config: manifest entries are sorted and omit the out dir") {
  RunConfig cfg;
  cfg.has_seed = true;
  cfg.seed = 9;
  cfg.out_dir = "/tmp/somewhere";
  std::vector<std::pair<std::string, std::string>> entries =
      config_entries(cfg);
  CHECK(std::is_sorted(entries.begin(), entries.end()));
  bool has_seed_key = false;
  for (auto& [k, v] : entries) {
    CHECK(k != "out");
    CHECK(v.find("/tmp/somewhere") == std::string::npos);
    if (k == "seed") {
      has_seed_key = true;
      CHECK(v == "9");
    }
  }
  CHECK(has_seed_key);

  // Scenario overrides appear with their prefix.
  apply_config_entry(cfg, "scenario.noise_sigma", "0.5", "t");
  entries = config_entries(cfg);
  bool found = false;
  for (auto& [k, v] : entries) {
    if (k == "scenario.noise_sigma") found = (v == "0.5");
  }
  CHECK(found);
}

TEST_CASE("resolve_scenario: presets, overrides, directories") {
  RunConfig cfg;
  cfg.has_seed = true;
  cfg.seed = 2;
  cfg.scenario = "imbalanced-source-10";
  apply_config_entry(cfg, "scenario.class_count", "6", "t");
  apply_config_entry(cfg, "scenario.shared_count", "2", "t");
  apply_config_entry(cfg, "scenario.source_shared_per_class", "2", "t");
  apply_config_entry(cfg, "scenario.source_nonshared_per_class", "2", "t");
  apply_config_entry(cfg, "scenario.target_per_class", "2", "t");
  apply_config_entry(cfg, "scenario.input_dim", "5", "t");
  apply_config_entry(cfg, "scenario.height", "2", "t");
  apply_config_entry(cfg, "scenario.width", "2", "t");
  Scenario s = resolve_scenario(cfg);
  CHECK(s.config.class_count == 6);
  CHECK(s.config.input_dim == 5);
  CHECK(s.config.source_shared_per_class == 2);  // override beats the preset

  // Unknown scenario: error names the presets.
  RunConfig unknown = cfg;
  unknown.scenario_overrides.clear();
  unknown.scenario = "definitely-not-a-scenario";
  bool threw = false;
  try {
    resolve_scenario(unknown);
  } catch (const Error& e) {
    threw = true;
    CHECK(std::string(e.what()).find("full-sparse") != std::string::npos);
  }
  CHECK(threw);

  // Directory loading round-trips; overrides on directories are rejected.
  testutil::TempDir dir("resolve");
  save_scenario(sample_scenario(tiny_cfg()), dir.str());
  RunConfig from_dir;
  from_dir.has_seed = true;
  from_dir.seed = 1;
  from_dir.scenario = dir.str();
  Scenario loaded = resolve_scenario(from_dir);
  CHECK(loaded.config.class_count == 4);
  apply_config_entry(from_dir, "scenario.noise_sigma", "0.1", "t");
  CHECK_THROWS_AS(resolve_scenario(from_dir), Error);
}

TEST_CASE("model_config_from / train_options_from: field plumbing") {
  RunConfig cfg;
  cfg.has_seed = true;
  cfg.seed = 5;
  cfg.feature_dim = 12;
  cfg.semantic_dim = 7;
  cfg.hidden_dim = 9;
  cfg.hgr_layers = 2;
  cfg.use_hgr = false;
  cfg.detach_attention = false;
  cfg.ppr_alpha = 0.6;
  cfg.ppr_tolerance = 1e-5;
  cfg.ppr_max_iterations = 33;
  cfg.steps = 77;
  cfg.batch_size = 5;
  cfg.eval_interval = 11;
  cfg.learning_rate = 0.5;
  cfg.momentum = 0.25;
  cfg.weight_decay = 0.125;
  cfg.nesterov = false;
  cfg.lambda1 = 1.5;
  cfg.lambda2 = 2.5;
  cfg.lambda3 = 3.5;
  cfg.gamma = 0.4;
  cfg.grl_eta = 0.8;
  cfg.grl_warmup = 0.2;

  ScenarioConfig sc = tiny_cfg();
  ModelConfig mc = model_config_from(cfg, sc);
  CHECK(mc.input_dim == sc.input_dim);
  CHECK(mc.height == sc.height);
  CHECK(mc.width == sc.width);
  CHECK(mc.hgr.feature_dim == 12);
  CHECK(mc.hgr.semantic_dim == 7);
  CHECK(mc.hgr.hidden_dim == 9);
  CHECK(mc.hgr.ppr.alpha == 0.6);
  CHECK(mc.hgr.ppr.tolerance == 1e-5);
  CHECK(mc.hgr.ppr.max_iterations == 33);
  CHECK(mc.hgr.detach_attention == false);
  CHECK(mc.hgr_layers == 2);
  CHECK(mc.use_hgr == false);

  TrainOptions to = train_options_from(cfg);
  CHECK(to.steps == 77);
  CHECK(to.batch_size == 5);
  CHECK(to.eval_interval == 11);
  CHECK(to.seed == 5);
  CHECK(to.opt.learning_rate == 0.5);
  CHECK(to.opt.momentum == 0.25);
  CHECK(to.opt.weight_decay == 0.125);
  CHECK(to.opt.nesterov == false);
  CHECK(to.objective.lambda1 == 1.5);
  CHECK(to.objective.lambda2 == 2.5);
  CHECK(to.objective.lambda3 == 3.5);
  CHECK(to.objective.gamma == 0.4);
  CHECK(to.objective.grl_eta_max == 0.8);
  CHECK(to.objective.grl_warmup_frac == 0.2);
}
