#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <sys/wait.h>

#include <cstdio>
#include <string>
#include <vector>

#include "gada/checkpoint.hpp"
#include "gada/runconfig.hpp"
#include "test_util.hpp"

using namespace gada;

namespace {

struct CliResult {
  int exit_code = -1;
  std::string output;  // stdout and stderr interleaved
};

CliResult run_cli(const std::string& args) {
  CliResult r;
  const std::string cmd = std::string(GADA_BIN) + " " + args + " 2>&1";
  FILE* pipe = popen(cmd.c_str(), "r");
  REQUIRE(pipe != nullptr);
  char buf[4096];
  size_t n;
  while ((n = fread(buf, 1, sizeof buf, pipe)) > 0) r.output.append(buf, n);
  const int status = pclose(pipe);
  r.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

/// Flat config describing a six-class toy run small enough for CLI tests.
std::string tiny_config_text() {
  return "scenario=imbalanced-source-10\n"
         "scenario.class_count=6\n"
         "scenario.shared_count=2\n"
         "scenario.depth=2\n"
         "scenario.branching=3\n"
         "scenario.height=2\n"
         "scenario.width=2\n"
         "scenario.input_dim=6\n"
         "scenario.source_shared_per_class=4\n"
         "scenario.source_nonshared_per_class=4\n"
         "scenario.target_per_class=4\n"
         "feature_dim=8\n"
         "semantic_dim=4\n"
         "batch_size=4\n"
         "eval_interval=5\n"
         "steps=10\n";
}

bool same_file_bytes(const std::string& a, const std::string& b) {
  return testutil::read_file(a) == testutil::read_file(b);
}

}  // namespace

TEST_CASE("cli: version flag and subcommand requirement") {
  CliResult v = run_cli("--version");
  CHECK(v.exit_code == 0);
  CHECK(v.output.find("0.1.0") != std::string::npos);

  CliResult none = run_cli("");
  CHECK(none.exit_code != 0);

  CliResult bad = run_cli("verify no-such-suite");
  CHECK(bad.exit_code != 0);
}

TEST_CASE("cli: verify suites pass") {
  CliResult ppr = run_cli("verify ppr --seed 1");
  CHECK(ppr.exit_code == 0);
  CHECK(ppr.output.find("PASS") != std::string::npos);
  CHECK(ppr.output.find("FAIL") == std::string::npos);
  CHECK(ppr.output.find("checks passed") != std::string::npos);

  CliResult inv = run_cli("verify invariants --seed 1");
  CHECK(inv.exit_code == 0);
  CHECK(inv.output.find("FAIL") == std::string::npos);
  CHECK(inv.output.find("checks passed") != std::string::npos);
}

TEST_CASE("cli: gen is byte-deterministic and stamps its manifest") {
  testutil::TempDir dir("cli-gen");
  testutil::write_file(dir.file("tiny.cfg"), tiny_config_text());
  const std::string base = "gen --config " + dir.file("tiny.cfg") +
                           " --seed 3 --out ";
  CliResult g1 = run_cli(base + dir.file("g1"));
  REQUIRE(g1.exit_code == 0);
  CliResult g2 = run_cli(base + dir.file("g2"));
  REQUIRE(g2.exit_code == 0);

  for (const char* name :
       {"hierarchy.edges", "hierarchy.leaves", "source.bin", "target.bin",
        "labels.csv", "scenario.txt", "manifest.txt"}) {
    CHECK(same_file_bytes(dir.file("g1/") + name, dir.file("g2/") + name));
  }
  const std::string manifest = testutil::read_file(dir.file("g1/manifest.txt"));
  CHECK(manifest.find("command=gen\n") != std::string::npos);
  CHECK(manifest.find("version=0.1.0\n") != std::string::npos);
  CHECK(manifest.find("seed=3\n") != std::string::npos);
  CHECK(manifest.find("out=") == std::string::npos);
}

TEST_CASE("cli: train is byte-deterministic across reruns") {
  testutil::TempDir dir("cli-train");
  testutil::write_file(dir.file("tiny.cfg"), tiny_config_text());
  const std::string base = "train --config " + dir.file("tiny.cfg") +
                           " --seed 5 --out ";
  CliResult t1 = run_cli(base + dir.file("t1"));
  REQUIRE(t1.exit_code == 0);
  CHECK(t1.output.find("accuracy") != std::string::npos);
  CliResult t2 = run_cli(base + dir.file("t2"));
  REQUIRE(t2.exit_code == 0);

  for (const char* name :
       {"log.ndjson", "checkpoint.bin", "report.json", "manifest.txt"}) {
    CHECK(same_file_bytes(dir.file("t1/") + name, dir.file("t2/") + name));
  }
  // One NDJSON record per step.
  const std::string log = testutil::read_file(dir.file("t1/log.ndjson"));
  Index lines = 0;
  for (char c : log) lines += (c == '\n') ? 1 : 0;
  CHECK(lines == 10);
}

TEST_CASE("cli: zero-step training checkpoints the untouched initialization") {
  testutil::TempDir dir("cli-steps0");
  testutil::write_file(dir.file("tiny.cfg"), tiny_config_text());
  CliResult t = run_cli("train --config " + dir.file("tiny.cfg") +
                        " --seed 9 --steps 0 --out " + dir.file("t0"));
  REQUIRE(t.exit_code == 0);

  RunConfig cfg = load_run_config(dir.file("tiny.cfg"));
  apply_config_entry(cfg, "seed", "9", "test");
  Scenario sc = resolve_scenario(cfg);
  GadaModel fresh(sc.hierarchy, sc.mask, model_config_from(cfg, sc.config),
                  cfg.seed);
  auto saved = load_checkpoint(dir.file("t0/checkpoint.bin"));
  auto state = fresh.state();
  REQUIRE(saved.size() == state.size());
  for (size_t i = 0; i < saved.size(); ++i) {
    CHECK(saved[i].first == state[i].first);
    CHECK(bitwise_equal(saved[i].second, *state[i].second));
  }
  CHECK(testutil::read_file(dir.file("t0/log.ndjson")).empty());
}

TEST_CASE("cli: eval reproduces the training report from the checkpoint") {
  testutil::TempDir dir("cli-eval");
  testutil::write_file(dir.file("tiny.cfg"), tiny_config_text());
  CliResult t = run_cli("train --config " + dir.file("tiny.cfg") +
                        " --seed 6 --out " + dir.file("t"));
  REQUIRE(t.exit_code == 0);
  CliResult e = run_cli("eval --config " + dir.file("tiny.cfg") +
                        " --seed 6 --checkpoint " +
                        dir.file("t/checkpoint.bin") + " --out " +
                        dir.file("e"));
  REQUIRE(e.exit_code == 0);
  CHECK(same_file_bytes(dir.file("t/report.json"), dir.file("e/report.json")));

  const std::string csv = testutil::read_file(dir.file("e/embeddings.csv"));
  CHECK(csv.substr(0, 3) == "f0,");
  Index rows = 0;
  for (char c : csv) rows += (c == '\n') ? 1 : 0;
  // Header plus one row per source and target sample:
  // 2 shared x 4 + 4 non-shared x 4 source, 2 x 4 target.
  CHECK(rows == 1 + 24 + 8);

  CliResult no_ckpt = run_cli("eval --config " + dir.file("tiny.cfg") +
                              " --seed 6 --out " + dir.file("e2"));
  CHECK(no_ckpt.exit_code != 0);
  CHECK(no_ckpt.output.find("checkpoint") != std::string::npos);
}

TEST_CASE("cli: flags override the config file") {
  testutil::TempDir dir("cli-override");
  testutil::write_file(dir.file("tiny.cfg"), tiny_config_text());
  CliResult t = run_cli("train --config " + dir.file("tiny.cfg") +
                        " --seed 2 --steps 2 --no-hgr --out " +
                        dir.file("t"));
  REQUIRE(t.exit_code == 0);
  const std::string manifest = testutil::read_file(dir.file("t/manifest.txt"));
  CHECK(manifest.find("steps=2\n") != std::string::npos);
  CHECK(manifest.find("use_hgr=false\n") != std::string::npos);
  const std::string log = testutil::read_file(dir.file("t/log.ndjson"));
  Index lines = 0;
  for (char c : log) lines += (c == '\n') ? 1 : 0;
  CHECK(lines == 2);
}

TEST_CASE("cli: error paths carry actionable messages") {
  testutil::TempDir dir("cli-errors");
  testutil::write_file(dir.file("tiny.cfg"), tiny_config_text());

  CliResult no_seed = run_cli("train --config " + dir.file("tiny.cfg") +
                              " --out " + dir.file("x"));
  CHECK(no_seed.exit_code != 0);
  CHECK(no_seed.output.find("seed is required") != std::string::npos);

  CliResult no_out = run_cli("train --config " + dir.file("tiny.cfg") +
                             " --seed 1");
  CHECK(no_out.exit_code != 0);
  CHECK(no_out.output.find("output directory") != std::string::npos);

  CliResult bad_scen = run_cli("train --scenario not-a-thing --seed 1 --out " +
                               dir.file("y"));
  CHECK(bad_scen.exit_code != 0);
  CHECK(bad_scen.output.find("not a preset") != std::string::npos);
  CHECK(bad_scen.output.find("imbalanced-source-10") != std::string::npos);

  testutil::write_file(dir.file("bad.cfg"), "seed=1\nsteps oops\n");
  CliResult bad_cfg = run_cli("train --config " + dir.file("bad.cfg") +
                              " --out " + dir.file("z"));
  CHECK(bad_cfg.exit_code != 0);
  CHECK(bad_cfg.output.find("line 2") != std::string::npos);
}
