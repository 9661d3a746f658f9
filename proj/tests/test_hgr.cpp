#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "gada/gradcheck.hpp"
#include "gada/hgr.hpp"
#include "gada/rng.hpp"
#include "gada/synth.hpp"
#include "test_util.hpp"

using namespace gada;
using testutil::TempDir;
using testutil::zero_tensor;

namespace {

HgrConfig small_cfg() {
  HgrConfig cfg;
  cfg.feature_dim = 4;
  cfg.semantic_dim = 3;
  return cfg;
}

Tensor identity(Index n) {
  Tensor t(Shape{n, n});
  for (Index i = 0; i < n; ++i) t.at(i, i) = 1.0;
  return t;
}

/// relu(x W1 + b1) W2 + b2 by explicit loops; the hand oracle for both MLPs.
Tensor mlp_oracle(const Tensor& x, const Tensor& w1, const Tensor& b1,
                  const Tensor& w2, const Tensor& b2) {
  const Index rows = x.shape[0], hid = w1.shape[1], out_dim = w2.shape[1];
  Tensor h(Shape{rows, hid});
  for (Index r = 0; r < rows; ++r) {
    for (Index j = 0; j < hid; ++j) {
      double acc = 0;
      for (Index k = 0; k < x.shape[1]; ++k) acc += x.at(r, k) * w1.at(k, j);
      acc += b1.at(j);
      h.at(r, j) = acc > 0 ? acc : 0;
    }
  }
  Tensor out(Shape{rows, out_dim});
  for (Index r = 0; r < rows; ++r) {
    for (Index j = 0; j < out_dim; ++j) {
      double acc = 0;
      for (Index k = 0; k < hid; ++k) acc += h.at(r, k) * w2.at(k, j);
      out.at(r, j) = acc + b2.at(j);
    }
  }
  return out;
}

/// Eval-mode batch norm with the stored running statistics, by loops.
Tensor bn_eval_oracle(const Tensor& x, const BatchNormStats& stats,
                      const Tensor& gamma, const Tensor& beta) {
  Tensor out(x.shape);
  for (Index r = 0; r < x.shape[0]; ++r) {
    for (Index c = 0; c < x.shape[1]; ++c) {
      double xhat = (x.at(r, c) - stats.running_mean.at(c)) /
                    std::sqrt(stats.running_var.at(c) + stats.epsilon);
      out.at(r, c) = gamma.at(c) * xhat + beta.at(c);
    }
  }
  return out;
}

}  // namespace

TEST_CASE("local_to_semantic: zero, identity, and hand oracle") {
  Rng rng(3);
  HgrConfig cfg = small_cfg();

  SUBCASE("zero weights and biases give a zero matrix") {
    Rng r2(4);
    HgrParams p(cfg, 5, r2, "z.");
    zero_tensor(p.mlp_in_w1.value);
    zero_tensor(p.mlp_in_b1.value);
    zero_tensor(p.mlp_in_w2.value);
    zero_tensor(p.mlp_in_b2.value);
    Tensor out = local_to_semantic(rng.gaussian_tensor({6, 4}, 1.0), p, cfg);
    CHECK(out.shape == Shape{6, 3});
    CHECK(testutil::max_abs(out) == 0.0);
  }

  SUBCASE("identity MLP passes positive inputs through") {
    HgrConfig sq;
    sq.feature_dim = 3;
    sq.semantic_dim = 3;
    sq.hidden_dim = 3;
    Rng r2(4);
    HgrParams p(sq, 5, r2, "i.");
    p.mlp_in_w1.value = identity(3);
    zero_tensor(p.mlp_in_b1.value);
    p.mlp_in_w2.value = identity(3);
    zero_tensor(p.mlp_in_b2.value);
    Tensor x({4, 3});
    for (double& v : x.values) v = 0.1 + rng.uniform();
    Tensor out = local_to_semantic(x, p, sq);
    CHECK(bitwise_equal(out, x));
  }

  SUBCASE("random grid matches the loop oracle, 3d input flattened") {
    Rng r2(9);
    HgrParams p(cfg, 5, r2, "r.");
    Tensor grid = rng.gaussian_tensor({2, 2, 4}, 1.0);
    Tensor flat(Shape{4, 4}, grid.values);
    Tensor want = mlp_oracle(flat, p.mlp_in_w1.value, p.mlp_in_b1.value,
                             p.mlp_in_w2.value, p.mlp_in_b2.value);
    Tensor got = local_to_semantic(grid, p, cfg);
    CHECK(max_abs_diff(got, want) < 1e-13);
  }
}

TEST_CASE("attended_embeddings: identity, selection, dominance") {
  Rng rng(5);
  Tensor s = rng.gaussian_tensor({4, 3}, 1.0);

  Tensor same = attended_embeddings(Tensor::ones({4}), s);
  CHECK(bitwise_equal(same, s));

  Tensor pick(Shape{4});
  pick.at(2) = 1.0;
  Tensor only = attended_embeddings(pick, s);
  for (Index i = 0; i < 4; ++i) {
    for (Index j = 0; j < 3; ++j) {
      CHECK(only.at(i, j) == (i == 2 ? s.at(i, j) : 0.0));
    }
  }

  // hierarchy_attention on a one-hot prediction dominates at that leaf, so
  // the scaled embedding row with the largest norm is the predicted leaf's.
  HierarchyGraph star = testutil::star_graph(3);
  Tensor p1(Shape{3});
  p1.at(1) = 1.0;
  Tensor scores = hierarchy_attention(p1, star);
  Tensor emb = Tensor::ones({star.node_count, 2});
  Tensor att = attended_embeddings(scores, emb);
  Index best = 0;
  double best_norm = -1.0;
  for (Index i = 0; i < star.node_count; ++i) {
    double norm = att.at(i, 0) * att.at(i, 0) + att.at(i, 1) * att.at(i, 1);
    if (norm > best_norm) {
      best_norm = norm;
      best = i;
    }
  }
  CHECK(best == star.leaf_map[1]);
}

TEST_CASE("aggregate_to_nodes: normalization, uniform case, brute force") {
  Rng rng(6);

  SUBCASE("zero attention weights spread every location uniformly") {
    // Softmax normalizes per location over nodes, so each node collects
    // 1/N of every location's vector.
    Tensor xs = rng.gaussian_tensor({5, 3}, 1.0);
    Tensor wa(Shape{4, 3});
    Tensor out = aggregate_to_nodes(xs, wa);
    CHECK(out.shape == Shape{4, 3});
    for (Index n = 0; n < 4; ++n) {
      for (Index j = 0; j < 3; ++j) {
        double want = 0;
        for (Index i = 0; i < 5; ++i) want += xs.at(i, j) / 4.0;
        CHECK(out.at(n, j) == doctest::Approx(want).epsilon(1e-12));
      }
    }
  }

  SUBCASE("single location distributes itself by a unit-sum attention row") {
    Tensor xs = rng.gaussian_tensor({1, 3}, 1.0);
    Tensor wa = rng.gaussian_tensor({4, 3}, 0.8);
    Tensor out = aggregate_to_nodes(xs, wa);
    // Recompute the softmax row over nodes.
    std::vector<double> logits(4);
    double mx = -1e300;
    for (Index n = 0; n < 4; ++n) {
      double acc = 0;
      for (Index j = 0; j < 3; ++j) acc += xs.at(0, j) * wa.at(n, j);
      logits[static_cast<size_t>(n)] = acc;
      mx = std::max(mx, acc);
    }
    double z = 0;
    for (double& l : logits) {
      l = std::exp(l - mx);
      z += l;
    }
    double total = 0;
    for (Index n = 0; n < 4; ++n) {
      double a = logits[static_cast<size_t>(n)] / z;
      total += a;
      for (Index j = 0; j < 3; ++j) {
        CHECK(out.at(n, j) == doctest::Approx(a * xs.at(0, j)).epsilon(1e-12));
      }
    }
    CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
  }

  SUBCASE("random instance matches a brute-force double loop") {
    Tensor xs = rng.gaussian_tensor({4, 3}, 1.0);
    Tensor wa = rng.gaussian_tensor({3, 3}, 0.9);
    Tensor out = aggregate_to_nodes(xs, wa);
    Tensor want(Shape{3, 3});
    for (Index i = 0; i < 4; ++i) {
      std::vector<double> logits(3);
      double mx = -1e300;
      for (Index n = 0; n < 3; ++n) {
        double acc = 0;
        for (Index j = 0; j < 3; ++j) acc += xs.at(i, j) * wa.at(n, j);
        logits[static_cast<size_t>(n)] = acc;
        mx = std::max(mx, acc);
      }
      double z = 0;
      for (double& l : logits) {
        l = std::exp(l - mx);
        z += l;
      }
      for (Index n = 0; n < 3; ++n) {
        double a = logits[static_cast<size_t>(n)] / z;
        for (Index j = 0; j < 3; ++j) want.at(n, j) += a * xs.at(i, j);
      }
    }
    CHECK(max_abs_diff(out, want) < 1e-12);
  }
}

TEST_CASE("fuse_nodes: concat layout and eval-mode batch norm") {
  Rng rng(7);
  HgrConfig cfg = small_cfg();
  Rng r2(8);
  HgrParams p(cfg, 4, r2, "f.");
  Tensor agg = rng.gaussian_tensor({4, 3}, 1.2);
  Tensor sa = rng.gaussian_tensor({4, 3}, 0.5);
  Tensor out = fuse_nodes(agg, sa, p, Mode::eval);
  CHECK(out.shape == Shape{4, 6});
  // Right half is exactly the attended embeddings; left half is relu'd.
  Tensor left_want = bn_eval_oracle(agg, p.bn_nodes_stats,
                                    p.bn_nodes_gamma.value,
                                    p.bn_nodes_beta.value);
  for (Index i = 0; i < 4; ++i) {
    for (Index j = 0; j < 3; ++j) {
      CHECK(out.at(i, j + 3) == sa.at(i, j));
      CHECK(out.at(i, j) >= 0.0);
      double want = left_want.at(i, j) > 0 ? left_want.at(i, j) : 0.0;
      CHECK(out.at(i, j) == doctest::Approx(want).epsilon(1e-13));
    }
  }
}

TEST_CASE("graph_reason: zero weights, symmetry mixing, dense oracle") {
  Rng rng(9);
  HgrConfig cfg = small_cfg();

  SUBCASE("zero graph weights give zero output") {
    Rng r2(10);
    HgrParams p(cfg, 2, r2, "g0.");
    zero_tensor(p.graph_w.value);
    Tensor adj = Tensor::full({2, 2}, 0.5);
    Tensor out = graph_reason(rng.gaussian_tensor({2, 6}, 1.0), adj, p,
                              Mode::eval);
    CHECK(testutil::max_abs(out) == 0.0);
  }

  SUBCASE("two nodes with all-0.5 adjacency mix rows to their mean") {
    Rng r2(11);
    HgrParams p(cfg, 2, r2, "g1.");
    Tensor adj = Tensor::full({2, 2}, 0.5);
    Tensor fused = rng.gaussian_tensor({2, 6}, 1.0);
    Tensor out = graph_reason(fused, adj, p, Mode::eval);
    for (Index j = 0; j < 3; ++j) {
      CHECK(out.at(0, j) == doctest::Approx(out.at(1, j)).epsilon(1e-12));
    }
  }

  SUBCASE("random four-node instance matches the triple product oracle") {
    Rng r2(12);
    HgrParams p(cfg, 4, r2, "g2.");
    HierarchyGraph g = testutil::star_graph(3);
    REQUIRE(g.node_count == 4);
    Tensor adj = normalized_adjacency(g);
    Tensor fused = rng.gaussian_tensor({4, 6}, 1.0);
    Tensor got = graph_reason(fused, adj, p, Mode::eval);

    Tensor pre(Shape{4, 6});
    for (Index i = 0; i < 4; ++i) {
      for (Index j = 0; j < 6; ++j) {
        double acc = 0;
        for (Index k = 0; k < 4; ++k) acc += adj.at(i, k) * fused.at(k, j);
        pre.at(i, j) = acc;
      }
    }
    Tensor hsr(Shape{4, 3});
    for (Index i = 0; i < 4; ++i) {
      for (Index j = 0; j < 3; ++j) {
        double acc = 0;
        for (Index k = 0; k < 6; ++k) {
          acc += pre.at(i, k) * p.graph_w.value.at(k, j);
        }
        hsr.at(i, j) = acc;
      }
    }
    Tensor want = bn_eval_oracle(hsr, p.bn_reason_stats,
                                 p.bn_reason_gamma.value,
                                 p.bn_reason_beta.value);
    for (double& v : want.values) v = v > 0 ? v : 0;
    CHECK(max_abs_diff(got, want) < 1e-12);
  }
}

TEST_CASE("semantic_to_local: zero, identity, hand oracle") {
  Rng rng(13);

  SUBCASE("zero weights give zero output") {
    Rng r2(14);
    HgrParams p(small_cfg(), 4, r2, "s0.");
    zero_tensor(p.mlp_out_w1.value);
    zero_tensor(p.mlp_out_b1.value);
    zero_tensor(p.mlp_out_w2.value);
    zero_tensor(p.mlp_out_b2.value);
    Tensor out = semantic_to_local(rng.gaussian_tensor({4, 3}, 1.0), p);
    CHECK(testutil::max_abs(out) == 0.0);
  }

  SUBCASE("identity square MLP passes positives through") {
    HgrConfig sq;
    sq.feature_dim = 3;
    sq.semantic_dim = 3;
    sq.hidden_dim = 3;
    Rng r2(15);
    HgrParams p(sq, 4, r2, "s1.");
    p.mlp_out_w1.value = identity(3);
    zero_tensor(p.mlp_out_b1.value);
    p.mlp_out_w2.value = identity(3);
    zero_tensor(p.mlp_out_b2.value);
    Tensor x({4, 3});
    for (double& v : x.values) v = 0.05 + rng.uniform();
    CHECK(bitwise_equal(semantic_to_local(x, p), x));
  }

  SUBCASE("random instance matches the loop oracle") {
    Rng r2(16);
    HgrParams p(small_cfg(), 4, r2, "s2.");
    Tensor x = rng.gaussian_tensor({5, 3}, 1.0);
    Tensor want = mlp_oracle(x, p.mlp_out_w1.value, p.mlp_out_b1.value,
                             p.mlp_out_w2.value, p.mlp_out_b2.value);
    CHECK(max_abs_diff(semantic_to_local(x, p), want) < 1e-13);
  }
}

TEST_CASE("graph_to_local_attention: degenerate and brute-force cases") {
  Rng rng(17);

  SUBCASE("a single node is copied to every location") {
    Tensor x = rng.gaussian_tensor({3, 4}, 1.0);
    Tensor hl = rng.gaussian_tensor({1, 4}, 1.0);
    Tensor out = graph_to_local_attention(x, hl);
    for (Index i = 0; i < 3; ++i) {
      for (Index j = 0; j < 4; ++j) CHECK(out.at(i, j) == hl.at(0, j));
    }
  }

  SUBCASE("identical node vectors collapse to that vector") {
    Tensor x = rng.gaussian_tensor({3, 4}, 1.0);
    Tensor hl(Shape{5, 4});
    Tensor row = rng.gaussian_tensor({4}, 1.0);
    for (Index n = 0; n < 5; ++n) {
      for (Index j = 0; j < 4; ++j) hl.at(n, j) = row.at(j);
    }
    Tensor out = graph_to_local_attention(x, hl);
    for (Index i = 0; i < 3; ++i) {
      for (Index j = 0; j < 4; ++j) {
        CHECK(out.at(i, j) == doctest::Approx(row.at(j)).epsilon(1e-12));
      }
    }
  }

  SUBCASE("random 4x3 instance matches the scaled softmax oracle") {
    Tensor x = rng.gaussian_tensor({4, 3}, 1.0);
    Tensor hl = rng.gaussian_tensor({5, 3}, 1.0);
    Tensor got = graph_to_local_attention(x, hl);
    const double scale = 1.0 / std::sqrt(3.0);
    Tensor want(Shape{4, 3});
    for (Index i = 0; i < 4; ++i) {
      std::vector<double> logits(5);
      double mx = -1e300;
      for (Index n = 0; n < 5; ++n) {
        double acc = 0;
        for (Index j = 0; j < 3; ++j) acc += x.at(i, j) * hl.at(n, j);
        logits[static_cast<size_t>(n)] = acc * scale;
        mx = std::max(mx, logits[static_cast<size_t>(n)]);
      }
      double z = 0;
      for (double& l : logits) {
        l = std::exp(l - mx);
        z += l;
      }
      for (Index n = 0; n < 5; ++n) {
        double a = logits[static_cast<size_t>(n)] / z;
        for (Index j = 0; j < 3; ++j) want.at(i, j) += a * hl.at(n, j);
      }
    }
    CHECK(max_abs_diff(got, want) < 1e-12);
  }
}

TEST_CASE("hgr_forward: residual identity and sub-op composition") {
  Rng data_rng(31);
  HierarchyGraph g = random_tree(77, 8);
  HgrConfig cfg = small_cfg();

  SUBCASE("zero mlp_out makes the layer a bitwise identity") {
    Rng rng(32);
    HgrLayer layer(g, cfg, rng, "rid.");
    zero_tensor(layer.params().mlp_out_w2.value);
    zero_tensor(layer.params().mlp_out_b2.value);
    for (int i = 0; i < 5; ++i) {
      Tensor x = data_rng.gaussian_tensor({6, 4}, 1.5);
      Tensor p1 = Tensor::full({g.leaf_count()},
                               1.0 / static_cast<double>(g.leaf_count()));
      Tensor out = hgr_forward(layer, x, p1, Mode::eval);
      CHECK(bitwise_equal(out, x));
    }
  }

  SUBCASE("the full layer equals the composition of its sub-ops") {
    Rng rng(33);
    HgrLayer layer(g, cfg, rng, "cmp.");
    HgrParams& p = layer.params();
    Tensor x = data_rng.gaussian_tensor({6, 4}, 1.0);
    Tensor p1 = Tensor::full({g.leaf_count()},
                             1.0 / static_cast<double>(g.leaf_count()));

    Tensor xs = local_to_semantic(x, p, cfg);
    Tensor scores = hierarchy_attention(p1, g, cfg.ppr);
    Tensor sa = attended_embeddings(scores, p.node_embed.value);
    Tensor agg = aggregate_to_nodes(xs, p.attn_w.value);
    Tensor fused = fuse_nodes(agg, sa, p, Mode::eval);
    Tensor reasoned = graph_reason(fused, layer.norm_adj(), p, Mode::eval);
    Tensor hl = semantic_to_local(reasoned, p);
    Tensor delta = graph_to_local_attention(x, hl);
    Tensor want(x.shape);
    for (Index i = 0; i < x.numel(); ++i) {
      want.at(i) = x.at(i) + delta.at(i);
    }
    Tensor got = hgr_forward(layer, x, p1, Mode::eval);
    CHECK(max_abs_diff(got, want) < 1e-12);
  }

  SUBCASE("the output minus delta direction: out == in + delta bitwise") {
    // Asserted in the direction the layer computes; (out - in) == delta
    // would be fp-unsound.
    Rng rng(34);
    HgrLayer layer(g, cfg, rng, "dir.");
    HgrParams& p = layer.params();
    Tensor x = data_rng.gaussian_tensor({6, 4}, 1.0);
    Tensor p1 = Tensor::full({g.leaf_count()},
                             1.0 / static_cast<double>(g.leaf_count()));
    Tensor xs = local_to_semantic(x, p, cfg);
    Tensor scores = hierarchy_attention(p1, g, cfg.ppr);
    Tensor sa = attended_embeddings(scores, p.node_embed.value);
    Tensor agg = aggregate_to_nodes(xs, p.attn_w.value);
    Tensor fused = fuse_nodes(agg, sa, p, Mode::eval);
    Tensor reasoned = graph_reason(fused, layer.norm_adj(), p, Mode::eval);
    Tensor hl = semantic_to_local(reasoned, p);
    Tensor delta = graph_to_local_attention(x, hl);
    Tensor got = hgr_forward(layer, x, p1, Mode::eval);
    for (Index i = 0; i < x.numel(); ++i) {
      CHECK(got.at(i) == x.at(i) + delta.at(i));
    }
  }
}

TEST_CASE("hgr layer: batching does not change eval-mode per-sample output") {
  Rng rng(35);
  HierarchyGraph g = random_tree(5, 8);
  HgrLayer layer(g, small_cfg(), rng, "b.");
  Rng data(36);
  Tensor x0 = data.gaussian_tensor({6, 4}, 1.0);
  Tensor x1 = data.gaussian_tensor({6, 4}, 1.0);
  Tensor p1 = Tensor::full({g.leaf_count()},
                           1.0 / static_cast<double>(g.leaf_count()));

  Graph single;
  auto s_out = layer.forward(single, {single.input(x0)}, {p1}, Mode::eval);
  Graph batched;
  auto b_out = layer.forward(batched,
                             {batched.input(x0), batched.input(x1)},
                             {p1, p1}, Mode::eval);
  CHECK(max_abs_diff(single.value(s_out[0]), batched.value(b_out[0])) == 0.0);
}

TEST_CASE("hgr layer: attached attention converges to the detached values") {
  Rng rng(37);
  HierarchyGraph g = random_tree(11, 8);
  HgrConfig cfg = small_cfg();
  cfg.ppr.max_iterations = 200;
  cfg.ppr.tolerance = 0.0;  // force the full unroll count on both paths
  HgrLayer layer(g, cfg, rng, "a.");
  Rng data(38);
  Tensor x = data.gaussian_tensor({6, 4}, 1.0);
  Tensor p1(Shape{g.leaf_count()});
  for (double& v : p1.values) v = 1.0;
  double z = p1.sum();
  for (double& v : p1.values) v /= z;

  Graph gd;
  auto det = layer.forward(gd, {gd.input(x)}, {p1}, Mode::eval);
  Graph ga;
  auto att = layer.forward_attached(ga, {ga.input(x)}, {ga.input(p1)},
                                    Mode::eval);
  CHECK(max_abs_diff(gd.value(det[0]), ga.value(att[0])) < 1e-9);
}

TEST_CASE("hgr layer: gradients match finite differences") {
  Rng rng(39);
  HierarchyGraph g = random_tree(3, 8);
  HgrConfig cfg = small_cfg();
  HgrLayer layer(g, cfg, rng, "gc.");
  Rng data(40);
  Tensor x = data.gaussian_tensor({4, 4}, 1.0);
  Tensor p1 = Tensor::full({g.leaf_count()},
                           1.0 / static_cast<double>(g.leaf_count()));

  SUBCASE("detached attention") {
    auto build = [&](Graph& gr) -> Var {
      auto out = layer.forward(gr, {gr.input(x)}, {p1}, Mode::eval);
      return gr.sum(gr.mul(out[0], out[0]));
    };
    FiniteDiffReport rep =
        finite_diff_check(build, layer.params().trainable(), {});
    CHECK(rep.max_rel_error < 1e-4);
  }

  SUBCASE("attached attention differentiates through the unrolled ppr") {
    cfg.ppr.max_iterations = 15;
    HgrLayer att_layer(g, cfg, rng, "gca.");
    auto build = [&](Graph& gr) -> Var {
      auto out = att_layer.forward_attached(gr, {gr.input(x)},
                                            {gr.input(p1)}, Mode::eval);
      return gr.sum(gr.mul(out[0], out[0]));
    };
    FiniteDiffReport rep =
        finite_diff_check(build, att_layer.params().trainable(), {});
    CHECK(rep.max_rel_error < 1e-4);
  }
}

TEST_CASE("hgr layer: train mode advances batch-norm running statistics") {
  Rng rng(41);
  HierarchyGraph g = random_tree(13, 8);
  HgrLayer layer(g, small_cfg(), rng, "bn.");
  Tensor before = layer.params().bn_nodes_stats.running_mean;
  Rng data(42);
  Tensor x = data.gaussian_tensor({6, 4}, 1.0);
  Tensor p1 = Tensor::full({g.leaf_count()},
                           1.0 / static_cast<double>(g.leaf_count()));
  hgr_forward(layer, x, p1, Mode::train);
  CHECK(!bitwise_equal(before, layer.params().bn_nodes_stats.running_mean));
}

TEST_CASE("node embeddings: file round-trip and shape guards") {
  TempDir dir("emb");
  Rng rng(43);
  Tensor s = rng.gaussian_tensor({7, 3}, 0.5);
  save_node_embeddings(dir.file("s.bin"), s);
  Tensor r = load_node_embeddings(dir.file("s.bin"));
  CHECK(bitwise_equal(r, s));

  testutil::write_file(dir.file("short.bin"), "xx");
  CHECK_THROWS_AS(load_node_embeddings(dir.file("short.bin")), Error);
  CHECK_THROWS_AS(load_node_embeddings(dir.file("absent.bin")), Error);

  HierarchyGraph g = random_tree(9, 8);
  HgrLayer layer(g, small_cfg(), rng, "se.");
  CHECK_THROWS_AS(layer.set_node_embeddings(Tensor(Shape{2, 2})), Error);
  Tensor good = rng.gaussian_tensor({g.node_count, 3}, 0.1);
  layer.set_node_embeddings(good);
  CHECK(bitwise_equal(layer.params().node_embed.value, good));
}
