#include "gada/hgr.hpp"

#include <cmath>
#include <fstream>

#include "binio.hpp"

namespace gada {

namespace {

Tensor flatten_grid(const Tensor& x, Index feature_dim, const char* op) {
  if (x.rank() == 2) {
    require(x.shape[1] == feature_dim,
            std::string(op) + ": feature width " + std::to_string(x.shape[1]) +
                " does not match configured " + std::to_string(feature_dim));
    return x;
  }
  require(x.rank() == 3 && x.shape[2] == feature_dim,
          std::string(op) + ": expected [(H W), " +
              std::to_string(feature_dim) + "] or [H, W, " +
              std::to_string(feature_dim) + "], got " + shape_str(x.shape));
  return Tensor(Shape{x.shape[0] * x.shape[1], x.shape[2]}, x.values);
}

Index validate_layer_dims(Index node_count, const HgrConfig& cfg) {
  require(node_count > 0, "hgr: node count must be positive");
  require(cfg.feature_dim > 0 && cfg.semantic_dim > 0,
          "hgr: feature_dim and semantic_dim must be positive");
  return node_count;
}

Tensor init_weight(Rng& rng, Index fan_in, Shape shape) {
  return rng.gaussian_tensor(std::move(shape),
                             1.0 / std::sqrt(static_cast<double>(fan_in)));
}

}  // namespace

HgrParams::HgrParams(const HgrConfig& cfg, Index node_count, Rng& rng,
                     const std::string& prefix)
    : node_embed(prefix + "node_embed",
                 rng.gaussian_tensor(
                     Shape{validate_layer_dims(node_count, cfg),
                           cfg.semantic_dim},
                     0.02),
                 false),
      mlp_in_w1(prefix + "mlp_in.w1",
                init_weight(rng, cfg.feature_dim,
                            Shape{cfg.feature_dim, cfg.resolved_hidden()})),
      mlp_in_b1(prefix + "mlp_in.b1", Tensor(Shape{cfg.resolved_hidden()}),
                false),
      mlp_in_w2(prefix + "mlp_in.w2",
                init_weight(rng, cfg.resolved_hidden(),
                            Shape{cfg.resolved_hidden(), cfg.semantic_dim})),
      mlp_in_b2(prefix + "mlp_in.b2", Tensor(Shape{cfg.semantic_dim}), false),
      attn_w(prefix + "attn_w",
             init_weight(rng, cfg.semantic_dim,
                         Shape{node_count, cfg.semantic_dim})),
      bn_nodes_gamma(prefix + "bn_nodes.gamma",
                     Tensor::ones(Shape{cfg.semantic_dim}), false),
      bn_nodes_beta(prefix + "bn_nodes.beta", Tensor(Shape{cfg.semantic_dim}),
                    false),
      bn_nodes_stats(cfg.semantic_dim),
      graph_w(prefix + "graph_w",
              init_weight(rng, 2 * cfg.semantic_dim,
                          Shape{2 * cfg.semantic_dim, cfg.semantic_dim})),
      bn_reason_gamma(prefix + "bn_reason.gamma",
                      Tensor::ones(Shape{cfg.semantic_dim}), false),
      bn_reason_beta(prefix + "bn_reason.beta",
                     Tensor(Shape{cfg.semantic_dim}), false),
      bn_reason_stats(cfg.semantic_dim),
      mlp_out_w1(prefix + "mlp_out.w1",
                 init_weight(rng, cfg.semantic_dim,
                             Shape{cfg.semantic_dim, cfg.resolved_hidden()})),
      mlp_out_b1(prefix + "mlp_out.b1", Tensor(Shape{cfg.resolved_hidden()}),
                 false),
      mlp_out_w2(prefix + "mlp_out.w2",
                 init_weight(rng, cfg.resolved_hidden(),
                             Shape{cfg.resolved_hidden(), cfg.feature_dim})),
      mlp_out_b2(prefix + "mlp_out.b2", Tensor(Shape{cfg.feature_dim}),
                 false) {}

std::vector<Parameter*> HgrParams::trainable() {
  return {&node_embed,      &mlp_in_w1,      &mlp_in_b1,  &mlp_in_w2,
          &mlp_in_b2,       &attn_w,         &bn_nodes_gamma,
          &bn_nodes_beta,   &graph_w,        &bn_reason_gamma,
          &bn_reason_beta,  &mlp_out_w1,     &mlp_out_b1, &mlp_out_w2,
          &mlp_out_b2};
}

std::vector<std::pair<std::string, Tensor*>> HgrParams::state() {
  std::vector<std::pair<std::string, Tensor*>> out;
  for (Parameter* p : trainable()) out.emplace_back(p->name, &p->value);
  const std::string base =
      node_embed.name.substr(0, node_embed.name.size() -
                                    std::string("node_embed").size());
  out.emplace_back(base + "bn_nodes.running_mean",
                   &bn_nodes_stats.running_mean);
  out.emplace_back(base + "bn_nodes.running_var", &bn_nodes_stats.running_var);
  out.emplace_back(base + "bn_reason.running_mean",
                   &bn_reason_stats.running_mean);
  out.emplace_back(base + "bn_reason.running_var",
                   &bn_reason_stats.running_var);
  return out;
}

HgrLayer::HgrLayer(const HierarchyGraph& graph, const HgrConfig& cfg, Rng& rng,
                   const std::string& prefix)
    : cfg_(cfg),
      node_count_(graph.node_count),
      leaf_map_(graph.leaf_map),
      norm_adj_(normalized_adjacency(graph)),
      transition_(transition_matrix(graph)),
      params_(cfg, graph.node_count, rng, prefix) {}

void HgrLayer::set_node_embeddings(const Tensor& s) {
  require(s.rank() == 2 && s.shape[0] == node_count_ &&
              s.shape[1] == cfg_.semantic_dim,
          "hgr: node embeddings must be [" + std::to_string(node_count_) +
              "," + std::to_string(cfg_.semantic_dim) + "], got " +
              shape_str(s.shape));
  params_.node_embed.value.values = s.values;
}

std::vector<Var> HgrLayer::forward(Graph& g, const std::vector<Var>& x,
                                   const std::vector<Tensor>& p1, Mode mode) {
  require(x.size() == p1.size(),
          "hgr: batch has " + std::to_string(x.size()) + " samples but " +
              std::to_string(p1.size()) + " predictions");
  return forward_impl(g, x, &p1, nullptr, mode);
}

std::vector<Var> HgrLayer::forward_attached(Graph& g,
                                            const std::vector<Var>& x,
                                            const std::vector<Var>& p1,
                                            Mode mode) {
  require(x.size() == p1.size(),
          "hgr: batch has " + std::to_string(x.size()) + " samples but " +
              std::to_string(p1.size()) + " predictions");
  return forward_impl(g, x, nullptr, &p1, mode);
}

std::vector<Var> HgrLayer::forward_impl(Graph& g, const std::vector<Var>& x,
                                        const std::vector<Tensor>* p1_data,
                                        const std::vector<Var>* p1_vars,
                                        Mode mode) {
  const Index batch = static_cast<Index>(x.size());
  require(batch > 0, "hgr: empty batch");
  const Index n = node_count_;
  const Index dl = cfg_.feature_dim;

  Var s = g.leaf(params_.node_embed);
  Var in_w1 = g.leaf(params_.mlp_in_w1);
  Var in_b1 = g.leaf(params_.mlp_in_b1);
  Var in_w2 = g.leaf(params_.mlp_in_w2);
  Var in_b2 = g.leaf(params_.mlp_in_b2);
  Var wa_t = g.transpose(g.leaf(params_.attn_w));  // [D^S, N]
  Var bn1_g = g.leaf(params_.bn_nodes_gamma);
  Var bn1_b = g.leaf(params_.bn_nodes_beta);
  Var gw = g.leaf(params_.graph_w);
  Var bn2_g = g.leaf(params_.bn_reason_gamma);
  Var bn2_b = g.leaf(params_.bn_reason_beta);
  Var out_w1 = g.leaf(params_.mlp_out_w1);
  Var out_b1 = g.leaf(params_.mlp_out_b1);
  Var out_w2 = g.leaf(params_.mlp_out_w2);
  Var out_b2 = g.leaf(params_.mlp_out_b2);
  Var adj = g.input(norm_adj_);

  std::vector<Var> hs_parts, sa_parts;
  hs_parts.reserve(static_cast<std::size_t>(batch));
  sa_parts.reserve(static_cast<std::size_t>(batch));
  for (Index b = 0; b < batch; ++b) {
    const std::size_t bi = static_cast<std::size_t>(b);
    const Tensor& xv = g.value(x[bi]);
    require(xv.rank() == 2 && xv.shape[1] == dl,
            "hgr: sample " + std::to_string(b) + " has shape " +
                shape_str(xv.shape) + ", expected [*," + std::to_string(dl) +
                "]");
    Var h = g.relu(g.add_rowvec(g.matmul(x[bi], in_w1), in_b1));
    Var xs = g.add_rowvec(g.matmul(h, in_w2), in_b2);  // [(H W), D^S]
    Var att = g.softmax(g.matmul(xs, wa_t), 1);        // [(H W), N]
    hs_parts.push_back(g.matmul(g.transpose(att), xs));  // [N, D^S]

    Var scores;
    if (p1_data) {
      scores = g.input(attention_scores((*p1_data)[bi]));
    } else {
      scores = build_attention_scores(g, (*p1_vars)[bi]);
    }
    sa_parts.push_back(g.row_scale(s, scores));
  }

  Var hs_all = batch == 1 ? hs_parts[0] : g.concat(hs_parts, 0);
  Var sa_all = batch == 1 ? sa_parts[0] : g.concat(sa_parts, 0);
  Var r1 =
      g.relu(g.batch_norm(hs_all, bn1_g, bn1_b, params_.bn_nodes_stats, mode));
  Var fused = g.concat({r1, sa_all}, 1);  // [(batch N), 2 D^S]

  Var pre;
  if (batch == 1) {
    pre = g.matmul(adj, fused);
  } else {
    std::vector<Var> parts;
    parts.reserve(static_cast<std::size_t>(batch));
    for (Index b = 0; b < batch; ++b)
      parts.push_back(g.matmul(adj, g.slice_rows(fused, b * n, n)));
    pre = g.concat(parts, 0);
  }
  Var hsr = g.matmul(pre, gw);  // [(batch N), D^S]
  Var r2 = g.relu(
      g.batch_norm(hsr, bn2_g, bn2_b, params_.bn_reason_stats, mode));
  Var hh = g.relu(g.add_rowvec(g.matmul(r2, out_w1), out_b1));
  Var hl_all = g.add_rowvec(g.matmul(hh, out_w2), out_b2);  // [(batch N), D^l]

  const double inv_sqrt_d = 1.0 / std::sqrt(static_cast<double>(dl));
  std::vector<Var> out;
  out.reserve(static_cast<std::size_t>(batch));
  for (Index b = 0; b < batch; ++b) {
    const std::size_t bi = static_cast<std::size_t>(b);
    Var hl = batch == 1 ? hl_all : g.slice_rows(hl_all, b * n, n);
    Var sc = g.scale(g.matmul(x[bi], g.transpose(hl)), inv_sqrt_d);
    Var w = g.softmax(sc, 1);
    out.push_back(g.add(x[bi], g.matmul(w, hl)));
  }
  return out;
}

Tensor HgrLayer::attention_scores(const Tensor& p1) const {
  const Index k = static_cast<Index>(leaf_map_.size());
  require(p1.rank() == 1 && p1.numel() == k,
          "hgr: class prediction must be [" + std::to_string(k) + "], got " +
              shape_str(p1.shape));
  double total = 0.0;
  for (Index i = 0; i < k; ++i) total += p1.at(i);
  require(std::fabs(total - 1.0) <= 1e-9,
          "hgr: class prediction sums to " + std::to_string(total) +
              ", expected 1");
  Tensor expanded(Shape{node_count_});
  for (Index c = 0; c < k; ++c)
    expanded.at(leaf_map_[static_cast<std::size_t>(c)]) = p1.at(c);
  Tensor v(Shape{node_count_});
  for (Index i = 0; i < node_count_; ++i) v.at(i) = expanded.at(i) / total;
  Tensor scores = ppr_power(transition_, v, cfg_.ppr);
  for (Index i = 0; i < node_count_; ++i) scores.at(i) += expanded.at(i);
  return scores;
}

Var HgrLayer::build_attention_scores(Graph& g, Var p1) {
  const Tensor& pv = g.value(p1);
  const Index k = static_cast<Index>(leaf_map_.size());
  require(pv.rank() == 1 && pv.numel() == k,
          "hgr: class prediction must be [" + std::to_string(k) + "], got " +
              shape_str(pv.shape));
  // Assumes simplex input (softmax output); the fixed-length unrolled power
  // iteration keeps gradients smooth, converged steps are numeric no-ops.
  Var expanded = g.scatter(p1, leaf_map_, node_count_);
  Var v = g.reshape(expanded, Shape{node_count_, 1});
  Var pmat = g.input(transition_);
  Var a = v;
  for (Index it = 0; it < cfg_.ppr.max_iterations; ++it) {
    a = g.add(g.scale(v, cfg_.ppr.alpha),
              g.scale(g.matmul(pmat, a), 1.0 - cfg_.ppr.alpha));
  }
  return g.add(g.reshape(a, Shape{node_count_}), expanded);
}

Tensor HgrLayer::forward_value(const Tensor& grid, const Tensor& p1,
                               Mode mode) {
  Graph g;
  const Tensor flat = flatten_grid(grid, cfg_.feature_dim, "hgr_forward");
  Var x = g.input(flat);
  const std::vector<Tensor> p1s{p1};
  const auto out = forward(g, {x}, p1s, mode);
  const Tensor& res = g.value(out[0]);
  if (grid.rank() == 3) return Tensor(grid.shape, res.values);
  return res;
}

Tensor local_to_semantic(const Tensor& x, HgrParams& p, const HgrConfig& cfg) {
  Graph g;
  Var xv = g.input(flatten_grid(x, cfg.feature_dim, "local_to_semantic"));
  Var h = g.relu(
      g.add_rowvec(g.matmul(xv, g.leaf(p.mlp_in_w1)), g.leaf(p.mlp_in_b1)));
  Var out =
      g.add_rowvec(g.matmul(h, g.leaf(p.mlp_in_w2)), g.leaf(p.mlp_in_b2));
  return g.value(out);
}

Tensor attended_embeddings(const Tensor& node_scores,
                           const Tensor& node_embed) {
  Graph g;
  Var out = g.row_scale(g.input(node_embed), g.input(node_scores));
  return g.value(out);
}

Tensor aggregate_to_nodes(const Tensor& x_semantic, const Tensor& attn_w) {
  Graph g;
  Var xs = g.input(x_semantic);
  Var att = g.softmax(g.matmul(xs, g.transpose(g.input(attn_w))), 1);
  Var out = g.matmul(g.transpose(att), xs);
  return g.value(out);
}

Tensor fuse_nodes(const Tensor& node_agg, const Tensor& s_att, HgrParams& p,
                  Mode mode) {
  Graph g;
  Var r1 = g.relu(g.batch_norm(g.input(node_agg), g.leaf(p.bn_nodes_gamma),
                               g.leaf(p.bn_nodes_beta), p.bn_nodes_stats,
                               mode));
  Var out = g.concat({r1, g.input(s_att)}, 1);
  return g.value(out);
}

Tensor graph_reason(const Tensor& fused, const Tensor& norm_adj, HgrParams& p,
                    Mode mode) {
  Graph g;
  Var pre = g.matmul(g.input(norm_adj), g.input(fused));
  Var hsr = g.matmul(pre, g.leaf(p.graph_w));
  Var out = g.relu(g.batch_norm(hsr, g.leaf(p.bn_reason_gamma),
                                g.leaf(p.bn_reason_beta), p.bn_reason_stats,
                                mode));
  return g.value(out);
}

Tensor semantic_to_local(const Tensor& reasoned, HgrParams& p) {
  Graph g;
  Var h = g.relu(g.add_rowvec(g.matmul(g.input(reasoned),
                                       g.leaf(p.mlp_out_w1)),
                              g.leaf(p.mlp_out_b1)));
  Var out =
      g.add_rowvec(g.matmul(h, g.leaf(p.mlp_out_w2)), g.leaf(p.mlp_out_b2));
  return g.value(out);
}

Tensor graph_to_local_attention(const Tensor& x, const Tensor& h_local) {
  require(x.rank() == 2 && h_local.rank() == 2 &&
              x.shape[1] == h_local.shape[1],
          "graph_to_local_attention: got " + shape_str(x.shape) + " and " +
              shape_str(h_local.shape));
  Graph g;
  Var xv = g.input(x);
  Var hl = g.input(h_local);
  const double inv_sqrt_d = 1.0 / std::sqrt(static_cast<double>(x.shape[1]));
  Var w = g.softmax(g.scale(g.matmul(xv, g.transpose(hl)), inv_sqrt_d), 1);
  Var out = g.matmul(w, hl);
  return g.value(out);
}

Tensor hgr_forward(HgrLayer& layer, const Tensor& grid, const Tensor& p1,
                   Mode mode) {
  return layer.forward_value(grid, p1, mode);
}

Tensor load_node_embeddings(const std::string& path) {
  using namespace binio;
  std::ifstream is(path, std::ios::binary);
  require(is.good(), "node embeddings: cannot open '" + path + "'");
  std::uint32_t n = 0, d = 0;
  require(get_u32(is, n) && get_u32(is, d),
          "node embeddings: '" + path + "' is truncated in the header");
  require(n > 0 && d > 0 && n < (1u << 20) && d < (1u << 20),
          "node embeddings: '" + path + "' has implausible dims " +
              std::to_string(n) + "x" + std::to_string(d));
  Tensor t(Shape{static_cast<Index>(n), static_cast<Index>(d)});
  for (Index i = 0; i < t.numel(); ++i) {
    require(get_f64(is, t.at(i)),
            "node embeddings: '" + path + "' is truncated in the payload");
  }
  return t;
}

void save_node_embeddings(const std::string& path, const Tensor& s) {
  using namespace binio;
  require(s.rank() == 2, "node embeddings: tensor must be rank-2, got " +
                             shape_str(s.shape));
  std::ofstream os(path, std::ios::binary);
  require(os.good(), "node embeddings: cannot write '" + path + "'");
  put_u32(os, static_cast<std::uint32_t>(s.shape[0]));
  put_u32(os, static_cast<std::uint32_t>(s.shape[1]));
  for (double v : s.values) put_f64(os, v);
  os.flush();
  require(os.good(), "node embeddings: write to '" + path + "' failed");
}

}  // namespace gada
