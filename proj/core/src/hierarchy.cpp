#include "gada/hierarchy.hpp"

#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

namespace gada {

namespace {

std::vector<std::string> tokenize(const std::string& line) {
  std::string body = line;
  if (const auto pos = body.find('#'); pos != std::string::npos)
    body.resize(pos);
  std::istringstream is(body);
  std::vector<std::string> toks;
  std::string t;
  while (is >> t) toks.push_back(t);
  return toks;
}

}  // namespace

Index HierarchyGraph::find_node(const std::string& name) const {
  for (Index i = 0; i < node_count; ++i)
    if (names[static_cast<std::size_t>(i)] == name) return i;
  return -1;
}

HierarchyGraph build_graph(
    const std::vector<std::pair<std::string, std::string>>& edges,
    const std::vector<std::string>& class_leaves) {
  HierarchyGraph g;
  std::map<std::string, Index> index_of;
  auto intern = [&](const std::string& name) {
    auto it = index_of.find(name);
    if (it != index_of.end()) return it->second;
    const Index id = static_cast<Index>(g.names.size());
    index_of.emplace(name, id);
    g.names.push_back(name);
    return id;
  };

  if (edges.empty()) {
    require(class_leaves.size() == 1,
            "hierarchy: empty edge list (only the single-node graph with one "
            "class may omit edges)");
    intern(class_leaves[0]);
  }
  for (const auto& [pname, cname] : edges) {
    const Index p = intern(pname);
    const Index c = intern(cname);
    require(p != c, "hierarchy: cycle detected at '" + pname +
                        "' (self-loop)");
    g.edges.emplace_back(p, c);
  }
  g.node_count = static_cast<Index>(g.names.size());
  const auto n = static_cast<std::size_t>(g.node_count);

  g.parent.assign(n, -1);
  g.children.assign(n, {});
  for (const auto& [p, c] : g.edges) {
    const auto cs = static_cast<std::size_t>(c);
    if (g.parent[cs] >= 0) {
      fail("hierarchy: node '" + g.names[cs] + "' has multiple parents ('" +
           g.names[static_cast<std::size_t>(g.parent[cs])] + "' and '" +
           g.names[static_cast<std::size_t>(p)] + "')");
    }
    g.parent[cs] = p;
    g.children[static_cast<std::size_t>(p)].push_back(c);
  }

  g.root = -1;
  for (Index i = 0; i < g.node_count; ++i) {
    if (g.parent[static_cast<std::size_t>(i)] >= 0) continue;
    if (g.root >= 0) {
      fail("hierarchy: multiple roots: '" +
           g.names[static_cast<std::size_t>(g.root)] + "' and '" +
           g.names[static_cast<std::size_t>(i)] + "'");
    }
    g.root = i;
  }
  require(g.root >= 0, "hierarchy: cycle detected (no node is a root)");

  // A parent-linked structure with one root is a tree iff the root reaches
  // every node; anything unreached sits on a cycle.
  std::vector<char> seen(n, 0);
  std::vector<Index> stack{g.root};
  seen[static_cast<std::size_t>(g.root)] = 1;
  while (!stack.empty()) {
    const Index cur = stack.back();
    stack.pop_back();
    for (Index c : g.children[static_cast<std::size_t>(cur)]) {
      if (!seen[static_cast<std::size_t>(c)]) {
        seen[static_cast<std::size_t>(c)] = 1;
        stack.push_back(c);
      }
    }
  }
  for (Index i = 0; i < g.node_count; ++i) {
    require(seen[static_cast<std::size_t>(i)],
            "hierarchy: cycle detected involving '" +
                g.names[static_cast<std::size_t>(i)] + "'");
  }

  // Class leaves: every childless node carries exactly one class.
  std::vector<Index> class_of(n, -1);
  for (std::size_t k = 0; k < class_leaves.size(); ++k) {
    const auto it = index_of.find(class_leaves[k]);
    require(it != index_of.end(), "hierarchy: leaf map names unknown node '" +
                                      class_leaves[k] + "'");
    const Index node = it->second;
    require(g.children[static_cast<std::size_t>(node)].empty(),
            "hierarchy: leaf map entry '" + class_leaves[k] +
                "' is an internal node");
    require(class_of[static_cast<std::size_t>(node)] < 0,
            "hierarchy: classes " +
                std::to_string(class_of[static_cast<std::size_t>(node)]) +
                " and " + std::to_string(k) + " both map to node '" +
                class_leaves[k] + "'");
    class_of[static_cast<std::size_t>(node)] = static_cast<Index>(k);
    g.leaf_map.push_back(node);
  }
  for (Index i = 0; i < g.node_count; ++i) {
    if (g.children[static_cast<std::size_t>(i)].empty()) {
      require(class_of[static_cast<std::size_t>(i)] >= 0,
              "hierarchy: childless node '" +
                  g.names[static_cast<std::size_t>(i)] +
                  "' is not assigned a class");
    }
  }

  g.adjacency = Tensor(Shape{g.node_count, g.node_count});
  for (const auto& [p, c] : g.edges) {
    g.adjacency.at(p, c) = 1.0;
    g.adjacency.at(c, p) = 1.0;
  }
  return g;
}

HierarchyGraph load_graph(const std::string& edge_list_path,
                          const std::string& leaf_map_path) {
  std::ifstream ef(edge_list_path);
  require(ef.good(), "hierarchy: cannot open edge list '" + edge_list_path +
                         "'");
  std::vector<std::pair<std::string, std::string>> edges;
  std::string line;
  for (Index lineno = 1; std::getline(ef, line); ++lineno) {
    const auto toks = tokenize(line);
    if (toks.empty()) continue;
    require(toks.size() == 2,
            "hierarchy: " + edge_list_path + ":" + std::to_string(lineno) +
                ": expected 'parent child', got " +
                std::to_string(toks.size()) + " tokens");
    edges.emplace_back(toks[0], toks[1]);
  }

  std::ifstream lf(leaf_map_path);
  require(lf.good(), "hierarchy: cannot open leaf map '" + leaf_map_path +
                         "'");
  std::map<Index, std::string> by_class;
  for (Index lineno = 1; std::getline(lf, line); ++lineno) {
    const auto toks = tokenize(line);
    if (toks.empty()) continue;
    const std::string where =
        "hierarchy: " + leaf_map_path + ":" + std::to_string(lineno);
    require(toks.size() == 2, where + ": expected 'class node_name', got " +
                                  std::to_string(toks.size()) + " tokens");
    Index k = -1;
    try {
      std::size_t used = 0;
      k = static_cast<Index>(std::stoll(toks[0], &used));
      require(used == toks[0].size() && k >= 0, "");
    } catch (const std::exception&) {
      fail(where + ": '" + toks[0] + "' is not a class index");
    }
    require(by_class.find(k) == by_class.end(),
            where + ": class " + std::to_string(k) + " assigned twice");
    by_class.emplace(k, toks[1]);
  }
  require(!by_class.empty(), "hierarchy: leaf map '" + leaf_map_path +
                                 "' is empty");
  std::vector<std::string> class_leaves;
  for (Index k = 0; k < static_cast<Index>(by_class.size()); ++k) {
    const auto it = by_class.find(k);
    require(it != by_class.end(), "hierarchy: leaf map '" + leaf_map_path +
                                      "' is missing class " +
                                      std::to_string(k));
    class_leaves.push_back(it->second);
  }
  return build_graph(edges, class_leaves);
}

void write_graph_files(const HierarchyGraph& g,
                       const std::string& edge_list_path,
                       const std::string& leaf_map_path) {
  std::ofstream ef(edge_list_path);
  require(ef.good(), "hierarchy: cannot write '" + edge_list_path + "'");
  for (const auto& [p, c] : g.edges)
    ef << g.names[static_cast<std::size_t>(p)] << ' '
       << g.names[static_cast<std::size_t>(c)] << '\n';
  ef.flush();
  require(ef.good(), "hierarchy: write to '" + edge_list_path + "' failed");

  std::ofstream lf(leaf_map_path);
  require(lf.good(), "hierarchy: cannot write '" + leaf_map_path + "'");
  for (Index k = 0; k < g.leaf_count(); ++k)
    lf << k << ' '
       << g.names[static_cast<std::size_t>(
              g.leaf_map[static_cast<std::size_t>(k)])]
       << '\n';
  lf.flush();
  require(lf.good(), "hierarchy: write to '" + leaf_map_path + "' failed");
}

Tensor normalized_adjacency(const HierarchyGraph& g) {
  const Index n = g.node_count;
  Tensor a_hat(Shape{n, n});
  std::vector<double> dinv(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i) {
    double d = 1.0;  // self-loop
    for (Index j = 0; j < n; ++j) d += g.adjacency.at(i, j);
    dinv[static_cast<std::size_t>(i)] = 1.0 / std::sqrt(d);
  }
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < n; ++j) {
      const double a = g.adjacency.at(i, j) + (i == j ? 1.0 : 0.0);
      a_hat.at(i, j) = a * dinv[static_cast<std::size_t>(i)] *
                       dinv[static_cast<std::size_t>(j)];
    }
  return a_hat;
}

Tensor transition_matrix(const HierarchyGraph& g) {
  const Index n = g.node_count;
  Tensor p(Shape{n, n});
  for (Index j = 0; j < n; ++j) {
    double deg = 0.0;
    for (Index i = 0; i < n; ++i) deg += g.adjacency.at(i, j);
    if (deg == 0.0) {
      p.at(j, j) = 1.0;
      continue;
    }
    for (Index i = 0; i < n; ++i) p.at(i, j) = g.adjacency.at(i, j) / deg;
  }
  return p;
}

Tensor expand_prediction(const Tensor& p_classes, const HierarchyGraph& g) {
  require(p_classes.rank() == 1,
          "expand_prediction: prediction must be rank-1, got " +
              shape_str(p_classes.shape));
  require(p_classes.numel() == g.leaf_count(),
          "expand_prediction: got " + std::to_string(p_classes.numel()) +
              " classes, hierarchy carries " +
              std::to_string(g.leaf_count()));
  require(std::fabs(p_classes.sum() - 1.0) <= 1e-9,
          "expand_prediction: prediction sums to " +
              std::to_string(p_classes.sum()) + ", expected 1");
  Tensor out(Shape{g.node_count});
  for (Index k = 0; k < g.leaf_count(); ++k)
    out.at(g.leaf_map[static_cast<std::size_t>(k)]) = p_classes.at(k);
  return out;
}

Tensor personalized_pagerank(const HierarchyGraph& g,
                             const Tensor& personalization,
                             const PprConfig& cfg) {
  const Index n = g.node_count;
  require(personalization.rank() == 1 && personalization.numel() == n,
          "personalized_pagerank: personalization must be [" +
              std::to_string(n) + "], got " +
              shape_str(personalization.shape));
  require(cfg.alpha > 0.0 && cfg.alpha <= 1.0,
          "personalized_pagerank: alpha must lie in (0, 1]");
  double total = 0.0;
  for (Index i = 0; i < n; ++i) {
    require(personalization.at(i) >= 0.0,
            "personalized_pagerank: negative personalization entry");
    total += personalization.at(i);
  }
  require(total > 0.0, "personalized_pagerank: personalization is all zeros");

  Tensor v(Shape{n});
  for (Index i = 0; i < n; ++i) v.at(i) = personalization.at(i) / total;
  return ppr_power(transition_matrix(g), v, cfg);
}

Tensor ppr_power(const Tensor& transition, const Tensor& v_normalized,
                 const PprConfig& cfg) {
  const Index n = v_normalized.numel();
  require(transition.rank() == 2 && transition.shape[0] == n &&
              transition.shape[1] == n,
          "ppr_power: transition must be [" + std::to_string(n) + "," +
              std::to_string(n) + "], got " + shape_str(transition.shape));
  const Tensor& v = v_normalized;
  Tensor a = v;
  Tensor next(Shape{n});
  for (Index it = 0; it < cfg.max_iterations; ++it) {
    for (Index i = 0; i < n; ++i) {
      double walk = 0.0;
      for (Index j = 0; j < n; ++j) walk += transition.at(i, j) * a.at(j);
      next.at(i) = cfg.alpha * v.at(i) + (1.0 - cfg.alpha) * walk;
    }
    double delta = 0.0;
    for (Index i = 0; i < n; ++i) delta += std::fabs(next.at(i) - a.at(i));
    std::swap(a, next);
    if (delta < cfg.tolerance) break;
  }
  return a;
}

Tensor ppr_oracle_solve(const HierarchyGraph& g, const Tensor& personalization,
                        double alpha) {
  const Index n = g.node_count;
  require(personalization.rank() == 1 && personalization.numel() == n,
          "ppr_oracle_solve: personalization must be [" + std::to_string(n) +
              "], got " + shape_str(personalization.shape));
  double total = personalization.sum();
  require(total > 0.0, "ppr_oracle_solve: personalization is all zeros");

  const Tensor p = transition_matrix(g);
  // M a = alpha v with M = I - (1-alpha) P, by Gaussian elimination with
  // partial pivoting.
  std::vector<std::vector<double>> m(static_cast<std::size_t>(n));
  std::vector<double> rhs(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i) {
    auto& row = m[static_cast<std::size_t>(i)];
    row.resize(static_cast<std::size_t>(n));
    for (Index j = 0; j < n; ++j)
      row[static_cast<std::size_t>(j)] =
          (i == j ? 1.0 : 0.0) - (1.0 - alpha) * p.at(i, j);
    rhs[static_cast<std::size_t>(i)] =
        alpha * personalization.at(i) / total;
  }
  for (Index col = 0; col < n; ++col) {
    Index piv = col;
    for (Index r = col + 1; r < n; ++r) {
      if (std::fabs(m[static_cast<std::size_t>(r)]
                     [static_cast<std::size_t>(col)]) >
          std::fabs(m[static_cast<std::size_t>(piv)]
                     [static_cast<std::size_t>(col)]))
        piv = r;
    }
    std::swap(m[static_cast<std::size_t>(col)],
              m[static_cast<std::size_t>(piv)]);
    std::swap(rhs[static_cast<std::size_t>(col)],
              rhs[static_cast<std::size_t>(piv)]);
    const double d = m[static_cast<std::size_t>(col)]
                      [static_cast<std::size_t>(col)];
    require(std::fabs(d) > 1e-14, "ppr_oracle_solve: singular system");
    for (Index r = col + 1; r < n; ++r) {
      const double f = m[static_cast<std::size_t>(r)]
                        [static_cast<std::size_t>(col)] /
                       d;
      if (f == 0.0) continue;
      for (Index c = col; c < n; ++c)
        m[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)] -=
            f * m[static_cast<std::size_t>(col)][static_cast<std::size_t>(c)];
      rhs[static_cast<std::size_t>(r)] -=
          f * rhs[static_cast<std::size_t>(col)];
    }
  }
  Tensor a(Shape{n});
  for (Index i = n - 1; i >= 0; --i) {
    double s = rhs[static_cast<std::size_t>(i)];
    for (Index j = i + 1; j < n; ++j)
      s -= m[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] *
           a.at(j);
    a.at(i) = s / m[static_cast<std::size_t>(i)][static_cast<std::size_t>(i)];
  }
  return a;
}

Tensor hierarchy_attention(const Tensor& p_classes, const HierarchyGraph& g,
                           const PprConfig& cfg) {
  const Tensor expanded = expand_prediction(p_classes, g);
  Tensor scores = personalized_pagerank(g, expanded, cfg);
  for (Index i = 0; i < g.node_count; ++i) scores.at(i) += expanded.at(i);
  return scores;
}

}  // namespace gada
