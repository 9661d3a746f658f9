#include "gada/synth.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include "binio.hpp"
#include "gada/format.hpp"
#include "gada/rng.hpp"

namespace gada {

namespace {

void validate_counts(const ScenarioConfig& cfg) {
  require(cfg.class_count >= 1, "scenario: class_count must be >= 1");
  require(cfg.shared_count >= 1 && cfg.shared_count <= cfg.class_count,
          "scenario: shared_count must be in 1..class_count");
  require(cfg.height >= 1 && cfg.width >= 1 && cfg.input_dim >= 1,
          "scenario: grid dims must be positive");
  require(cfg.source_shared_per_class >= 0 &&
              cfg.source_nonshared_per_class >= 0 &&
              cfg.target_per_class >= 0 && cfg.target_sparse_per_class >= 0,
          "scenario: sample counts must be >= 0");
  require(cfg.sparse_count >= 0 && cfg.sparse_start >= 0 &&
              cfg.sparse_start + cfg.sparse_count <= cfg.shared_count,
          "scenario: sparse window must fit inside the shared classes");
  require(cfg.noise_sigma >= 0.0, "scenario: noise_sigma must be >= 0");
  require(cfg.internal_sigma >= 0.0 && cfg.leaf_sigma >= 0.0,
          "scenario: node sigmas must be >= 0");
  require(cfg.shift_fraction >= 0.0 && cfg.shift_fraction <= 1.0,
          "scenario: shift_fraction must be in [0, 1]");
}

/// Evenly spread K' class ids over 0..K-1, so shared classes pick up
/// non-shared siblings wherever K' < K. floor(i K / K') is strictly
/// increasing, hence distinct.
std::vector<Index> spread_shared(Index k, Index k_shared) {
  std::vector<Index> out;
  for (Index i = 0; i < k_shared; ++i) out.push_back(i * k / k_shared);
  return out;
}

Tensor rotation_matrix(Index dim, double angle, double fraction, Rng& rng) {
  Tensor r(Shape{dim, dim});
  for (Index i = 0; i < dim; ++i) r.at(i, i) = 1.0;
  std::vector<Index> perm(dim);
  for (Index i = 0; i < dim; ++i) perm[i] = i;
  for (Index i = dim - 1; i > 0; --i) {
    std::swap(perm[i], perm[rng.uniform_int(i + 1)]);
  }
  const double c = std::cos(angle), s = std::sin(angle);
  const Index pairs = dim / 2;
  const Index rotated = static_cast<Index>(fraction * pairs + 0.5);
  for (Index p = 0; p < rotated; ++p) {
    const Index a = perm[2 * p], b = perm[2 * p + 1];
    r.at(a, a) = c;
    r.at(a, b) = -s;
    r.at(b, a) = s;
    r.at(b, b) = c;
  }
  return r;
}

Tensor bias_vector(Index dim, double magnitude, Rng& rng) {
  Tensor b = rng.gaussian_tensor(Shape{dim}, 1.0);
  double norm = 0.0;
  for (double v : b.values) norm += v * v;
  norm = std::sqrt(norm);
  if (norm == 0.0 || magnitude == 0.0) return Tensor(Shape{dim});
  for (double& v : b.values) v *= magnitude / norm;
  return b;
}

/// One sample grid: every location carries the prototype plus independent
/// gaussian noise; targets are then rotated and shifted per location.
Tensor sample_grid(const ScenarioConfig& cfg, const Tensor& proto,
                   const Tensor* rotation, const Tensor* bias, Rng& rng) {
  const Index d = cfg.input_dim;
  Tensor grid(Shape{cfg.height, cfg.width, d});
  std::vector<double> raw(d);
  for (Index h = 0; h < cfg.height; ++h) {
    for (Index w = 0; w < cfg.width; ++w) {
      for (Index e = 0; e < d; ++e) {
        raw[e] = proto.values[e] + cfg.noise_sigma * rng.gaussian();
      }
      for (Index e = 0; e < d; ++e) {
        double v;
        if (rotation != nullptr) {
          v = bias->values[e];
          for (Index f = 0; f < d; ++f) v += rotation->at(e, f) * raw[f];
        } else {
          v = raw[e];
        }
        grid.at(h, w, e) = v;
      }
    }
  }
  return grid;
}

std::string join_indices(const std::vector<Index>& ids) {
  std::string out;
  for (size_t i = 0; i < ids.size(); ++i) {
    if (i) out += ",";
    out += std::to_string(ids[i]);
  }
  return out;
}

std::vector<Index> split_indices(const std::string& text) {
  std::vector<Index> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(std::stoll(item));
  }
  return out;
}

void write_samples_bin(const std::string& path, const ScenarioConfig& cfg,
                       const std::vector<Tensor>& grids) {
  std::ofstream os(path, std::ios::binary);
  require(os.good(), "scenario: cannot write " + path);
  binio::put_u32(os, static_cast<std::uint32_t>(grids.size()));
  binio::put_u32(os, static_cast<std::uint32_t>(cfg.height));
  binio::put_u32(os, static_cast<std::uint32_t>(cfg.width));
  binio::put_u32(os, static_cast<std::uint32_t>(cfg.input_dim));
  for (const Tensor& g : grids) {
    for (double v : g.values) binio::put_f64(os, v);
  }
  require(os.good(), "scenario: write failed for " + path);
}

std::vector<Tensor> read_samples_bin(const std::string& path,
                                     const ScenarioConfig& cfg) {
  std::ifstream is(path, std::ios::binary);
  require(is.good(), "scenario: cannot open " + path);
  std::uint32_t count = 0, h = 0, w = 0, d = 0;
  require(binio::get_u32(is, count) && binio::get_u32(is, h) &&
              binio::get_u32(is, w) && binio::get_u32(is, d),
          "scenario: truncated header in " + path);
  require(h == static_cast<std::uint32_t>(cfg.height) &&
              w == static_cast<std::uint32_t>(cfg.width) &&
              d == static_cast<std::uint32_t>(cfg.input_dim),
          "scenario: " + path + " grid dims disagree with scenario.txt");
  std::vector<Tensor> out;
  out.reserve(count);
  for (std::uint32_t i = 0; i < count; ++i) {
    Tensor g(Shape{cfg.height, cfg.width, cfg.input_dim});
    for (double& v : g.values) {
      require(binio::get_f64(is, v), "scenario: truncated payload in " + path);
    }
    out.push_back(std::move(g));
  }
  return out;
}

}  // namespace

std::pair<HierarchyGraph, std::vector<Tensor>> build_synthetic_hierarchy(
    const ScenarioConfig& cfg) {
  validate_counts(cfg);
  require(cfg.depth >= 2 && cfg.branching >= 2,
          "scenario: need depth >= 2 and branching >= 2");
  Index capacity = 1;
  for (Index l = 0; l < cfg.depth; ++l) {
    capacity *= cfg.branching;
    require(capacity <= (Index{1} << 40),
            "scenario: taxonomy capacity overflow");
  }
  require(capacity >= cfg.class_count,
          "scenario: branching^depth = " + std::to_string(capacity) +
              " cannot host " + std::to_string(cfg.class_count) + " classes");

  // Full-tree node names level by level; then keep only the first K leaves
  // and every ancestor of a kept leaf.
  auto node_name = [&](Index level, Index j) -> std::string {
    if (level == 0) return "root";
    if (level == cfg.depth) return "c" + std::to_string(j);
    return "g" + std::to_string(level) + "_" + std::to_string(j);
  };
  std::vector<std::vector<bool>> keep(cfg.depth + 1);
  Index width = 1;
  for (Index l = 0; l <= cfg.depth; ++l) {
    keep[l].assign(width, false);
    width *= cfg.branching;
  }
  for (Index j = 0; j < cfg.class_count; ++j) {
    Index at = j;
    for (Index l = cfg.depth; l >= 0; --l) {
      keep[l][at] = true;
      at /= cfg.branching;
    }
  }
  std::vector<std::pair<std::string, std::string>> edges;
  for (Index l = 1; l <= cfg.depth; ++l) {
    for (Index j = 0; j < static_cast<Index>(keep[l].size()); ++j) {
      if (keep[l][j]) {
        edges.emplace_back(node_name(l - 1, j / cfg.branching),
                           node_name(l, j));
      }
    }
  }
  std::vector<std::string> classes;
  for (Index j = 0; j < cfg.class_count; ++j) {
    classes.push_back(node_name(cfg.depth, j));
  }
  HierarchyGraph g = build_graph(edges, classes);

  // Per-node vectors in node-id order; a class prototype sums its root
  // path. Leaf offsets are drawn tighter so siblings stay close.
  Rng rng(derive_seed(cfg.seed, "hierarchy"));
  std::vector<Tensor> node_vec;
  node_vec.reserve(g.node_count);
  for (Index n = 0; n < g.node_count; ++n) {
    const double sigma =
        g.children[n].empty() ? cfg.leaf_sigma : cfg.internal_sigma;
    node_vec.push_back(rng.gaussian_tensor(Shape{cfg.input_dim}, sigma));
  }
  std::vector<Tensor> protos;
  for (Index k = 0; k < g.leaf_count(); ++k) {
    Tensor p(Shape{cfg.input_dim});
    for (Index n = g.leaf_map[k]; n != -1; n = g.parent[n]) {
      for (Index e = 0; e < cfg.input_dim; ++e) {
        p.values[e] += node_vec[n].values[e];
      }
    }
    protos.push_back(std::move(p));
  }
  return {std::move(g), std::move(protos)};
}

Scenario sample_scenario(const ScenarioConfig& cfg) {
  Scenario s;
  s.config = cfg;
  auto [graph, protos] = build_synthetic_hierarchy(cfg);
  s.hierarchy = std::move(graph);
  s.prototypes = std::move(protos);

  s.shared_classes = spread_shared(cfg.class_count, cfg.shared_count);
  for (Index i = cfg.sparse_start; i < cfg.sparse_start + cfg.sparse_count;
       ++i) {
    s.sparse_classes.push_back(s.shared_classes[i]);
  }
  s.mask = Tensor(Shape{cfg.class_count});
  for (Index k : s.shared_classes) s.mask.values[k] = 1.0;

  std::vector<bool> is_sparse(cfg.class_count, false);
  for (Index k : s.sparse_classes) is_sparse[k] = true;

  Rng shift_rng(derive_seed(cfg.seed, "shift"));
  s.shift_rotation = rotation_matrix(cfg.input_dim, cfg.shift_angle,
                                     cfg.shift_fraction, shift_rng);
  s.shift_bias_vec = bias_vector(cfg.input_dim, cfg.shift_bias, shift_rng);

  Rng source_rng(derive_seed(cfg.seed, "source"));
  for (Index k = 0; k < cfg.class_count; ++k) {
    const bool shared = s.mask.values[k] == 1.0;
    const Index count = shared ? cfg.source_shared_per_class
                               : cfg.source_nonshared_per_class;
    for (Index i = 0; i < count; ++i) {
      s.source_inputs.push_back(
          sample_grid(cfg, s.prototypes[k], nullptr, nullptr, source_rng));
      s.source_labels.push_back(k);
      s.source_is_shared.push_back(shared);
    }
  }
  require(!s.source_inputs.empty(), "scenario: source domain is empty");

  Rng target_rng(derive_seed(cfg.seed, "target"));
  for (Index k : s.shared_classes) {
    const Index count = is_sparse[k] ? cfg.target_sparse_per_class
                                     : cfg.target_per_class;
    for (Index i = 0; i < count; ++i) {
      s.target_inputs.push_back(sample_grid(cfg, s.prototypes[k],
                                            &s.shift_rotation,
                                            &s.shift_bias_vec, target_rng));
      s.target_labels.push_back(k);
    }
  }
  require(!s.target_inputs.empty(),
          "scenario: no shared class has any target sample");
  return s;
}

std::vector<std::string> standard_scenario_names() {
  return {"imbalanced-source-10",   "imbalanced-source-20",
          "imbalanced-source-50",   "imbalanced-target-sparse",
          "imbalanced-target-half", "full-sparse"};
}

ScenarioConfig standard_scenario_config(const std::string& name,
                                        std::uint64_t seed) {
  ScenarioConfig cfg;
  cfg.name = name;
  cfg.seed = seed;
  if (name == "imbalanced-source-10") {
    cfg.source_shared_per_class = 10;
  } else if (name == "imbalanced-source-20") {
    cfg.source_shared_per_class = 20;
  } else if (name == "imbalanced-source-50") {
    cfg.source_shared_per_class = 50;
  } else if (name == "imbalanced-target-sparse") {
    cfg.source_shared_per_class = 60;
    cfg.sparse_count = 5;
    cfg.target_sparse_per_class = 10;
  } else if (name == "imbalanced-target-half") {
    cfg.source_shared_per_class = 60;
    cfg.sparse_count = cfg.shared_count / 2;
    cfg.target_sparse_per_class = 30;
  } else if (name == "full-sparse") {
    cfg.source_shared_per_class = 60;
    cfg.sparse_count = cfg.shared_count;
    cfg.target_per_class = 10;
    cfg.target_sparse_per_class = 10;
  } else {
    std::string names;
    for (const std::string& n : standard_scenario_names()) {
      names += (names.empty() ? "" : ", ") + n;
    }
    fail("unknown scenario '" + name + "'; valid names: " + names);
  }
  return cfg;
}

Scenario standard_scenario(const std::string& name, std::uint64_t seed) {
  return sample_scenario(standard_scenario_config(name, seed));
}

void save_scenario(const Scenario& s, const std::string& dir) {
  std::filesystem::create_directories(dir);
  write_graph_files(s.hierarchy, dir + "/hierarchy.edges",
                    dir + "/hierarchy.leaves");
  write_samples_bin(dir + "/source.bin", s.config, s.source_inputs);
  write_samples_bin(dir + "/target.bin", s.config, s.target_inputs);

  std::ofstream csv(dir + "/labels.csv");
  require(csv.good(), "scenario: cannot write labels.csv");
  csv << "index,label,is_shared\n";
  Index row = 0;
  for (size_t i = 0; i < s.source_labels.size(); ++i, ++row) {
    csv << row << "," << s.source_labels[i] << ","
        << (s.source_is_shared[i] ? 1 : 0) << "\n";
  }
  for (size_t i = 0; i < s.target_labels.size(); ++i, ++row) {
    csv << row << "," << s.target_labels[i] << ",1\n";
  }
  require(csv.good(), "scenario: write failed for labels.csv");

  const ScenarioConfig& c = s.config;
  std::ofstream txt(dir + "/scenario.txt");
  require(txt.good(), "scenario: cannot write scenario.txt");
  txt << "name=" << c.name << "\n"
      << "seed=" << c.seed << "\n"
      << "class_count=" << c.class_count << "\n"
      << "shared_count=" << c.shared_count << "\n"
      << "depth=" << c.depth << "\n"
      << "branching=" << c.branching << "\n"
      << "height=" << c.height << "\n"
      << "width=" << c.width << "\n"
      << "input_dim=" << c.input_dim << "\n"
      << "source_shared_per_class=" << c.source_shared_per_class << "\n"
      << "source_nonshared_per_class=" << c.source_nonshared_per_class << "\n"
      << "target_per_class=" << c.target_per_class << "\n"
      << "target_sparse_per_class=" << c.target_sparse_per_class << "\n"
      << "sparse_count=" << c.sparse_count << "\n"
      << "sparse_start=" << c.sparse_start << "\n"
      << "shift_angle=" << fmt_g17(c.shift_angle) << "\n"
      << "shift_fraction=" << fmt_g17(c.shift_fraction) << "\n"
      << "shift_bias=" << fmt_g17(c.shift_bias) << "\n"
      << "noise_sigma=" << fmt_g17(c.noise_sigma) << "\n"
      << "internal_sigma=" << fmt_g17(c.internal_sigma) << "\n"
      << "leaf_sigma=" << fmt_g17(c.leaf_sigma) << "\n"
      << "shared_classes=" << join_indices(s.shared_classes) << "\n"
      << "sparse_classes=" << join_indices(s.sparse_classes) << "\n"
      << "source_count=" << s.source_inputs.size() << "\n"
      << "target_count=" << s.target_inputs.size() << "\n";
  require(txt.good(), "scenario: write failed for scenario.txt");
}

Scenario load_scenario(const std::string& dir) {
  std::ifstream txt(dir + "/scenario.txt");
  require(txt.good(), "scenario: cannot open " + dir + "/scenario.txt");
  std::map<std::string, std::string> kv;
  std::string line;
  Index line_no = 0;
  while (std::getline(txt, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#') continue;
    auto eq = line.find('=');
    require(eq != std::string::npos,
            "scenario.txt line " + std::to_string(line_no) + ": expected "
            "key=value, got '" + line + "'");
    kv[line.substr(0, eq)] = line.substr(eq + 1);
  }
  auto get = [&](const std::string& key) -> const std::string& {
    auto it = kv.find(key);
    require(it != kv.end(), "scenario.txt: missing key '" + key + "'");
    return it->second;
  };

  Scenario s;
  ScenarioConfig& c = s.config;
  c.name = get("name");
  c.seed = std::stoull(get("seed"));
  c.class_count = std::stoll(get("class_count"));
  c.shared_count = std::stoll(get("shared_count"));
  c.depth = std::stoll(get("depth"));
  c.branching = std::stoll(get("branching"));
  c.height = std::stoll(get("height"));
  c.width = std::stoll(get("width"));
  c.input_dim = std::stoll(get("input_dim"));
  c.source_shared_per_class = std::stoll(get("source_shared_per_class"));
  c.source_nonshared_per_class =
      std::stoll(get("source_nonshared_per_class"));
  c.target_per_class = std::stoll(get("target_per_class"));
  c.target_sparse_per_class = std::stoll(get("target_sparse_per_class"));
  c.sparse_count = std::stoll(get("sparse_count"));
  c.sparse_start = std::stoll(get("sparse_start"));
  c.shift_angle = std::stod(get("shift_angle"));
  c.shift_fraction = std::stod(get("shift_fraction"));
  c.shift_bias = std::stod(get("shift_bias"));
  c.noise_sigma = std::stod(get("noise_sigma"));
  c.internal_sigma = std::stod(get("internal_sigma"));
  c.leaf_sigma = std::stod(get("leaf_sigma"));
  validate_counts(c);

  s.hierarchy = load_graph(dir + "/hierarchy.edges", dir + "/hierarchy.leaves");
  require(s.hierarchy.leaf_count() == c.class_count,
          "scenario: hierarchy has " +
              std::to_string(s.hierarchy.leaf_count()) + " classes, "
              "scenario.txt says " + std::to_string(c.class_count));

  s.shared_classes = split_indices(get("shared_classes"));
  s.sparse_classes = split_indices(get("sparse_classes"));
  require(static_cast<Index>(s.shared_classes.size()) == c.shared_count,
          "scenario: shared_classes disagrees with shared_count");
  s.mask = Tensor(Shape{c.class_count});
  for (Index k : s.shared_classes) {
    require(k >= 0 && k < c.class_count,
            "scenario: shared class id out of range");
    s.mask.values[k] = 1.0;
  }
  for (Index k : s.sparse_classes) {
    require(k >= 0 && k < c.class_count && s.mask.values[k] == 1.0,
            "scenario: sparse class id must be a shared class");
  }

  s.source_inputs = read_samples_bin(dir + "/source.bin", c);
  s.target_inputs = read_samples_bin(dir + "/target.bin", c);
  const Index source_count = std::stoll(get("source_count"));
  const Index target_count = std::stoll(get("target_count"));
  require(static_cast<Index>(s.source_inputs.size()) == source_count &&
              static_cast<Index>(s.target_inputs.size()) == target_count,
          "scenario: sample counts disagree with scenario.txt");

  std::ifstream csv(dir + "/labels.csv");
  require(csv.good(), "scenario: cannot open labels.csv");
  require(std::getline(csv, line) && line == "index,label,is_shared",
          "labels.csv: bad header");
  Index row = 0;
  while (std::getline(csv, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string idx_s, label_s, shared_s;
    require(std::getline(ss, idx_s, ',') && std::getline(ss, label_s, ',') &&
                std::getline(ss, shared_s, ','),
            "labels.csv row " + std::to_string(row) + ": expected 3 fields");
    require(std::stoll(idx_s) == row,
            "labels.csv row " + std::to_string(row) + ": bad index");
    const Index label = std::stoll(label_s);
    const bool shared_flag = shared_s == "1";
    require(label >= 0 && label < c.class_count,
            "labels.csv row " + std::to_string(row) + ": label out of range");
    require(shared_flag == (s.mask.values[label] == 1.0),
            "labels.csv row " + std::to_string(row) +
                ": is_shared disagrees with the shared-class set");
    if (row < source_count) {
      s.source_labels.push_back(label);
      s.source_is_shared.push_back(shared_flag);
    } else {
      require(shared_flag,
              "labels.csv row " + std::to_string(row) +
                  ": target label must be shared");
      s.target_labels.push_back(label);
    }
    ++row;
  }
  require(row == source_count + target_count,
          "labels.csv: expected " +
              std::to_string(source_count + target_count) + " rows, got " +
              std::to_string(row));
  return s;
}

HierarchyGraph random_tree(std::uint64_t seed, Index max_nodes) {
  require(max_nodes >= 2, "random_tree: need at least 2 nodes");
  Rng rng(seed);
  const Index n = 2 + rng.uniform_int(max_nodes - 1);
  std::vector<std::pair<std::string, std::string>> edges;
  std::vector<bool> has_child(n, false);
  for (Index i = 1; i < n; ++i) {
    const Index parent = rng.uniform_int(i);
    has_child[parent] = true;
    edges.emplace_back("n" + std::to_string(parent), "n" + std::to_string(i));
  }
  std::vector<std::string> classes;
  for (Index i = 0; i < n; ++i) {
    if (!has_child[i]) classes.push_back("n" + std::to_string(i));
  }
  return build_graph(edges, classes);
}

}  // namespace gada
