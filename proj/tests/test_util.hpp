#pragma once

// Shared helpers for the unit suites. Header-only; every function is small
// enough that ODR-friendly inline definitions beat a support library.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "gada/hierarchy.hpp"
#include "gada/model.hpp"
#include "gada/tensor.hpp"

namespace testutil {

/// Fresh directory under the system temp root, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    path_ = std::filesystem::temp_directory_path() /
            ("gada-test-" + tag + "-" + std::to_string(counter()++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  std::string str() const { return path_.string(); }
  std::string file(const std::string& name) const {
    return (path_ / name).string();
  }

 private:
  static int& counter() {
    static int c = 0;
    return c;
  }
  std::filesystem::path path_;
};

inline std::string read_file(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  std::ostringstream os;
  os << is.rdbuf();
  return os.str();
}

inline void write_file(const std::string& path, const std::string& content) {
  std::ofstream os(path, std::ios::binary);
  os << content;
}

/// Root with `k` leaf children named c0..c{k-1}, all of them classes.
inline gada::HierarchyGraph star_graph(gada::Index k) {
  std::vector<std::pair<std::string, std::string>> edges;
  std::vector<std::string> classes;
  for (gada::Index i = 0; i < k; ++i) {
    std::string leaf = "c" + std::to_string(i);
    edges.emplace_back("root", leaf);
    classes.push_back(leaf);
  }
  return gada::build_graph(edges, classes);
}

/// Mutable state tensor by checkpoint name; null if absent.
inline gada::Tensor* state_tensor(gada::GadaModel& model,
                                  const std::string& name) {
  for (auto& [n, t] : model.state()) {
    if (n == name) return t;
  }
  return nullptr;
}

inline void zero_tensor(gada::Tensor& t) {
  std::fill(t.values.begin(), t.values.end(), 0.0);
}

inline double max_abs(const gada::Tensor& t) {
  double m = 0.0;
  for (double v : t.values) m = std::max(m, std::abs(v));
  return m;
}

}  // namespace testutil
