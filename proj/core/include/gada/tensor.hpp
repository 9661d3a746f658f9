#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace gada {

using Index = std::int64_t;
using Shape = std::vector<Index>;

/// Thrown by every validation failure in the library.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

[[noreturn]] void fail(const std::string& msg);

inline void require(bool cond, const std::string& msg) {
  if (!cond) fail(msg);
}

std::string shape_str(const Shape& s);
Index shape_numel(const Shape& s);

/// Dense row-major tensor of doubles. Rank 1..3 in practice; scalars are
/// represented as shape {1}.
struct Tensor {
  Shape shape;
  std::vector<double> values;
  bool requires_grad = false;

  Tensor() = default;
  explicit Tensor(Shape s)
      : shape(std::move(s)),
        values(static_cast<std::size_t>(shape_numel(shape)), 0.0) {}
  Tensor(Shape s, std::vector<double> v);

  static Tensor zeros(Shape s) { return Tensor(std::move(s)); }
  static Tensor full(Shape s, double x);
  static Tensor ones(Shape s) { return full(std::move(s), 1.0); }
  static Tensor scalar(double x) { return Tensor({1}, {x}); }

  Index numel() const { return static_cast<Index>(values.size()); }
  Index rank() const { return static_cast<Index>(shape.size()); }
  Index dim(Index i) const { return shape.at(static_cast<std::size_t>(i)); }
  bool same_shape(const Tensor& o) const { return shape == o.shape; }

  double& at(Index i) { return values[static_cast<std::size_t>(i)]; }
  double at(Index i) const { return values[static_cast<std::size_t>(i)]; }
  double& at(Index i, Index j) {
    return values[static_cast<std::size_t>(i * shape[1] + j)];
  }
  double at(Index i, Index j) const {
    return values[static_cast<std::size_t>(i * shape[1] + j)];
  }
  double& at(Index i, Index j, Index k) {
    return values[static_cast<std::size_t>((i * shape[1] + j) * shape[2] + k)];
  }
  double at(Index i, Index j, Index k) const {
    return values[static_cast<std::size_t>((i * shape[1] + j) * shape[2] + k)];
  }

  double* data() { return values.data(); }
  const double* data() const { return values.data(); }

  /// Value of a single-element tensor.
  double item() const;
  bool all_finite() const;
  double sum() const;
};

bool bitwise_equal(const Tensor& a, const Tensor& b);
double max_abs_diff(const Tensor& a, const Tensor& b);

}  // namespace gada
