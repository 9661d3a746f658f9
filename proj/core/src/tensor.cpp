#include "gada/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <sstream>

namespace gada {

void fail(const std::string& msg) { throw Error(msg); }

std::string shape_str(const Shape& s) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (i) os << ',';
    os << s[i];
  }
  os << ']';
  return os.str();
}

Index shape_numel(const Shape& s) {
  Index n = 1;
  for (Index d : s) {
    require(d >= 0, "tensor: negative dimension in shape " + shape_str(s));
    n *= d;
  }
  return n;
}

Tensor::Tensor(Shape s, std::vector<double> v)
    : shape(std::move(s)), values(std::move(v)) {
  require(shape_numel(shape) == static_cast<Index>(values.size()),
          "tensor: shape " + shape_str(shape) + " expects " +
              std::to_string(shape_numel(shape)) + " values, got " +
              std::to_string(values.size()));
}

Tensor Tensor::full(Shape s, double x) {
  Tensor t(std::move(s));
  for (double& v : t.values) v = x;
  return t;
}

double Tensor::item() const {
  require(numel() == 1, "tensor: item() on shape " + shape_str(shape));
  return values[0];
}

bool Tensor::all_finite() const {
  for (double v : values) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

double Tensor::sum() const {
  double s = 0.0;
  for (double v : values) s += v;
  return s;
}

bool bitwise_equal(const Tensor& a, const Tensor& b) {
  if (a.shape != b.shape) return false;
  return std::memcmp(a.values.data(), b.values.data(),
                     a.values.size() * sizeof(double)) == 0;
}

double max_abs_diff(const Tensor& a, const Tensor& b) {
  require(a.shape == b.shape, "max_abs_diff: shape mismatch " +
                                  shape_str(a.shape) + " vs " +
                                  shape_str(b.shape));
  double m = 0.0;
  for (std::size_t i = 0; i < a.values.size(); ++i) {
    m = std::max(m, std::fabs(a.values[i] - b.values[i]));
  }
  return m;
}

}  // namespace gada
