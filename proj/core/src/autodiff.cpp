#include "gada/autodiff.hpp"

#include <cmath>

namespace gada {

namespace {

void check_same_shape(const Tensor& a, const Tensor& b, const char* op) {
  require(a.shape == b.shape, std::string(op) + ": shape mismatch " +
                                  shape_str(a.shape) + " vs " +
                                  shape_str(b.shape));
}

}  // namespace

Var Graph::push(Node n) {
  nodes_.push_back(std::move(n));
  return Var(this, static_cast<Index>(nodes_.size()) - 1);
}

const Graph::Node& Graph::node(Var v) const {
  return nodes_[static_cast<std::size_t>(v.id())];
}

Graph::Node& Graph::node(Var v) {
  return nodes_[static_cast<std::size_t>(v.id())];
}

void Graph::check_mine(Var v, const char* op) const {
  require(v.valid() && v.g_ == this && v.id() >= 0 && v.id() < size(),
          std::string(op) + ": var does not belong to this graph");
}

const Tensor& Graph::value(Var v) const {
  check_mine(v, "value");
  return node(v).value;
}

const Tensor& Graph::grad(Var v) const {
  check_mine(v, "grad");
  const Node& n = node(v);
  require(n.grad.numel() > 0, "grad: backward has not reached this node");
  return n.grad;
}

Var Graph::input(Tensor v) {
  Node n;
  n.op = Op::kInput;
  n.value = std::move(v);
  n.value.requires_grad = false;
  return push(std::move(n));
}

Var Graph::leaf(Parameter& p) {
  require(p.value.same_shape(p.grad), "leaf: parameter '" + p.name +
                                          "' grad shape does not match value");
  Node n;
  n.op = Op::kLeaf;
  n.value = p.value;
  n.param = &p;
  return push(std::move(n));
}

Var Graph::matmul(Var a, Var b) {
  check_mine(a, "matmul");
  check_mine(b, "matmul");
  const Tensor& A = node(a).value;
  const Tensor& B = node(b).value;
  require(A.rank() == 2 && B.rank() == 2,
          "matmul: needs rank-2 operands, got " + shape_str(A.shape) +
              " and " + shape_str(B.shape));
  require(A.shape[1] == B.shape[0], "matmul: inner dimensions disagree: " +
                                        shape_str(A.shape) + " vs " +
                                        shape_str(B.shape));
  const Index m = A.shape[0], k = A.shape[1], n = B.shape[1];
  Node nn;
  nn.op = Op::kMatMul;
  nn.inputs = {a.id(), b.id()};
  Tensor Y(Shape{m, n});
  const double* pa = A.data();
  const double* pb = B.data();
  double* py = Y.data();
  for (Index i = 0; i < m; ++i) {
    double* pyi = py + i * n;
    for (Index l = 0; l < k; ++l) {
      const double av = pa[i * k + l];
      const double* pbl = pb + l * n;
      for (Index j = 0; j < n; ++j) pyi[j] += av * pbl[j];
    }
  }
  nn.value = std::move(Y);
  return push(std::move(nn));
}

Var Graph::transpose(Var a) {
  check_mine(a, "transpose");
  const Tensor& A = node(a).value;
  require(A.rank() == 2,
          "transpose: needs a rank-2 operand, got " + shape_str(A.shape));
  const Index m = A.shape[0], n = A.shape[1];
  Node nn;
  nn.op = Op::kTranspose;
  nn.inputs = {a.id()};
  Tensor Y(Shape{n, m});
  for (Index i = 0; i < m; ++i)
    for (Index j = 0; j < n; ++j) Y.at(j, i) = A.at(i, j);
  nn.value = std::move(Y);
  return push(std::move(nn));
}

Var Graph::add(Var a, Var b) {
  check_mine(a, "add");
  check_mine(b, "add");
  const Tensor& A = node(a).value;
  const Tensor& B = node(b).value;
  check_same_shape(A, B, "add");
  Node nn;
  nn.op = Op::kAdd;
  nn.inputs = {a.id(), b.id()};
  Tensor Y(A.shape);
  for (Index i = 0; i < A.numel(); ++i) Y.at(i) = A.at(i) + B.at(i);
  nn.value = std::move(Y);
  return push(std::move(nn));
}

Var Graph::sub(Var a, Var b) {
  check_mine(a, "sub");
  check_mine(b, "sub");
  const Tensor& A = node(a).value;
  const Tensor& B = node(b).value;
  check_same_shape(A, B, "sub");
  Node nn;
  nn.op = Op::kSub;
  nn.inputs = {a.id(), b.id()};
  Tensor Y(A.shape);
  for (Index i = 0; i < A.numel(); ++i) Y.at(i) = A.at(i) - B.at(i);
  nn.value = std::move(Y);
  return push(std::move(nn));
}

Var Graph::mul(Var a, Var b) {
  check_mine(a, "mul");
  check_mine(b, "mul");
  const Tensor& A = node(a).value;
  const Tensor& B = node(b).value;
  check_same_shape(A, B, "mul");
  Node nn;
  nn.op = Op::kMul;
  nn.inputs = {a.id(), b.id()};
  Tensor Y(A.shape);
  for (Index i = 0; i < A.numel(); ++i) Y.at(i) = A.at(i) * B.at(i);
  nn.value = std::move(Y);
  return push(std::move(nn));
}

Var Graph::add_rowvec(Var mat, Var vec) {
  check_mine(mat, "add_rowvec");
  check_mine(vec, "add_rowvec");
  const Tensor& A = node(mat).value;
  const Tensor& v = node(vec).value;
  require(A.rank() == 2 && v.rank() == 1 && v.shape[0] == A.shape[1],
          "add_rowvec: got " + shape_str(A.shape) + " and " +
              shape_str(v.shape));
  Node nn;
  nn.op = Op::kAddRowVec;
  nn.inputs = {mat.id(), vec.id()};
  Tensor Y(A.shape);
  for (Index i = 0; i < A.shape[0]; ++i)
    for (Index j = 0; j < A.shape[1]; ++j) Y.at(i, j) = A.at(i, j) + v.at(j);
  nn.value = std::move(Y);
  return push(std::move(nn));
}

Var Graph::row_scale(Var mat, Var vec) {
  check_mine(mat, "row_scale");
  check_mine(vec, "row_scale");
  const Tensor& A = node(mat).value;
  const Tensor& v = node(vec).value;
  require(A.rank() == 2 && v.rank() == 1 && v.shape[0] == A.shape[0],
          "row_scale: got " + shape_str(A.shape) + " and " +
              shape_str(v.shape));
  Node nn;
  nn.op = Op::kRowScale;
  nn.inputs = {mat.id(), vec.id()};
  Tensor Y(A.shape);
  for (Index i = 0; i < A.shape[0]; ++i)
    for (Index j = 0; j < A.shape[1]; ++j) Y.at(i, j) = A.at(i, j) * v.at(i);
  nn.value = std::move(Y);
  return push(std::move(nn));
}

Var Graph::scale(Var a, double c) {
  check_mine(a, "scale");
  const Tensor& A = node(a).value;
  Node nn;
  nn.op = Op::kScale;
  nn.inputs = {a.id()};
  nn.c0 = c;
  Tensor Y(A.shape);
  for (Index i = 0; i < A.numel(); ++i) Y.at(i) = c * A.at(i);
  nn.value = std::move(Y);
  return push(std::move(nn));
}

Var Graph::add_const(Var a, double c) {
  check_mine(a, "add_const");
  const Tensor& A = node(a).value;
  Node nn;
  nn.op = Op::kAddConst;
  nn.inputs = {a.id()};
  nn.c0 = c;
  Tensor Y(A.shape);
  for (Index i = 0; i < A.numel(); ++i) Y.at(i) = A.at(i) + c;
  nn.value = std::move(Y);
  return push(std::move(nn));
}

Var Graph::rsub_const(double c, Var a) {
  check_mine(a, "rsub_const");
  const Tensor& A = node(a).value;
  Node nn;
  nn.op = Op::kRSubConst;
  nn.inputs = {a.id()};
  nn.c0 = c;
  Tensor Y(A.shape);
  for (Index i = 0; i < A.numel(); ++i) Y.at(i) = c - A.at(i);
  nn.value = std::move(Y);
  return push(std::move(nn));
}

Var Graph::relu(Var a) {
  check_mine(a, "relu");
  const Tensor& A = node(a).value;
  Node nn;
  nn.op = Op::kRelu;
  nn.inputs = {a.id()};
  Tensor Y(A.shape);
  for (Index i = 0; i < A.numel(); ++i) Y.at(i) = A.at(i) > 0.0 ? A.at(i) : 0.0;
  nn.value = std::move(Y);
  return push(std::move(nn));
}

Var Graph::log(Var a) {
  check_mine(a, "log");
  const Tensor& A = node(a).value;
  Node nn;
  nn.op = Op::kLog;
  nn.inputs = {a.id()};
  Tensor Y(A.shape);
  for (Index i = 0; i < A.numel(); ++i) Y.at(i) = std::log(A.at(i));
  nn.value = std::move(Y);
  return push(std::move(nn));
}

Var Graph::clamp(Var a, double lo, double hi) {
  check_mine(a, "clamp");
  require(lo <= hi, "clamp: lo > hi");
  const Tensor& A = node(a).value;
  Node nn;
  nn.op = Op::kClamp;
  nn.inputs = {a.id()};
  nn.c0 = lo;
  nn.c1 = hi;
  Tensor Y(A.shape);
  for (Index i = 0; i < A.numel(); ++i)
    Y.at(i) = std::min(std::max(A.at(i), lo), hi);
  nn.value = std::move(Y);
  return push(std::move(nn));
}

Var Graph::softmax(Var a, Index axis) {
  check_mine(a, "softmax");
  const Tensor& A = node(a).value;
  require(A.rank() <= 2, "softmax: rank > 2 unsupported, got " +
                             shape_str(A.shape));
  require(axis >= 0 && axis < std::max<Index>(A.rank(), 1),
          "softmax: axis " + std::to_string(axis) + " out of range for " +
              shape_str(A.shape));
  Node nn;
  nn.op = Op::kSoftmax;
  nn.inputs = {a.id()};
  nn.i0 = axis;
  Tensor Y(A.shape);
  auto slice_softmax = [](const double* x, double* y, Index n, Index stride) {
    double mx = x[0];
    for (Index i = 1; i < n; ++i) mx = std::max(mx, x[i * stride]);
    double s = 0.0;
    for (Index i = 0; i < n; ++i) {
      const double e = std::exp(x[i * stride] - mx);
      y[i * stride] = e;
      s += e;
    }
    for (Index i = 0; i < n; ++i) y[i * stride] /= s;
  };
  if (A.rank() <= 1) {
    slice_softmax(A.data(), Y.data(), A.numel(), 1);
  } else if (axis == 1) {
    for (Index r = 0; r < A.shape[0]; ++r)
      slice_softmax(A.data() + r * A.shape[1], Y.data() + r * A.shape[1],
                    A.shape[1], 1);
  } else {
    for (Index c = 0; c < A.shape[1]; ++c)
      slice_softmax(A.data() + c, Y.data() + c, A.shape[0], A.shape[1]);
  }
  nn.value = std::move(Y);
  return push(std::move(nn));
}

Var Graph::concat(const std::vector<Var>& parts, Index axis) {
  require(!parts.empty(), "concat: no inputs");
  for (Var p : parts) check_mine(p, "concat");
  const Tensor& first = node(parts[0]).value;
  const Index rank = first.rank();
  require(rank >= 1 && rank <= 2, "concat: rank must be 1 or 2");
  require(axis >= 0 && axis < rank, "concat: axis out of range");
  Index total = 0;
  for (Var p : parts) {
    const Tensor& t = node(p).value;
    require(t.rank() == rank, "concat: mixed ranks");
    if (rank == 2) {
      require(t.shape[1 - axis] == first.shape[1 - axis],
              "concat: off-axis dims disagree: " + shape_str(t.shape) +
                  " vs " + shape_str(first.shape));
    }
    total += t.shape[static_cast<std::size_t>(axis)];
  }
  Node nn;
  nn.op = Op::kConcat;
  nn.i0 = axis;
  for (Var p : parts) nn.inputs.push_back(p.id());
  Shape out_shape = first.shape;
  out_shape[static_cast<std::size_t>(axis)] = total;
  Tensor Y(out_shape);
  if (rank == 1 || axis == 0) {
    Index off = 0;
    for (Var p : parts) {
      const Tensor& t = node(p).value;
      std::copy(t.values.begin(), t.values.end(), Y.values.begin() + off);
      off += t.numel();
    }
  } else {
    Index col_off = 0;
    for (Var p : parts) {
      const Tensor& t = node(p).value;
      for (Index r = 0; r < t.shape[0]; ++r)
        for (Index c = 0; c < t.shape[1]; ++c)
          Y.at(r, col_off + c) = t.at(r, c);
      col_off += t.shape[1];
    }
  }
  nn.value = std::move(Y);
  return push(std::move(nn));
}

Var Graph::slice_rows(Var a, Index begin, Index count) {
  check_mine(a, "slice_rows");
  const Tensor& A = node(a).value;
  require(A.rank() == 2, "slice_rows: needs rank-2, got " +
                             shape_str(A.shape));
  require(begin >= 0 && count >= 0 && begin + count <= A.shape[0],
          "slice_rows: range [" + std::to_string(begin) + "," +
              std::to_string(begin + count) + ") out of " +
              std::to_string(A.shape[0]) + " rows");
  Node nn;
  nn.op = Op::kSliceRows;
  nn.inputs = {a.id()};
  nn.i0 = begin;
  nn.i1 = count;
  Tensor Y(Shape{count, A.shape[1]});
  std::copy(A.values.begin() + begin * A.shape[1],
            A.values.begin() + (begin + count) * A.shape[1],
            Y.values.begin());
  nn.value = std::move(Y);
  return push(std::move(nn));
}

Var Graph::gather(Var a, Index index) {
  check_mine(a, "gather");
  const Tensor& A = node(a).value;
  require(A.rank() == 1 || A.rank() == 2,
          "gather: needs rank 1 or 2, got " + shape_str(A.shape));
  require(index >= 0 && index < A.shape[0],
          "gather: index " + std::to_string(index) + " out of " +
              std::to_string(A.shape[0]));
  Node nn;
  nn.op = Op::kGather;
  nn.inputs = {a.id()};
  nn.i0 = index;
  if (A.rank() == 1) {
    nn.value = Tensor::scalar(A.at(index));
  } else {
    Tensor Y(Shape{A.shape[1]});
    for (Index j = 0; j < A.shape[1]; ++j) Y.at(j) = A.at(index, j);
    nn.value = std::move(Y);
  }
  return push(std::move(nn));
}

Var Graph::scatter(Var a, const std::vector<Index>& index_map,
                   Index out_size) {
  check_mine(a, "scatter");
  const Tensor& A = node(a).value;
  require(A.rank() == 1, "scatter: needs rank-1, got " + shape_str(A.shape));
  require(static_cast<Index>(index_map.size()) == A.numel(),
          "scatter: index map size " + std::to_string(index_map.size()) +
              " does not match input " + std::to_string(A.numel()));
  std::vector<char> seen(static_cast<std::size_t>(out_size), 0);
  for (Index t : index_map) {
    require(t >= 0 && t < out_size, "scatter: target " + std::to_string(t) +
                                        " out of " + std::to_string(out_size));
    require(!seen[static_cast<std::size_t>(t)],
            "scatter: duplicate target " + std::to_string(t));
    seen[static_cast<std::size_t>(t)] = 1;
  }
  Node nn;
  nn.op = Op::kScatter;
  nn.inputs = {a.id()};
  nn.idx = index_map;
  nn.i1 = out_size;
  Tensor Y(Shape{out_size});
  for (Index i = 0; i < A.numel(); ++i) Y.at(index_map[i]) = A.at(i);
  nn.value = std::move(Y);
  return push(std::move(nn));
}

Var Graph::sum(Var a) {
  check_mine(a, "sum");
  const Tensor& A = node(a).value;
  Node nn;
  nn.op = Op::kSum;
  nn.inputs = {a.id()};
  nn.value = Tensor::scalar(A.sum());
  return push(std::move(nn));
}

Var Graph::mean(Var a) {
  check_mine(a, "mean");
  const Tensor& A = node(a).value;
  require(A.numel() > 0, "mean: empty tensor");
  Node nn;
  nn.op = Op::kMean;
  nn.inputs = {a.id()};
  nn.value = Tensor::scalar(A.sum() / static_cast<double>(A.numel()));
  return push(std::move(nn));
}

Var Graph::mean_rows(Var a) {
  check_mine(a, "mean_rows");
  const Tensor& A = node(a).value;
  require(A.rank() == 2 && A.shape[0] > 0,
          "mean_rows: needs a non-empty rank-2 input, got " +
              shape_str(A.shape));
  Node nn;
  nn.op = Op::kMeanRows;
  nn.inputs = {a.id()};
  Tensor Y(Shape{1, A.shape[1]});
  for (Index c = 0; c < A.shape[1]; ++c) {
    double s = 0.0;
    for (Index r = 0; r < A.shape[0]; ++r) s += A.at(r, c);
    Y.at(0, c) = s / static_cast<double>(A.shape[0]);
  }
  nn.value = std::move(Y);
  return push(std::move(nn));
}

Var Graph::stack_scalars(const std::vector<Var>& xs) {
  require(!xs.empty(), "stack_scalars: no inputs");
  Node nn;
  nn.op = Op::kStackScalars;
  Tensor Y(Shape{static_cast<Index>(xs.size())});
  for (std::size_t i = 0; i < xs.size(); ++i) {
    check_mine(xs[i], "stack_scalars");
    const Tensor& t = node(xs[i]).value;
    require(t.numel() == 1, "stack_scalars: input " + std::to_string(i) +
                                " has shape " + shape_str(t.shape));
    Y.at(static_cast<Index>(i)) = t.values[0];
    nn.inputs.push_back(xs[i].id());
  }
  nn.value = std::move(Y);
  return push(std::move(nn));
}

Var Graph::reshape(Var a, Shape shape) {
  check_mine(a, "reshape");
  const Tensor& A = node(a).value;
  require(shape_numel(shape) == A.numel(),
          "reshape: cannot view " + shape_str(A.shape) + " as " +
              shape_str(shape));
  Node nn;
  nn.op = Op::kReshape;
  nn.inputs = {a.id()};
  Tensor Y(std::move(shape), A.values);
  nn.value = std::move(Y);
  return push(std::move(nn));
}

Var Graph::batch_norm(Var x, Var gamma, Var beta, BatchNormStats& stats,
                      Mode mode) {
  check_mine(x, "batch_norm");
  check_mine(gamma, "batch_norm");
  check_mine(beta, "batch_norm");
  const Tensor& X = node(x).value;
  const Tensor& G = node(gamma).value;
  const Tensor& B = node(beta).value;
  require(X.rank() == 2, "batch_norm: input must be rank-2, got " +
                             shape_str(X.shape));
  const Index R = X.shape[0], C = X.shape[1];
  require(R >= 1, "batch_norm: empty batch");
  require(G.rank() == 1 && G.shape[0] == C && B.rank() == 1 &&
              B.shape[0] == C,
          "batch_norm: scale/shift must be [" + std::to_string(C) + "]");
  require(stats.running_mean.numel() == C && stats.running_var.numel() == C,
          "batch_norm: running stats sized for " +
              std::to_string(stats.running_mean.numel()) + " channels, need " +
              std::to_string(C));
  Node nn;
  nn.op = Op::kBatchNorm;
  nn.inputs = {x.id(), gamma.id(), beta.id()};
  nn.bn = &stats;
  nn.i0 = mode == Mode::train ? 0 : 1;
  Tensor xhat(Shape{R, C});
  Tensor istd(Shape{C});
  Tensor Y(Shape{R, C});
  for (Index c = 0; c < C; ++c) {
    double mu, var;
    if (mode == Mode::train) {
      double s = 0.0;
      for (Index r = 0; r < R; ++r) s += X.at(r, c);
      mu = s / static_cast<double>(R);
      double v = 0.0;
      for (Index r = 0; r < R; ++r) {
        const double d = X.at(r, c) - mu;
        v += d * d;
      }
      var = v / static_cast<double>(R);  // biased, used for normalization
      const double unbiased =
          R > 1 ? var * static_cast<double>(R) / static_cast<double>(R - 1)
                : var;
      stats.running_mean.at(c) =
          (1.0 - stats.momentum) * stats.running_mean.at(c) +
          stats.momentum * mu;
      stats.running_var.at(c) =
          (1.0 - stats.momentum) * stats.running_var.at(c) +
          stats.momentum * unbiased;
    } else {
      mu = stats.running_mean.at(c);
      var = stats.running_var.at(c);
    }
    const double is = 1.0 / std::sqrt(var + stats.epsilon);
    istd.at(c) = is;
    for (Index r = 0; r < R; ++r) {
      const double xh = (X.at(r, c) - mu) * is;
      xhat.at(r, c) = xh;
      Y.at(r, c) = G.at(c) * xh + B.at(c);
    }
  }
  nn.saved = std::move(xhat);
  nn.saved2 = std::move(istd);
  nn.value = std::move(Y);
  return push(std::move(nn));
}

Var Graph::grad_reverse(Var a, double eta) {
  check_mine(a, "grad_reverse");
  Node nn;
  nn.op = Op::kGradReverse;
  nn.inputs = {a.id()};
  nn.c0 = eta;
  nn.value = node(a).value;
  return push(std::move(nn));
}

void Graph::backward(Var root) {
  check_mine(root, "backward");
  require(node(root).value.numel() == 1,
          "backward: root must be a single element, got shape " +
              shape_str(node(root).value.shape));
  const Index rid = root.id();
  // Structural liveness: only ancestors of the root do backward work.
  std::vector<char> alive(static_cast<std::size_t>(rid) + 1, 0);
  alive[static_cast<std::size_t>(rid)] = 1;
  for (Index i = rid; i >= 0; --i) {
    if (!alive[static_cast<std::size_t>(i)]) continue;
    for (Index in : nodes_[static_cast<std::size_t>(i)].inputs)
      alive[static_cast<std::size_t>(in)] = 1;
  }
  for (Index i = 0; i <= rid; ++i) {
    Node& n = nodes_[static_cast<std::size_t>(i)];
    if (alive[static_cast<std::size_t>(i)])
      n.grad = Tensor(n.value.shape);
    else
      n.grad = Tensor();
  }
  nodes_[static_cast<std::size_t>(rid)].grad.values[0] = 1.0;
  for (Index i = rid; i >= 0; --i) {
    if (alive[static_cast<std::size_t>(i)]) backward_node(i);
  }
}

void Graph::backward_node(Index id) {
  Node& n = nodes_[static_cast<std::size_t>(id)];
  const Tensor& dY = n.grad;
  auto in_val = [&](int slot) -> const Tensor& {
    return nodes_[static_cast<std::size_t>(n.inputs[slot])].value;
  };
  auto in_grad = [&](int slot) -> Tensor& {
    return nodes_[static_cast<std::size_t>(n.inputs[slot])].grad;
  };
  switch (n.op) {
    case Op::kInput:
      break;
    case Op::kLeaf: {
      Tensor& g = n.param->grad;
      for (Index i = 0; i < g.numel(); ++i) g.at(i) += dY.at(i);
      break;
    }
    case Op::kMatMul: {
      const Tensor& A = in_val(0);
      const Tensor& B = in_val(1);
      Tensor& dA = in_grad(0);
      Tensor& dB = in_grad(1);
      const Index m = A.shape[0], k = A.shape[1], nc = B.shape[1];
      // dA = dY B^T
      for (Index i = 0; i < m; ++i)
        for (Index l = 0; l < k; ++l) {
          double s = 0.0;
          const double* py = dY.data() + i * nc;
          const double* pb = B.data() + l * nc;
          for (Index j = 0; j < nc; ++j) s += py[j] * pb[j];
          dA.at(i, l) += s;
        }
      // dB = A^T dY
      for (Index i = 0; i < m; ++i)
        for (Index l = 0; l < k; ++l) {
          const double av = A.at(i, l);
          double* pdb = dB.data() + l * nc;
          const double* py = dY.data() + i * nc;
          for (Index j = 0; j < nc; ++j) pdb[j] += av * py[j];
        }
      break;
    }
    case Op::kTranspose: {
      Tensor& dA = in_grad(0);
      const Index m = dA.shape[0], nc = dA.shape[1];
      for (Index i = 0; i < m; ++i)
        for (Index j = 0; j < nc; ++j) dA.at(i, j) += dY.at(j, i);
      break;
    }
    case Op::kAdd: {
      Tensor& dA = in_grad(0);
      Tensor& dB = in_grad(1);
      for (Index i = 0; i < dY.numel(); ++i) {
        dA.at(i) += dY.at(i);
        dB.at(i) += dY.at(i);
      }
      break;
    }
    case Op::kSub: {
      Tensor& dA = in_grad(0);
      Tensor& dB = in_grad(1);
      for (Index i = 0; i < dY.numel(); ++i) {
        dA.at(i) += dY.at(i);
        dB.at(i) -= dY.at(i);
      }
      break;
    }
    case Op::kMul: {
      const Tensor& A = in_val(0);
      const Tensor& B = in_val(1);
      Tensor& dA = in_grad(0);
      Tensor& dB = in_grad(1);
      for (Index i = 0; i < dY.numel(); ++i) {
        dA.at(i) += dY.at(i) * B.at(i);
        dB.at(i) += dY.at(i) * A.at(i);
      }
      break;
    }
    case Op::kAddRowVec: {
      Tensor& dA = in_grad(0);
      Tensor& dv = in_grad(1);
      const Index m = dA.shape[0], nc = dA.shape[1];
      for (Index i = 0; i < m; ++i)
        for (Index j = 0; j < nc; ++j) {
          dA.at(i, j) += dY.at(i, j);
          dv.at(j) += dY.at(i, j);
        }
      break;
    }
    case Op::kRowScale: {
      const Tensor& A = in_val(0);
      const Tensor& v = in_val(1);
      Tensor& dA = in_grad(0);
      Tensor& dv = in_grad(1);
      const Index m = A.shape[0], nc = A.shape[1];
      for (Index i = 0; i < m; ++i) {
        double s = 0.0;
        for (Index j = 0; j < nc; ++j) {
          dA.at(i, j) += dY.at(i, j) * v.at(i);
          s += dY.at(i, j) * A.at(i, j);
        }
        dv.at(i) += s;
      }
      break;
    }
    case Op::kScale: {
      Tensor& dA = in_grad(0);
      for (Index i = 0; i < dY.numel(); ++i) dA.at(i) += n.c0 * dY.at(i);
      break;
    }
    case Op::kAddConst: {
      Tensor& dA = in_grad(0);
      for (Index i = 0; i < dY.numel(); ++i) dA.at(i) += dY.at(i);
      break;
    }
    case Op::kRSubConst: {
      Tensor& dA = in_grad(0);
      for (Index i = 0; i < dY.numel(); ++i) dA.at(i) -= dY.at(i);
      break;
    }
    case Op::kRelu: {
      const Tensor& A = in_val(0);
      Tensor& dA = in_grad(0);
      for (Index i = 0; i < dY.numel(); ++i)
        if (A.at(i) > 0.0) dA.at(i) += dY.at(i);
      break;
    }
    case Op::kLog: {
      const Tensor& A = in_val(0);
      Tensor& dA = in_grad(0);
      for (Index i = 0; i < dY.numel(); ++i) dA.at(i) += dY.at(i) / A.at(i);
      break;
    }
    case Op::kClamp: {
      const Tensor& A = in_val(0);
      Tensor& dA = in_grad(0);
      for (Index i = 0; i < dY.numel(); ++i)
        if (A.at(i) > n.c0 && A.at(i) < n.c1) dA.at(i) += dY.at(i);
      break;
    }
    case Op::kSoftmax: {
      const Tensor& Y = n.value;
      Tensor& dA = in_grad(0);
      auto slice_back = [](const double* y, const double* dy, double* dx,
                           Index len, Index stride) {
        double dot = 0.0;
        for (Index i = 0; i < len; ++i) dot += dy[i * stride] * y[i * stride];
        for (Index i = 0; i < len; ++i)
          dx[i * stride] += y[i * stride] * (dy[i * stride] - dot);
      };
      if (Y.rank() <= 1) {
        slice_back(Y.data(), dY.data(), dA.data(), Y.numel(), 1);
      } else if (n.i0 == 1) {
        for (Index r = 0; r < Y.shape[0]; ++r)
          slice_back(Y.data() + r * Y.shape[1], dY.data() + r * Y.shape[1],
                     dA.data() + r * Y.shape[1], Y.shape[1], 1);
      } else {
        for (Index c = 0; c < Y.shape[1]; ++c)
          slice_back(Y.data() + c, dY.data() + c, dA.data() + c, Y.shape[0],
                     Y.shape[1]);
      }
      break;
    }
    case Op::kConcat: {
      const Index axis = n.i0;
      if (n.value.rank() == 1 || axis == 0) {
        Index off = 0;
        for (std::size_t s = 0; s < n.inputs.size(); ++s) {
          Tensor& dA = in_grad(static_cast<int>(s));
          for (Index i = 0; i < dA.numel(); ++i) dA.at(i) += dY.at(off + i);
          off += dA.numel();
        }
      } else {
        Index col_off = 0;
        for (std::size_t s = 0; s < n.inputs.size(); ++s) {
          Tensor& dA = in_grad(static_cast<int>(s));
          for (Index r = 0; r < dA.shape[0]; ++r)
            for (Index c = 0; c < dA.shape[1]; ++c)
              dA.at(r, c) += dY.at(r, col_off + c);
          col_off += dA.shape[1];
        }
      }
      break;
    }
    case Op::kSliceRows: {
      Tensor& dA = in_grad(0);
      const Index cols = dA.shape[1];
      for (Index r = 0; r < n.i1; ++r)
        for (Index c = 0; c < cols; ++c)
          dA.at(n.i0 + r, c) += dY.at(r, c);
      break;
    }
    case Op::kGather: {
      Tensor& dA = in_grad(0);
      if (dA.rank() == 1) {
        dA.at(n.i0) += dY.at(0);
      } else {
        for (Index j = 0; j < dA.shape[1]; ++j) dA.at(n.i0, j) += dY.at(j);
      }
      break;
    }
    case Op::kScatter: {
      Tensor& dA = in_grad(0);
      for (Index i = 0; i < dA.numel(); ++i) dA.at(i) += dY.at(n.idx[i]);
      break;
    }
    case Op::kSum: {
      Tensor& dA = in_grad(0);
      for (Index i = 0; i < dA.numel(); ++i) dA.at(i) += dY.at(0);
      break;
    }
    case Op::kMean: {
      Tensor& dA = in_grad(0);
      const double g = dY.at(0) / static_cast<double>(dA.numel());
      for (Index i = 0; i < dA.numel(); ++i) dA.at(i) += g;
      break;
    }
    case Op::kMeanRows: {
      Tensor& dA = in_grad(0);
      const Index m = dA.shape[0], nc = dA.shape[1];
      for (Index c = 0; c < nc; ++c) {
        const double g = dY.at(0, c) / static_cast<double>(m);
        for (Index r = 0; r < m; ++r) dA.at(r, c) += g;
      }
      break;
    }
    case Op::kStackScalars: {
      for (std::size_t s = 0; s < n.inputs.size(); ++s)
        in_grad(static_cast<int>(s)).at(0) += dY.at(static_cast<Index>(s));
      break;
    }
    case Op::kReshape: {
      Tensor& dA = in_grad(0);
      for (Index i = 0; i < dA.numel(); ++i) dA.at(i) += dY.at(i);
      break;
    }
    case Op::kBatchNorm: {
      const Tensor& G = in_val(1);
      const Tensor& xhat = n.saved;
      const Tensor& istd = n.saved2;
      Tensor& dX = in_grad(0);
      Tensor& dG = in_grad(1);
      Tensor& dB = in_grad(2);
      const Index R = xhat.shape[0], C = xhat.shape[1];
      for (Index c = 0; c < C; ++c) {
        double sdy = 0.0, sdyx = 0.0;
        for (Index r = 0; r < R; ++r) {
          sdy += dY.at(r, c);
          sdyx += dY.at(r, c) * xhat.at(r, c);
        }
        dG.at(c) += sdyx;
        dB.at(c) += sdy;
        const double gi = G.at(c) * istd.at(c);
        if (n.i0 == 1) {  // eval: running stats are constants
          for (Index r = 0; r < R; ++r) dX.at(r, c) += gi * dY.at(r, c);
        } else {
          const double mdy = sdy / static_cast<double>(R);
          const double mdyx = sdyx / static_cast<double>(R);
          for (Index r = 0; r < R; ++r)
            dX.at(r, c) += gi * (dY.at(r, c) - mdy - xhat.at(r, c) * mdyx);
        }
      }
      break;
    }
    case Op::kGradReverse: {
      Tensor& dA = in_grad(0);
      for (Index i = 0; i < dY.numel(); ++i) dA.at(i) -= n.c0 * dY.at(i);
      break;
    }
  }
}

Index argmax(const Tensor& scores) {
  require(scores.rank() == 1 && scores.numel() > 0,
          "argmax: needs a non-empty rank-1 tensor");
  Index best = 0;
  for (Index i = 1; i < scores.numel(); ++i)
    if (scores.at(i) > scores.at(best)) best = i;
  return best;
}

Index argmax_masked(const Tensor& scores, const Tensor& mask) {
  require(scores.rank() == 1 && mask.rank() == 1 &&
              scores.shape == mask.shape,
          "argmax_masked: scores " + shape_str(scores.shape) +
              " vs mask " + shape_str(mask.shape));
  Index best = -1;
  for (Index i = 0; i < scores.numel(); ++i) {
    if (mask.at(i) == 0.0) continue;
    if (best < 0 || scores.at(i) > scores.at(best)) best = i;
  }
  require(best >= 0, "argmax_masked: mask selects no entries");
  return best;
}

}  // namespace gada
