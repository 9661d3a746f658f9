#pragma once

#include <algorithm>
#include <string>
#include <vector>

#include "gada/tensor.hpp"

namespace gada {

enum class Mode { train, eval };

/// Trainable tensor plus its accumulated gradient. Parameters live outside
/// any Graph; backward passes accumulate into `grad` until zero_grad().
struct Parameter {
  std::string name;
  Tensor value;
  Tensor grad;
  bool decay = true;  // optimizer applies weight decay iff set

  Parameter() = default;
  Parameter(std::string n, Tensor v, bool decay_flag = true)
      : name(std::move(n)), value(std::move(v)), grad(value.shape),
        decay(decay_flag) {
    value.requires_grad = true;
  }

  void zero_grad() {
    std::fill(grad.values.begin(), grad.values.end(), 0.0);
  }
};

/// Running statistics for one batch-norm site. Not trainable; mutated by
/// train-mode forwards and serialized with checkpoints.
struct BatchNormStats {
  Tensor running_mean;
  Tensor running_var;
  double momentum = 0.1;
  double epsilon = 1e-5;

  BatchNormStats() = default;
  explicit BatchNormStats(Index channels)
      : running_mean(Shape{channels}),
        running_var(Tensor::ones(Shape{channels})) {}
};

class Graph;

/// Cheap handle to a node in a Graph.
class Var {
 public:
  Var() = default;
  bool valid() const { return g_ != nullptr; }
  Index id() const { return id_; }

 private:
  friend class Graph;
  Var(Graph* g, Index id) : g_(g), id_(id) {}
  Graph* g_ = nullptr;
  Index id_ = -1;
};

/// Reverse-mode tape over dense f64 tensors. Forward values are computed
/// eagerly as nodes are created; backward() walks nodes in reverse creation
/// order, which fixes the gradient accumulation order and makes both passes
/// bitwise deterministic.
class Graph {
 public:
  /// Constant (non-trainable) node.
  Var input(Tensor v);
  /// Trainable node; backward accumulates into p.grad. The parameter must
  /// outlive the graph.
  Var leaf(Parameter& p);

  Var matmul(Var a, Var b);
  Var transpose(Var a);
  Var add(Var a, Var b);
  Var sub(Var a, Var b);
  Var mul(Var a, Var b);
  /// mat [m,n] + vec [n] broadcast over rows.
  Var add_rowvec(Var mat, Var vec);
  /// Row r of mat scaled by vec[r]; mat [m,n], vec [m].
  Var row_scale(Var mat, Var vec);
  Var scale(Var a, double c);
  Var add_const(Var a, double c);
  /// c - a.
  Var rsub_const(double c, Var a);
  Var relu(Var a);
  /// Natural log; inputs must be positive (clamp first if unsure).
  Var log(Var a);
  Var clamp(Var a, double lo, double hi);
  Var softmax(Var a, Index axis);
  Var concat(const std::vector<Var>& parts, Index axis);
  Var slice_rows(Var a, Index begin, Index count);
  /// Rank-1 input: element {1}. Rank-2 input: row [n].
  Var gather(Var a, Index index);
  /// Rank-1 [k] scattered into zeros of size out_size: y[index_map[i]] = x[i].
  Var scatter(Var a, const std::vector<Index>& index_map, Index out_size);
  Var sum(Var a);
  Var mean(Var a);
  /// Column means of a [m,n] matrix, shape [1,n].
  Var mean_rows(Var a);
  /// k single-element nodes stacked into shape [k].
  Var stack_scalars(const std::vector<Var>& xs);
  Var reshape(Var a, Shape shape);
  /// x [rows, C] normalized per channel. Train mode uses batch statistics and
  /// updates `stats`; eval mode uses the running statistics.
  Var batch_norm(Var x, Var gamma, Var beta, BatchNormStats& stats, Mode mode);
  /// Identity forward; backward multiplies the incoming gradient by -eta.
  Var grad_reverse(Var a, double eta);

  /// Backpropagates from a single-element root. Node gradients are reset
  /// first; Parameter grads accumulate across calls.
  void backward(Var root);

  const Tensor& value(Var v) const;
  /// Gradient of the last backward root w.r.t. this node.
  const Tensor& grad(Var v) const;
  Index size() const { return static_cast<Index>(nodes_.size()); }

 private:
  enum class Op {
    kInput, kLeaf, kMatMul, kTranspose, kAdd, kSub, kMul, kAddRowVec,
    kRowScale, kScale, kAddConst, kRSubConst, kRelu, kLog, kClamp, kSoftmax,
    kConcat, kSliceRows, kGather, kScatter, kSum, kMean, kMeanRows,
    kStackScalars, kReshape, kBatchNorm, kGradReverse,
  };

  struct Node {
    Op op;
    Tensor value;
    Tensor grad;
    std::vector<Index> inputs;
    Parameter* param = nullptr;
    BatchNormStats* bn = nullptr;
    std::vector<Index> idx;  // scatter map
    Index i0 = 0;            // axis / begin / index / bn mode
    Index i1 = 0;            // count / scatter size
    double c0 = 0.0;         // scale / clamp lo / eta
    double c1 = 0.0;         // clamp hi
    Tensor saved;            // op byproducts (bn xhat)
    Tensor saved2;           // bn inv-std
  };

  Var push(Node n);
  const Node& node(Var v) const;
  Node& node(Var v);
  void check_mine(Var v, const char* op) const;
  void backward_node(Index id);

  std::vector<Node> nodes_;
};

/// Argmax over entries where mask[i] != 0; first maximum wins. Guarantees the
/// result lies in the masked-in set even when every masked-in value is 0.
Index argmax_masked(const Tensor& scores, const Tensor& mask);

/// Plain argmax over a rank-1 tensor, first maximum wins.
Index argmax(const Tensor& scores);

}  // namespace gada
