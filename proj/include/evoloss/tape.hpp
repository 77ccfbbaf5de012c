#pragma once

#include <functional>
#include <map>
#include <string>
#include <vector>

#include "evoloss/dense_array.hpp"
#include "evoloss/param_set.hpp"

namespace evoloss {

class Tape;

// Handle to a node on a Tape. Valid only for the tape that produced it.
struct Var {
  std::size_t idx = 0;
};

// Reverse-mode recording of one forward computation. The tape is rebuilt for
// every forward pass; leaves reference the ParamSet storage without copying.
// backward() may be called exactly once per recording.
class Tape {
 public:
  explicit Tape(const ParamSet& params, bool track_gradients = true);
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  // Leaf for a named parameter.
  Var leaf(const std::string& name) const;
  // Leaf that receives no gradient (inputs, targets).
  Var constant(DenseArray value);

  const DenseArray& value(Var v) const {
    const Node& n = nodes_[v.idx];
    return n.external ? *n.external : n.owned;
  }

  // y = a * b for rank-2 row-major matrices.
  Var matmul(Var a, Var b);
  // y = m + v broadcast over rows.
  Var add_rowvec(Var m, Var v);
  // y = x * w + b; x:[n,k], w:[k,h], b:[h].
  Var affine(Var x, Var w, Var b) { return add_rowvec(matmul(x, w), b); }
  // y = m * v; m:[n,k], v:[k] -> [n].
  Var matvec(Var m, Var v);
  // max(0, x) elementwise.
  Var relu(Var x);
  // 1 / (1 + exp(-x)) elementwise, clamped to [1e-12, 1 - 1e-12].
  Var logistic(Var x);
  // a * x + b elementwise with scalar constants.
  Var axpb(Var x, double a, double b);
  // Elementwise sum; shapes must match.
  Var add(Var a, Var b);
  // Vector plus broadcast scalar node.
  Var add_scalar(Var v, Var s);
  // Mean over groups of `segment` consecutive rows.
  Var segment_mean_rows(Var x, std::size_t segment);
  // [n,c1] ++ [n,c2] -> [n, c1+c2].
  Var concat_cols(Var a, Var b);
  // Row rotation: y[i] = x[(i + shift) mod n]. Pairs each batch row with a
  // different row as its negative sample.
  Var roll_rows(Var x, std::size_t shift);
  // Row-wise Euclidean distance: [n,k],[n,k] -> [n].
  Var rows_l2_dist(Var a, Var b);
  // Mean of all elements -> scalar.
  Var mean(Var x);
  // Mean squared elementwise difference -> scalar.
  Var mse(Var a, Var b);
  // Mean binary cross-entropy of probabilities p against 0/1 labels.
  Var bce_mean(Var p, std::vector<double> labels);
  // Mean softmax cross-entropy of logits [n,C] against class indices.
  Var softmax_ce(Var logits, std::vector<int> labels);
  // Weighted sum of scalar nodes.
  Var weighted_sum(const std::vector<Var>& xs, const std::vector<double>& ws);
  // Detaches x: same value, no gradient flows through.
  Var stop_gradient(Var x);

  // Gradients of a scalar loss with respect to every parameter leaf.
  // Parameters the loss does not depend on get all-zero gradients.
  GradSet backward(Var loss);

  bool tracking() const { return track_; }

 private:
  // Values live in `owned`, except parameter leaves which point at the
  // ParamSet storage (stable across tape growth, unlike node addresses).
  struct Node {
    DenseArray owned;
    const DenseArray* external = nullptr;
    DenseArray grad;
    bool needs_grad = false;
    std::function<void(Tape&, std::size_t)> backprop;
  };

  Var make_node(DenseArray value, bool needs_grad,
                std::function<void(Tape&, std::size_t)> backprop);
  void accumulate(std::size_t idx, const DenseArray& g);
  void accumulate_owned(std::size_t idx, DenseArray&& g);
  bool needs(Var v) const { return nodes_[v.idx].needs_grad; }
  const DenseArray& grad_of(std::size_t idx) const { return nodes_[idx].grad; }
  void check_scalar(Var v, const char* op) const;

  const ParamSet& params_;
  std::vector<Node> nodes_;
  std::map<std::string, std::size_t> leaf_index_;
  bool track_ = true;
  bool backward_done_ = false;
};

}  // namespace evoloss
