#pragma once

// Matrix-level reverse-mode automatic differentiation.
//
// Every op produces a Var that owns its value and, when any input needs a
// gradient, a closure that pushes the output gradient back to the inputs.
// Graphs are built per forward pass and discarded afterwards.

#include <functional>
#include <memory>
#include <span>
#include <vector>

#include "dcmn/types.hpp"

namespace dcmn::ad {

struct Node {
  Matrix value;
  Matrix grad;  // empty until something flows into it
  bool needs_grad = false;
  std::vector<std::shared_ptr<Node>> inputs;
  std::function<void(Node&)> backprop;

  void accumulate(const Matrix& g);
};

class Var {
 public:
  Var() = default;
  explicit Var(std::shared_ptr<Node> node) : node_(std::move(node)) {}

  const Matrix& value() const { return node_->value; }
  const Matrix& grad() const { return node_->grad; }
  Eigen::Index rows() const { return node_->value.rows(); }
  Eigen::Index cols() const { return node_->value.cols(); }
  bool needs_grad() const { return node_ && node_->needs_grad; }
  bool valid() const { return static_cast<bool>(node_); }
  Node& node() const { return *node_; }
  const std::shared_ptr<Node>& ptr() const { return node_; }

 private:
  std::shared_ptr<Node> node_;
};

Var constant(Matrix value);
/// Leaf that collects a gradient during backward().
Var parameter(Matrix value);

/// Generic op constructor for fused kernels defined outside this file. The
/// closure receives the finished output node; inputs are in `out.inputs`.
Var make_op(Matrix value, std::vector<Var> inputs, std::function<void(Node&)> backprop);

/// Seeds d(root)/d(root) = 1 (root must be 1x1) and runs reverse accumulation.
void backward(const Var& root);

Var matmul(const Var& a, const Var& b);
/// a * b^T, the natural form for x W^T with W stored out x in.
Var matmul_nt(const Var& a, const Var& b);
Var add(const Var& a, const Var& b);
Var sub(const Var& a, const Var& b);
/// Adds a 1 x c row to every row of a.
Var add_row(const Var& a, const Var& row);
Var mul(const Var& a, const Var& b);
Var mul_const(const Var& a, const Matrix& mask);
Var scale(const Var& a, double s);

Var tanh(const Var& a);
Var sigmoid(const Var& a);
Var elu(const Var& a);
Var mish(const Var& a);

/// Row-wise layer normalization with 1 x c gain and offset.
Var layer_norm_rows(const Var& x, const Var& gain, const Var& offset, double epsilon);
Var softmax_rows(const Var& x);

Var slice_cols(const Var& a, Eigen::Index start, Eigen::Index count);
Var concat_cols(std::span<const Var> parts);
Var concat_rows(std::span<const Var> parts);
/// out.row(i) = a.row(index[i]); backward scatter-adds.
Var gather_rows(const Var& a, std::vector<Eigen::Index> index);
/// Row-major reinterpretation.
Var reshape(const Var& a, Eigen::Index rows, Eigen::Index cols);

Var sum(const Var& a);
/// Sum of elementwise Huber losses between prediction and a fixed target.
Var huber_sum(const Var& prediction, const Matrix& target, double tau);
/// Sum over rows of -log softmax(logits)[row, label[row]].
Var cross_entropy_rows(const Var& logits, std::span<const int> labels);

}  // namespace dcmn::ad
