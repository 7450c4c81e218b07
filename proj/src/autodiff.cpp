#include "dcmn/autodiff.hpp"

#include <unordered_set>

#include "dcmn/nn.hpp"

namespace dcmn::ad {

void Node::accumulate(const Matrix& g) {
  if (!needs_grad) return;
  if (grad.size() == 0)
    grad = g;
  else
    grad += g;
}

namespace {

std::shared_ptr<Node> new_node(Matrix value) {
  auto n = std::make_shared<Node>();
  n->value = std::move(value);
  return n;
}

Node& in(Node& out, std::size_t i) { return *out.inputs[i]; }

void require_same_shape(const Var& a, const Var& b, const char* op) {
  require_dims(a.rows() == b.rows() && a.cols() == b.cols(),
               std::string(op) + ": shape mismatch (" + std::to_string(a.rows()) + "x" +
                   std::to_string(a.cols()) + " vs " + std::to_string(b.rows()) + "x" +
                   std::to_string(b.cols()) + ")");
}

template <class F, class G>
Var unary(const Var& a, F f, G df) {
  Matrix v = a.value().unaryExpr(f);
  return make_op(std::move(v), {a}, [df](Node& out) {
    Node& x = in(out, 0);
    x.accumulate(out.grad.cwiseProduct(x.value.unaryExpr(df)));
  });
}

}  // namespace

Var constant(Matrix value) { return Var(new_node(std::move(value))); }

Var parameter(Matrix value) {
  auto n = new_node(std::move(value));
  n->needs_grad = true;
  return Var(n);
}

Var make_op(Matrix value, std::vector<Var> inputs, std::function<void(Node&)> backprop) {
  auto n = new_node(std::move(value));
  for (const auto& v : inputs) n->needs_grad = n->needs_grad || v.needs_grad();
  if (n->needs_grad) {
    n->inputs.reserve(inputs.size());
    for (const auto& v : inputs) n->inputs.push_back(v.ptr());
    n->backprop = std::move(backprop);
  }
  return Var(n);
}

void backward(const Var& root) {
  require_dims(root.rows() == 1 && root.cols() == 1, "backward: root must be a scalar");
  if (!root.needs_grad()) return;
  std::vector<Node*> order;
  std::unordered_set<Node*> seen;
  std::vector<std::pair<Node*, std::size_t>> stack{{&root.node(), 0}};
  seen.insert(&root.node());
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    if (next < node->inputs.size()) {
      Node* child = node->inputs[next++].get();
      if (child->needs_grad && seen.insert(child).second) stack.emplace_back(child, 0);
    } else {
      order.push_back(node);
      stack.pop_back();
    }
  }
  root.node().grad = Matrix::Ones(1, 1);
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    Node* n = *it;
    if (n->backprop && n->grad.size() != 0) n->backprop(*n);
  }
}

Var matmul(const Var& a, const Var& b) {
  require_dims(a.cols() == b.rows(), "matmul: inner dimensions differ");
  return make_op(a.value() * b.value(), {a, b}, [](Node& out) {
    Node& x = in(out, 0);
    Node& y = in(out, 1);
    if (x.needs_grad) x.accumulate(out.grad * y.value.transpose());
    if (y.needs_grad) y.accumulate(x.value.transpose() * out.grad);
  });
}

Var matmul_nt(const Var& a, const Var& b) {
  require_dims(a.cols() == b.cols(), "matmul_nt: inner dimensions differ (" +
                                         std::to_string(a.cols()) + " vs " +
                                         std::to_string(b.cols()) + ")");
  return make_op(a.value() * b.value().transpose(), {a, b}, [](Node& out) {
    Node& x = in(out, 0);
    Node& w = in(out, 1);
    if (x.needs_grad) x.accumulate(out.grad * w.value);
    if (w.needs_grad) w.accumulate(out.grad.transpose() * x.value);
  });
}

Var add(const Var& a, const Var& b) {
  require_same_shape(a, b, "add");
  return make_op(a.value() + b.value(), {a, b}, [](Node& out) {
    in(out, 0).accumulate(out.grad);
    in(out, 1).accumulate(out.grad);
  });
}

Var sub(const Var& a, const Var& b) {
  require_same_shape(a, b, "sub");
  return make_op(a.value() - b.value(), {a, b}, [](Node& out) {
    in(out, 0).accumulate(out.grad);
    if (in(out, 1).needs_grad) in(out, 1).accumulate(-out.grad);
  });
}

Var add_row(const Var& a, const Var& row) {
  require_dims(row.rows() == 1 && row.cols() == a.cols(), "add_row: bias must be 1 x cols");
  Matrix v = a.value().rowwise() + row.value().row(0);
  return make_op(std::move(v), {a, row}, [](Node& out) {
    in(out, 0).accumulate(out.grad);
    if (in(out, 1).needs_grad) in(out, 1).accumulate(out.grad.colwise().sum());
  });
}

Var mul(const Var& a, const Var& b) {
  require_same_shape(a, b, "mul");
  return make_op(a.value().cwiseProduct(b.value()), {a, b}, [](Node& out) {
    Node& x = in(out, 0);
    Node& y = in(out, 1);
    if (x.needs_grad) x.accumulate(out.grad.cwiseProduct(y.value));
    if (y.needs_grad) y.accumulate(out.grad.cwiseProduct(x.value));
  });
}

Var mul_const(const Var& a, const Matrix& mask) {
  require_dims(mask.rows() == a.rows() && mask.cols() == a.cols(), "mul_const: shape mismatch");
  return make_op(a.value().cwiseProduct(mask), {a},
                 [mask](Node& out) { in(out, 0).accumulate(out.grad.cwiseProduct(mask)); });
}

Var scale(const Var& a, double s) {
  return make_op(a.value() * s, {a}, [s](Node& out) { in(out, 0).accumulate(out.grad * s); });
}

Var tanh(const Var& a) {
  Matrix v = a.value().array().tanh().matrix();
  return make_op(std::move(v), {a}, [](Node& out) {
    in(out, 0).accumulate(
        (out.grad.array() * (1.0 - out.value.array().square())).matrix());
  });
}

Var sigmoid(const Var& a) {
  Matrix v = a.value().unaryExpr([](double x) { return nn::sigmoid(x); });
  return make_op(std::move(v), {a}, [](Node& out) {
    in(out, 0).accumulate(
        (out.grad.array() * out.value.array() * (1.0 - out.value.array())).matrix());
  });
}

Var elu(const Var& a) {
  return unary(a, [](double x) { return nn::elu(x); }, [](double x) { return nn::elu_grad(x); });
}

Var mish(const Var& a) {
  return unary(a, [](double x) { return nn::mish(x); }, [](double x) { return nn::mish_grad(x); });
}

Var layer_norm_rows(const Var& x, const Var& gain, const Var& offset, double epsilon) {
  const Eigen::Index n = x.rows();
  const Eigen::Index c = x.cols();
  require_dims(c >= 2, "layer_norm_rows: need at least two columns");
  require_dims(gain.rows() == 1 && gain.cols() == c && offset.rows() == 1 && offset.cols() == c,
               "layer_norm_rows: gain/offset must be 1 x cols");
  Matrix normalized(n, c);
  Vector inv_std(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto row = x.value().row(i);
    const double mean = row.mean();
    const auto centered = (row.array() - mean).matrix();
    const double var = centered.squaredNorm() / static_cast<double>(c);
    inv_std[i] = 1.0 / std::sqrt(var + epsilon);
    normalized.row(i) = centered * inv_std[i];
  }
  Matrix y = (normalized.array().rowwise() * gain.value().row(0).array()).matrix();
  y.rowwise() += offset.value().row(0);
  return make_op(std::move(y), {x, gain, offset},
                 [normalized = std::move(normalized), inv_std = std::move(inv_std)](Node& out) {
                   Node& xn = in(out, 0);
                   Node& g = in(out, 1);
                   Node& o = in(out, 2);
                   if (g.needs_grad) g.accumulate(out.grad.cwiseProduct(normalized).colwise().sum());
                   if (o.needs_grad) o.accumulate(out.grad.colwise().sum());
                   if (!xn.needs_grad) return;
                   const Matrix dn = (out.grad.array().rowwise() * g.value.row(0).array()).matrix();
                   Matrix dx(dn.rows(), dn.cols());
                   for (Eigen::Index i = 0; i < dn.rows(); ++i) {
                     const double mean_dn = dn.row(i).mean();
                     const double mean_dn_n = dn.row(i).dot(normalized.row(i)) /
                                              static_cast<double>(dn.cols());
                     dx.row(i) = inv_std[i] * (dn.row(i).array() - mean_dn -
                                               normalized.row(i).array() * mean_dn_n)
                                                  .matrix();
                   }
                   xn.accumulate(dx);
                 });
}

Var softmax_rows(const Var& x) {
  Matrix y(x.rows(), x.cols());
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    const auto row = x.value().row(i);
    const Eigen::RowVectorXd e = (row.array() - row.maxCoeff()).exp().matrix();
    y.row(i) = e / e.sum();
  }
  return make_op(std::move(y), {x}, [](Node& out) {
    const Eigen::VectorXd dots = out.grad.cwiseProduct(out.value).rowwise().sum();
    Matrix dx = out.value.cwiseProduct((out.grad.colwise() - dots));
    in(out, 0).accumulate(dx);
  });
}

Var slice_cols(const Var& a, Eigen::Index start, Eigen::Index count) {
  require_dims(start >= 0 && count >= 0 && start + count <= a.cols(), "slice_cols: out of range");
  Matrix v = a.value().middleCols(start, count);
  return make_op(std::move(v), {a}, [start, count](Node& out) {
    Node& x = in(out, 0);
    Matrix g = Matrix::Zero(x.value.rows(), x.value.cols());
    g.middleCols(start, count) = out.grad;
    x.accumulate(g);
  });
}

Var concat_cols(std::span<const Var> parts) {
  require_dims(!parts.empty(), "concat_cols: nothing to concatenate");
  const Eigen::Index rows = parts.front().rows();
  Eigen::Index cols = 0;
  for (const auto& p : parts) {
    require_dims(p.rows() == rows, "concat_cols: row counts differ");
    cols += p.cols();
  }
  Matrix v(rows, cols);
  Eigen::Index at = 0;
  for (const auto& p : parts) {
    v.middleCols(at, p.cols()) = p.value();
    at += p.cols();
  }
  return make_op(std::move(v), std::vector<Var>(parts.begin(), parts.end()), [](Node& out) {
    Eigen::Index at = 0;
    for (auto& p : out.inputs) {
      const Eigen::Index c = p->value.cols();
      if (p->needs_grad) p->accumulate(out.grad.middleCols(at, c));
      at += c;
    }
  });
}

Var concat_rows(std::span<const Var> parts) {
  require_dims(!parts.empty(), "concat_rows: nothing to concatenate");
  const Eigen::Index cols = parts.front().cols();
  Eigen::Index rows = 0;
  for (const auto& p : parts) {
    require_dims(p.cols() == cols, "concat_rows: column counts differ");
    rows += p.rows();
  }
  Matrix v(rows, cols);
  Eigen::Index at = 0;
  for (const auto& p : parts) {
    v.middleRows(at, p.rows()) = p.value();
    at += p.rows();
  }
  return make_op(std::move(v), std::vector<Var>(parts.begin(), parts.end()), [](Node& out) {
    Eigen::Index at = 0;
    for (auto& p : out.inputs) {
      const Eigen::Index r = p->value.rows();
      if (p->needs_grad) p->accumulate(out.grad.middleRows(at, r));
      at += r;
    }
  });
}

Var gather_rows(const Var& a, std::vector<Eigen::Index> index) {
  Matrix v(static_cast<Eigen::Index>(index.size()), a.cols());
  for (std::size_t i = 0; i < index.size(); ++i) {
    require_dims(index[i] >= 0 && index[i] < a.rows(), "gather_rows: index out of range");
    v.row(static_cast<Eigen::Index>(i)) = a.value().row(index[i]);
  }
  return make_op(std::move(v), {a}, [index = std::move(index)](Node& out) {
    Node& x = in(out, 0);
    Matrix g = Matrix::Zero(x.value.rows(), x.value.cols());
    for (std::size_t i = 0; i < index.size(); ++i)
      g.row(index[i]) += out.grad.row(static_cast<Eigen::Index>(i));
    x.accumulate(g);
  });
}

Var reshape(const Var& a, Eigen::Index rows, Eigen::Index cols) {
  require_dims(rows * cols == a.value().size(), "reshape: element count changes");
  Matrix v = Eigen::Map<const Matrix>(a.value().data(), rows, cols);
  return make_op(std::move(v), {a}, [](Node& out) {
    Node& x = in(out, 0);
    x.accumulate(Eigen::Map<const Matrix>(out.grad.data(), x.value.rows(), x.value.cols()));
  });
}

Var sum(const Var& a) {
  Matrix v(1, 1);
  v(0, 0) = a.value().sum();
  return make_op(std::move(v), {a}, [](Node& out) {
    Node& x = in(out, 0);
    x.accumulate(Matrix::Constant(x.value.rows(), x.value.cols(), out.grad(0, 0)));
  });
}

Var huber_sum(const Var& prediction, const Matrix& target, double tau) {
  require_dims(prediction.rows() == target.rows() && prediction.cols() == target.cols(),
               "huber_sum: prediction/target shape mismatch");
  if (!(tau > 0.0)) throw ConfigError("huber: tau must be positive");
  const Matrix diff = prediction.value() - target;
  Matrix v(1, 1);
  v(0, 0) = diff.unaryExpr([tau](double e) {
                  const double m = std::abs(e);
                  return m < tau ? 0.5 * e * e : tau * (m - 0.5 * tau);
                })
                .sum();
  return make_op(std::move(v), {prediction}, [diff, tau](Node& out) {
    const double g = out.grad(0, 0);
    in(out, 0).accumulate(diff.unaryExpr([tau, g](double e) {
      return g * (std::abs(e) < tau ? e : (e > 0 ? tau : -tau));
    }));
  });
}

Var cross_entropy_rows(const Var& logits, std::span<const int> labels) {
  require_dims(static_cast<Eigen::Index>(labels.size()) == logits.rows(),
               "cross_entropy_rows: one label per row required");
  Matrix probs(logits.rows(), logits.cols());
  double total = 0.0;
  for (Eigen::Index i = 0; i < logits.rows(); ++i) {
    const int y = labels[static_cast<std::size_t>(i)];
    if (y < 0 || y >= logits.cols()) throw DomainError("cross_entropy_rows: label out of range");
    const auto row = logits.value().row(i);
    const double mx = row.maxCoeff();
    const Eigen::RowVectorXd e = (row.array() - mx).exp().matrix();
    const double z = e.sum();
    probs.row(i) = e / z;
    total += (mx + std::log(z)) - row(y);
  }
  Matrix v(1, 1);
  v(0, 0) = total;
  std::vector<int> y(labels.begin(), labels.end());
  return make_op(std::move(v), {logits}, [probs = std::move(probs), y = std::move(y)](Node& out) {
    Matrix g = probs;
    for (std::size_t i = 0; i < y.size(); ++i) g(static_cast<Eigen::Index>(i), y[i]) -= 1.0;
    in(out, 0).accumulate(g * out.grad(0, 0));
  });
}

}  // namespace dcmn::ad
