#include "mineica/tensor.hpp"

#include <sstream>
#include <unordered_set>

namespace mineica {

namespace detail {

struct Node {
  Matrix value;
  Matrix grad;
  bool requires_grad = false;
  std::vector<std::shared_ptr<Node>> inputs;
  BackwardFn backward;
  std::string op = "leaf";
};

}  // namespace detail

namespace {

std::string shape_str(const Tensor& t) {
  std::ostringstream os;
  os << t.rows() << "x" << t.cols();
  return os.str();
}

void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw ShapeError(std::string(op) + ": shape mismatch " + shape_str(a) + " vs " + shape_str(b));
  }
}

}  // namespace

Tensor::Tensor() : node_(std::make_shared<detail::Node>()) {}

Tensor::Tensor(Matrix values, bool requires_grad) : node_(std::make_shared<detail::Node>()) {
  node_->value = std::move(values);
  node_->requires_grad = requires_grad;
}

Tensor::Tensor(std::size_t rows, std::size_t cols, bool requires_grad)
    : Tensor(Matrix::Zero(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols)),
             requires_grad) {}

Tensor Tensor::from_rows(std::initializer_list<std::initializer_list<double>> rows,
                         bool requires_grad) {
  const std::size_t r = rows.size();
  const std::size_t c = r == 0 ? 0 : rows.begin()->size();
  Matrix m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c));
  Eigen::Index i = 0;
  for (const auto& row : rows) {
    if (row.size() != c) throw ShapeError("from_rows: ragged rows");
    Eigen::Index j = 0;
    for (double v : row) m(i, j++) = v;
    ++i;
  }
  return Tensor(std::move(m), requires_grad);
}

Tensor Tensor::filled(std::size_t rows, std::size_t cols, double value) {
  return Tensor(Matrix::Constant(static_cast<Eigen::Index>(rows),
                                 static_cast<Eigen::Index>(cols), value));
}

std::size_t Tensor::rows() const { return static_cast<std::size_t>(node_->value.rows()); }
std::size_t Tensor::cols() const { return static_cast<std::size_t>(node_->value.cols()); }
const Matrix& Tensor::value() const { return node_->value; }
Matrix& Tensor::mutable_value() { return node_->value; }

double Tensor::item() const {
  if (rows() != 1 || cols() != 1) throw ShapeError("item: tensor is " + shape_str(*this));
  return node_->value(0, 0);
}

bool Tensor::requires_grad() const { return node_->requires_grad; }

void Tensor::set_requires_grad(bool on) {
  if (!is_leaf()) throw ContractError("set_requires_grad: only leaves can be toggled");
  node_->requires_grad = on;
}

const Matrix& Tensor::grad() const { return node_->grad; }

void Tensor::zero_grad() {
  node_->grad.setZero(node_->value.rows(), node_->value.cols());
}

bool Tensor::is_leaf() const { return node_->inputs.empty() && !node_->backward; }
const std::string& Tensor::op() const { return node_->op; }

Tensor Tensor::detach() const { return Tensor(node_->value, false); }
Tensor Tensor::clone() const { return Tensor(node_->value, node_->requires_grad); }

Tensor make_op(Matrix value, std::vector<Tensor> inputs, std::string op, BackwardFn backward) {
  auto node = std::make_shared<detail::Node>();
  node->value = std::move(value);
  node->op = std::move(op);
  for (const auto& in : inputs) node->requires_grad = node->requires_grad || in.requires_grad();
  if (node->requires_grad) {
    node->inputs.reserve(inputs.size());
    for (auto& in : inputs) node->inputs.push_back(std::move(in.node_));
    node->backward = std::move(backward);
  }
  return Tensor(std::move(node));
}

// ---------------------------------------------------------------------------
// Graph

Graph::Graph(const Tensor& root) : root_(root) {
  if (!root.requires_grad()) return;
  // Iterative post-order DFS; post-order is a valid topological order.
  std::unordered_set<const detail::Node*> seen;
  std::vector<std::pair<detail::Node*, std::size_t>> stack;
  stack.emplace_back(root.node_.get(), 0);
  seen.insert(root.node_.get());
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    if (next < node->inputs.size()) {
      detail::Node* child = node->inputs[next++].get();
      if (child->requires_grad && seen.insert(child).second) stack.emplace_back(child, 0);
    } else {
      nodes_.push_back(node);
      stack.pop_back();
    }
  }
}

std::vector<std::string> Graph::op_names() const {
  std::vector<std::string> out;
  out.reserve(nodes_.size());
  for (const auto* n : nodes_) out.push_back(n->op);
  return out;
}

bool Graph::is_topologically_ordered() const {
  std::unordered_set<const detail::Node*> before;
  for (const auto* n : nodes_) {
    for (const auto& in : n->inputs) {
      if (in->requires_grad && !before.contains(in.get())) return false;
    }
    before.insert(n);
  }
  return true;
}

void Graph::backward() {
  if (nodes_.empty()) return;
  for (auto* n : nodes_) n->grad.resize(0, 0);
  nodes_.back()->grad.setOnes(nodes_.back()->value.rows(), nodes_.back()->value.cols());
  std::vector<const Matrix*> values;
  std::vector<Matrix*> slots;
  for (auto it = nodes_.rbegin(); it != nodes_.rend(); ++it) {
    detail::Node* n = *it;
    if (!n->backward) continue;
    if (n->grad.size() == 0) n->grad.setZero(n->value.rows(), n->value.cols());
    values.clear();
    slots.clear();
    for (auto& in : n->inputs) {
      values.push_back(&in->value);
      slots.push_back(in->requires_grad ? &in->grad : nullptr);
    }
    n->backward(BackwardContext{n->grad, n->value, values, slots});
    // Interior gradients are consumed; only leaves keep theirs.
    n->grad.resize(0, 0);
  }
  for (auto* n : nodes_) {
    if (!n->backward && n->grad.size() == 0) n->grad.setZero(n->value.rows(), n->value.cols());
  }
}

void backward(const Tensor& root) {
  if (root.rows() != 1 || root.cols() != 1) {
    throw ContractError("backward: root must be 1x1, got " + shape_str(root));
  }
  Graph(root).backward();
}

// ---------------------------------------------------------------------------
// Linear algebra

Tensor matmul(const Tensor& a, const Tensor& b) {
  if (a.cols() != b.rows()) {
    throw ShapeError("matmul: inner dimensions differ " + shape_str(a) + " * " + shape_str(b));
  }
  return make_op(a.value() * b.value(), {a, b}, "matmul", [](const BackwardContext& c) {
    if (c.grads[0]) accumulate(*c.grads[0], c.grad * c.inputs[1]->transpose());
    if (c.grads[1]) accumulate(*c.grads[1], c.inputs[0]->transpose() * c.grad);
  });
}

namespace {

Matrix affine_value(const Tensor& x, const Tensor& weights, const Tensor& bias, const char* op) {
  if (x.cols() != weights.rows()) {
    throw ShapeError(std::string(op) + ": inner dimensions differ " + shape_str(x) + " * " +
                     shape_str(weights));
  }
  if (bias.rows() != 1 || bias.cols() != weights.cols()) {
    throw ShapeError(std::string(op) + ": bias " + shape_str(bias) + " does not match " +
                     shape_str(weights));
  }
  Matrix out(x.value().rows(), weights.value().cols());
  out.rowwise() = bias.value().row(0);
  out.noalias() += x.value() * weights.value();
  return out;
}

}  // namespace

Tensor affine_relu(const Tensor& x, const Tensor& weights, const Tensor& bias) {
  Matrix out = affine_value(x, weights, bias, "affine_relu");
  out = out.cwiseMax(0.0);
  return make_op(std::move(out), {x, weights, bias}, "affine_relu", [](const BackwardContext& c) {
    const Matrix g = (c.output.array() > 0.0).select(c.grad.array(), 0.0).matrix();
    if (c.grads[0]) accumulate(*c.grads[0], g * c.inputs[1]->transpose());
    if (c.grads[1]) accumulate(*c.grads[1], c.inputs[0]->transpose() * g);
    if (c.grads[2]) accumulate(*c.grads[2], g.colwise().sum());
  });
}

Tensor affine(const Tensor& x, const Tensor& weights, const Tensor& bias) {
  Matrix out = affine_value(x, weights, bias, "affine");
  return make_op(std::move(out), {x, weights, bias}, "affine", [](const BackwardContext& c) {
    if (c.grads[0]) accumulate(*c.grads[0], c.grad * c.inputs[1]->transpose());
    if (c.grads[1]) accumulate(*c.grads[1], c.inputs[0]->transpose() * c.grad);
    if (c.grads[2]) accumulate(*c.grads[2], c.grad.colwise().sum());
  });
}

Tensor transpose(const Tensor& a) {
  return make_op(a.value().transpose(), {a}, "transpose", [](const BackwardContext& c) {
    if (c.grads[0]) accumulate(*c.grads[0], c.grad.transpose());
  });
}

// ---------------------------------------------------------------------------
// Elementwise

Tensor add(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "add");
  return make_op(a.value() + b.value(), {a, b}, "add", [](const BackwardContext& c) {
    if (c.grads[0]) accumulate(*c.grads[0], c.grad);
    if (c.grads[1]) accumulate(*c.grads[1], c.grad);
  });
}

Tensor sub(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "sub");
  return make_op(a.value() - b.value(), {a, b}, "sub", [](const BackwardContext& c) {
    if (c.grads[0]) accumulate(*c.grads[0], c.grad);
    if (c.grads[1]) accumulate(*c.grads[1], -c.grad);
  });
}

Tensor mul(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "mul");
  return make_op(a.value().cwiseProduct(b.value()), {a, b}, "mul", [](const BackwardContext& c) {
    if (c.grads[0]) accumulate(*c.grads[0], c.grad.cwiseProduct(*c.inputs[1]));
    if (c.grads[1]) accumulate(*c.grads[1], c.grad.cwiseProduct(*c.inputs[0]));
  });
}

Tensor neg(const Tensor& a) {
  return make_op(-a.value(), {a}, "neg", [](const BackwardContext& c) {
    if (c.grads[0]) accumulate(*c.grads[0], -c.grad);
  });
}

Tensor relu(const Tensor& a) {
  // Gradient passes only where the output is strictly positive, so relu'(0) = 0.
  return make_op(a.value().cwiseMax(0.0), {a}, "relu", [](const BackwardContext& c) {
    if (c.grads[0]) {
      accumulate(*c.grads[0], (c.output.array() > 0.0).select(c.grad.array(), 0.0).matrix());
    }
  });
}

Tensor exp(const Tensor& a) {
  return make_op(a.value().array().exp().matrix(), {a}, "exp", [](const BackwardContext& c) {
    if (c.grads[0]) accumulate(*c.grads[0], c.grad.cwiseProduct(c.output));
  });
}

Tensor log(const Tensor& a) {
  if (!(a.value().array() > 0.0).all()) {
    throw DomainError("log: input must be strictly positive");
  }
  return make_op(a.value().array().log().matrix(), {a}, "log", [](const BackwardContext& c) {
    if (c.grads[0]) accumulate(*c.grads[0], c.grad.cwiseQuotient(*c.inputs[0]));
  });
}

Tensor scale(const Tensor& a, double factor) {
  return make_op(a.value() * factor, {a}, "scale", [factor](const BackwardContext& c) {
    if (c.grads[0]) accumulate(*c.grads[0], c.grad * factor);
  });
}

Tensor add_scalar(const Tensor& a, double offset) {
  return make_op((a.value().array() + offset).matrix(), {a}, "add_scalar",
                 [](const BackwardContext& c) {
                   if (c.grads[0]) accumulate(*c.grads[0], c.grad);
                 });
}

Tensor add_row(const Tensor& a, const Tensor& row) {
  if (row.rows() != 1 || row.cols() != a.cols()) {
    throw ShapeError("add_row: cannot broadcast " + shape_str(row) + " onto " + shape_str(a));
  }
  Matrix out = a.value().rowwise() + row.value().row(0);
  return make_op(std::move(out), {a, row}, "add_row", [](const BackwardContext& c) {
    if (c.grads[0]) accumulate(*c.grads[0], c.grad);
    if (c.grads[1]) accumulate(*c.grads[1], c.grad.colwise().sum());
  });
}

// ---------------------------------------------------------------------------
// Reductions

Tensor mean(const Tensor& a, Axis axis) {
  if (a.rows() == 0 || a.cols() == 0) throw ShapeError("mean: empty tensor");
  if (axis == Axis::rows) {
    const auto n = static_cast<double>(a.rows());
    Matrix out = a.value().colwise().mean();
    return make_op(std::move(out), {a}, "mean_rows", [n](const BackwardContext& c) {
      if (c.grads[0]) grad_buffer(*c.grads[0], *c.inputs[0]).rowwise() += c.grad.row(0) / n;
    });
  }
  const auto n = static_cast<double>(a.size());
  Matrix out(1, 1);
  out(0, 0) = a.value().mean();
  return make_op(std::move(out), {a}, "mean_all", [n](const BackwardContext& c) {
    if (c.grads[0]) grad_buffer(*c.grads[0], *c.inputs[0]).array() += c.grad(0, 0) / n;
  });
}

Tensor sum(const Tensor& a) {
  Matrix out(1, 1);
  out(0, 0) = a.value().sum();
  return make_op(std::move(out), {a}, "sum", [](const BackwardContext& c) {
    if (c.grads[0]) grad_buffer(*c.grads[0], *c.inputs[0]).array() += c.grad(0, 0);
  });
}

// ---------------------------------------------------------------------------
// Structural

Tensor concat_cols(const Tensor& a, const Tensor& b) {
  if (a.rows() != b.rows()) {
    throw ShapeError("concat_cols: row mismatch " + shape_str(a) + " | " + shape_str(b));
  }
  const auto ca = static_cast<Eigen::Index>(a.cols());
  const auto cb = static_cast<Eigen::Index>(b.cols());
  Matrix out(a.value().rows(), ca + cb);
  out.leftCols(ca) = a.value();
  out.rightCols(cb) = b.value();
  return make_op(std::move(out), {a, b}, "concat_cols", [ca, cb](const BackwardContext& c) {
    if (c.grads[0]) accumulate(*c.grads[0], c.grad.leftCols(ca));
    if (c.grads[1]) accumulate(*c.grads[1], c.grad.rightCols(cb));
  });
}

Tensor slice_cols(const Tensor& a, std::size_t begin, std::size_t count) {
  if (count == 0 || begin + count > a.cols()) {
    throw ShapeError("slice_cols: columns [" + std::to_string(begin) + ", " +
                     std::to_string(begin + count) + ") out of range for " + shape_str(a));
  }
  const auto b0 = static_cast<Eigen::Index>(begin);
  const auto n = static_cast<Eigen::Index>(count);
  Matrix out = a.value().middleCols(b0, n);
  return make_op(std::move(out), {a}, "slice_cols", [b0, n](const BackwardContext& c) {
    if (c.grads[0]) grad_buffer(*c.grads[0], *c.inputs[0]).middleCols(b0, n) += c.grad;
  });
}

std::pair<Tensor, Tensor> split_cols(const Tensor& a, std::size_t left_cols) {
  if (left_cols == 0 || left_cols >= a.cols()) {
    throw ShapeError("split_cols: split point " + std::to_string(left_cols) +
                     " invalid for " + shape_str(a));
  }
  return {slice_cols(a, 0, left_cols), slice_cols(a, left_cols, a.cols() - left_cols)};
}

Tensor concat_rows(const std::vector<Tensor>& parts) {
  if (parts.empty()) throw ShapeError("concat_rows: nothing to concatenate");
  const Eigen::Index c = parts.front().value().cols();
  Eigen::Index total = 0;
  std::vector<Eigen::Index> offsets;
  offsets.reserve(parts.size());
  for (const auto& p : parts) {
    if (p.value().cols() != c) {
      throw ShapeError("concat_rows: column mismatch " + shape_str(parts.front()) + " vs " +
                       shape_str(p));
    }
    offsets.push_back(total);
    total += p.value().rows();
  }
  Matrix out(total, c);
  for (std::size_t k = 0; k < parts.size(); ++k) {
    out.middleRows(offsets[k], parts[k].value().rows()) = parts[k].value();
  }
  return make_op(std::move(out), parts, "concat_rows",
                 [offsets = std::move(offsets)](const BackwardContext& ctx) {
                   for (std::size_t k = 0; k < ctx.grads.size(); ++k) {
                     if (ctx.grads[k]) {
                       accumulate(*ctx.grads[k], ctx.grad.middleRows(offsets[k], ctx.inputs[k]->rows()));
                     }
                   }
                 });
}

Tensor slice_rows(const Tensor& a, std::size_t begin, std::size_t count) {
  if (count == 0 || begin + count > a.rows()) {
    throw ShapeError("slice_rows: rows [" + std::to_string(begin) + ", " +
                     std::to_string(begin + count) + ") out of range for " + shape_str(a));
  }
  const auto b0 = static_cast<Eigen::Index>(begin);
  const auto n = static_cast<Eigen::Index>(count);
  Matrix out = a.value().middleRows(b0, n);
  return make_op(std::move(out), {a}, "slice_rows", [b0, n](const BackwardContext& c) {
    if (c.grads[0]) grad_buffer(*c.grads[0], *c.inputs[0]).middleRows(b0, n) += c.grad;
  });
}

Tensor gather_rows(const Tensor& a, std::span<const std::size_t> index) {
  const auto n = static_cast<Eigen::Index>(index.size());
  Matrix out(n, a.value().cols());
  for (Eigen::Index r = 0; r < n; ++r) {
    const std::size_t src = index[static_cast<std::size_t>(r)];
    if (src >= a.rows()) throw ShapeError("gather_rows: index out of range");
    out.row(r) = a.value().row(static_cast<Eigen::Index>(src));
  }
  std::vector<std::size_t> idx(index.begin(), index.end());
  return make_op(std::move(out), {a}, "gather_rows",
                 [idx = std::move(idx)](const BackwardContext& c) {
                   if (!c.grads[0]) return;
                   Matrix& dst = grad_buffer(*c.grads[0], *c.inputs[0]);
                   for (std::size_t r = 0; r < idx.size(); ++r) {
                     dst.row(static_cast<Eigen::Index>(idx[r])) +=
                         c.grad.row(static_cast<Eigen::Index>(r));
                   }
                 });
}

Tensor operator+(const Tensor& a, const Tensor& b) { return add(a, b); }
Tensor operator-(const Tensor& a, const Tensor& b) { return sub(a, b); }
Tensor operator*(const Tensor& a, const Tensor& b) { return mul(a, b); }
Tensor operator-(const Tensor& a) { return neg(a); }

}  // namespace mineica
