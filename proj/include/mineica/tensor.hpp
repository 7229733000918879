#pragma once

// Reverse-mode automatic differentiation over dense 2-D double arrays.
//
// A Tensor is a cheap shared handle to a graph node. Operations build a
// fresh graph on every forward pass; backward() walks it once in reverse
// topological order. backward() zeroes every gradient reachable from the
// root before accumulating, so gradients never carry over between calls.

#include <Eigen/Dense>

#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace mineica {

using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

struct ShapeError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct DomainError : std::domain_error {
  using std::domain_error::domain_error;
};

struct ContractError : std::logic_error {
  using std::logic_error::logic_error;
};

struct NumericalError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

namespace detail {
struct Node;
}

/// What an op's gradient rule sees. `grads[k]` is null when input k does not
/// require a gradient; otherwise the rule adds its contribution with
/// accumulate(). A gradient buffer is empty until its first contribution.
struct BackwardContext {
  const Matrix& grad;
  const Matrix& output;
  std::span<const Matrix* const> inputs;
  std::span<Matrix*> grads;
};

using BackwardFn = std::function<void(const BackwardContext&)>;

/// dst += expr, or dst = expr when dst has not received a contribution yet.
template <typename Expr>
void accumulate(Matrix& dst, const Expr& expr) {
  if (dst.size() == 0) {
    dst.noalias() = expr;
  } else {
    dst.noalias() += expr;
  }
}

/// Sizes an empty gradient buffer to match `like` (zero-filled) so that a
/// rule can add into a sub-block of it.
inline Matrix& grad_buffer(Matrix& dst, const Matrix& like) {
  if (dst.size() == 0) dst.setZero(like.rows(), like.cols());
  return dst;
}

class Tensor {
 public:
  Tensor();
  explicit Tensor(Matrix values, bool requires_grad = false);
  Tensor(std::size_t rows, std::size_t cols, bool requires_grad = false);

  static Tensor from_rows(std::initializer_list<std::initializer_list<double>> rows,
                          bool requires_grad = false);
  static Tensor filled(std::size_t rows, std::size_t cols, double value);

  std::size_t rows() const;
  std::size_t cols() const;
  std::size_t size() const { return rows() * cols(); }

  const Matrix& value() const;
  /// Mutable access is meant for leaves (parameter updates, test perturbation).
  Matrix& mutable_value();
  double item() const;
  double operator()(std::size_t r, std::size_t c) const { return value()(r, c); }

  bool requires_grad() const;
  void set_requires_grad(bool on);
  /// Gradient of the last backward() root. Zero-sized when never reached.
  const Matrix& grad() const;
  void zero_grad();

  bool is_leaf() const;
  const std::string& op() const;

  /// Same values, cut from the graph.
  Tensor detach() const;
  /// Deep copy of the value into a new leaf with the same requires_grad flag.
  Tensor clone() const;

  bool same_node(const Tensor& other) const { return node_ == other.node_; }

 private:
  friend class Graph;
  friend Tensor make_op(Matrix, std::vector<Tensor>, std::string, BackwardFn);
  explicit Tensor(std::shared_ptr<detail::Node> node) : node_(std::move(node)) {}

  std::shared_ptr<detail::Node> node_;
};

/// Builds an operation node. Used by every built-in op and by layers that
/// supply their own backward rule (e.g. whitening).
Tensor make_op(Matrix value, std::vector<Tensor> inputs, std::string op, BackwardFn backward);

/// Nodes reachable from a root that require gradients, in topological order.
class Graph {
 public:
  explicit Graph(const Tensor& root);

  std::size_t size() const { return nodes_.size(); }
  std::vector<std::string> op_names() const;
  /// True when every node's inputs appear before it.
  bool is_topologically_ordered() const;

  void backward();

 private:
  Tensor root_;
  std::vector<detail::Node*> nodes_;
};

/// Root must be 1x1. A root that does not require gradients is a no-op.
void backward(const Tensor& root);

// Linear algebra
Tensor matmul(const Tensor& a, const Tensor& b);
/// x W + b with b (1 x C) broadcast over rows; one node instead of two.
Tensor affine(const Tensor& x, const Tensor& weights, const Tensor& bias);
/// relu(x W + b) as one node. Same gradient as composing affine and relu.
Tensor affine_relu(const Tensor& x, const Tensor& weights, const Tensor& bias);
Tensor transpose(const Tensor& a);

// Elementwise, equal shapes
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor neg(const Tensor& a);
/// relu'(0) is taken as 0.
Tensor relu(const Tensor& a);
Tensor exp(const Tensor& a);
/// Throws DomainError on any non-positive entry.
Tensor log(const Tensor& a);

// Scalar and broadcast helpers
Tensor scale(const Tensor& a, double factor);
Tensor add_scalar(const Tensor& a, double offset);
/// a[B x C] + row[1 x C] broadcast over rows.
Tensor add_row(const Tensor& a, const Tensor& row);

enum class Axis { rows, all };
/// Axis::rows averages down each column (result 1 x C); Axis::all gives 1 x 1.
Tensor mean(const Tensor& a, Axis axis);
Tensor sum(const Tensor& a);

// Structural
Tensor concat_cols(const Tensor& a, const Tensor& b);
Tensor slice_cols(const Tensor& a, std::size_t begin, std::size_t count);
std::pair<Tensor, Tensor> split_cols(const Tensor& a, std::size_t left_cols);
/// Stacks tensors with equal column counts on top of each other.
Tensor concat_rows(const std::vector<Tensor>& parts);
Tensor slice_rows(const Tensor& a, std::size_t begin, std::size_t count);
/// out[r] = a[index[r]].
Tensor gather_rows(const Tensor& a, std::span<const std::size_t> index);

Tensor operator+(const Tensor& a, const Tensor& b);
Tensor operator-(const Tensor& a, const Tensor& b);
Tensor operator*(const Tensor& a, const Tensor& b);  // elementwise
Tensor operator-(const Tensor& a);

}  // namespace mineica
