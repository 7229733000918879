#include "mineica/nn.hpp"

#include "mineica/random.hpp"

#include <cmath>
#include <string>

namespace mineica {

double init_bound(InitScheme scheme, std::size_t fan_in, std::size_t fan_out) {
  switch (scheme) {
    case InitScheme::he_uniform:
      return std::sqrt(6.0 / static_cast<double>(fan_in));
    case InitScheme::xavier_uniform:
      return std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    case InitScheme::zeros:
      return 0.0;
  }
  return 0.0;
}

Tensor init_params(std::size_t rows, std::size_t cols, std::uint64_t seed, InitScheme scheme,
                   bool requires_grad) {
  Matrix m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  const double bound = init_bound(scheme, rows, cols);
  if (bound == 0.0) {
    m.setZero();
  } else {
    Rng rng(seed);
    std::uniform_real_distribution<double> dist(-bound, bound);
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = dist(rng);
  }
  return Tensor(std::move(m), requires_grad);
}

void set_trainable(std::vector<Tensor>& params, bool trainable) {
  for (auto& p : params) p.set_requires_grad(trainable);
}

// ---------------------------------------------------------------------------

LinearLayer::LinearLayer(std::size_t in, std::size_t out, bool with_bias, std::uint64_t seed,
                         InitScheme scheme)
    : weights_(init_params(in, out, seed, scheme)) {
  if (with_bias) bias_ = Tensor(1, out, true);
}

LinearLayer::LinearLayer(Tensor weights, std::optional<Tensor> bias)
    : weights_(std::move(weights)), bias_(std::move(bias)) {
  if (bias_ && (bias_->rows() != 1 || bias_->cols() != weights_.cols())) {
    throw ShapeError("LinearLayer: bias must be 1 x " + std::to_string(weights_.cols()));
  }
}

Tensor LinearLayer::forward(const Tensor& x) const {
  if (x.cols() != in_dim()) {
    throw ShapeError("LinearLayer: expected " + std::to_string(in_dim()) + " input columns, got " +
                     std::to_string(x.cols()));
  }
  return bias_ ? affine(x, weights_, *bias_) : matmul(x, weights_);
}

std::vector<Tensor> LinearLayer::parameters() const {
  std::vector<Tensor> out{weights_};
  if (bias_) out.push_back(*bias_);
  return out;
}

LinearLayer LinearLayer::clone() const {
  std::optional<Tensor> b;
  if (bias_) b = bias_->clone();
  return LinearLayer(weights_.clone(), std::move(b));
}

// ---------------------------------------------------------------------------

Mlp::Mlp(const std::vector<std::size_t>& dims, std::uint64_t seed) {
  if (dims.size() < 2) throw ContractError("Mlp: need at least input and output dimensions");
  const std::size_t n = dims.size() - 1;
  layers_.reserve(n);
  for (std::size_t k = 0; k < n; ++k) {
    const auto scheme = k + 1 < n ? InitScheme::he_uniform : InitScheme::xavier_uniform;
    layers_.emplace_back(dims[k], dims[k + 1], true, derive_seed(seed, k), scheme);
  }
}

Mlp::Mlp(std::vector<LinearLayer> layers) : layers_(std::move(layers)) {
  if (layers_.empty()) throw ContractError("Mlp: no layers");
  for (std::size_t k = 1; k < layers_.size(); ++k) {
    if (layers_[k - 1].out_dim() != layers_[k].in_dim()) {
      throw ShapeError("Mlp: layer " + std::to_string(k) + " does not chain");
    }
  }
}

Tensor Mlp::forward(const Tensor& x) const {
  Tensor h = x;
  for (std::size_t k = 0; k + 1 < layers_.size(); ++k) {
    const LinearLayer& l = layers_[k];
    if (h.cols() != l.in_dim()) throw ShapeError("Mlp: input does not match layer " + std::to_string(k));
    h = l.bias() ? affine_relu(h, l.weights(), *l.bias()) : relu(l.forward(h));
  }
  return layers_.back().forward(h);
}

std::vector<Tensor> Mlp::parameters() const {
  std::vector<Tensor> out;
  for (const auto& l : layers_) {
    auto p = l.parameters();
    out.insert(out.end(), p.begin(), p.end());
  }
  return out;
}

Mlp Mlp::clone() const {
  std::vector<LinearLayer> copy;
  copy.reserve(layers_.size());
  for (const auto& l : layers_) copy.push_back(l.clone());
  return Mlp(std::move(copy));
}

// ---------------------------------------------------------------------------
// Whitening

WhiteningStats whitening_stats(const Matrix& z, double epsilon) {
  const Eigen::Index b = z.rows();
  const Eigen::Index m = z.cols();
  if (b <= m) {
    throw ContractError("whiten: need more rows than columns, got " + std::to_string(b) + "x" +
                        std::to_string(m));
  }
  if (!z.allFinite()) throw NumericalError("whiten: non-finite input");

  WhiteningStats s;
  s.epsilon = epsilon;
  s.mean = z.colwise().mean();
  const Matrix centered = z.rowwise() - s.mean.row(0);
  Matrix cov = (centered.transpose() * centered) / static_cast<double>(b);
  cov.diagonal().array() += epsilon;

  Eigen::SelfAdjointEigenSolver<Matrix> eig(cov);
  if (eig.info() != Eigen::Success) throw NumericalError("whiten: eigendecomposition failed");
  s.eigenvalues = eig.eigenvalues();
  if (!(s.eigenvalues.array() > 0.0).all()) {
    throw NumericalError("whiten: regularized covariance is not positive definite");
  }
  s.eigenvectors = eig.eigenvectors();
  s.inverse_sqrt = s.eigenvectors * s.eigenvalues.array().rsqrt().matrix().asDiagonal() *
                   s.eigenvectors.transpose();
  return s;
}

Matrix whiten_backward(const WhiteningStats& stats, const Matrix& centered, const Matrix& grad) {
  const auto b = static_cast<double>(centered.rows());
  const Matrix& v = stats.eigenvectors;
  const Eigen::VectorXd root = stats.eigenvalues.array().sqrt();
  const Eigen::Index m = root.size();

  // Direct path through y = Zc W.
  Matrix d_centered = grad * stats.inverse_sqrt;

  // Path through W = f(C): dL/dW, symmetrized since W is a function of a
  // symmetric argument.
  Matrix d_w = centered.transpose() * grad;
  d_w = 0.5 * (d_w + d_w.transpose()).eval();

  Matrix divided(m, m);
  for (Eigen::Index i = 0; i < m; ++i) {
    for (Eigen::Index j = 0; j < m; ++j) {
      divided(i, j) = -1.0 / (root(i) * root(j) * (root(i) + root(j)));
    }
  }
  const Matrix d_cov = v * (v.transpose() * d_w * v).cwiseProduct(divided) * v.transpose();

  // C = Zc^T Zc / B + eps I, with d_cov symmetric.
  d_centered.noalias() += (2.0 / b) * centered * d_cov;

  // Zc = Z - mean(Z).
  return d_centered.rowwise() - d_centered.colwise().mean();
}

Tensor whiten(const Tensor& z, double epsilon, WhiteningStats* stats_out) {
  WhiteningStats stats = whitening_stats(z.value(), epsilon);
  Matrix centered = z.value().rowwise() - stats.mean.row(0);
  Matrix out = centered * stats.inverse_sqrt;
  if (stats_out) *stats_out = stats;
  return make_op(std::move(out), {z}, "whiten",
                 [stats = std::move(stats), centered = std::move(centered)](
                     const BackwardContext& c) {
                   if (c.grads[0]) accumulate(*c.grads[0], whiten_backward(stats, centered, c.grad));
                 });
}

WhiteningLayer::WhiteningLayer(double epsilon) : epsilon_(epsilon) {
  if (!(epsilon > 0.0)) throw ContractError("WhiteningLayer: epsilon must be positive");
}

Tensor WhiteningLayer::forward(const Tensor& z) {
  WhiteningStats s;
  Tensor y = whiten(z, epsilon_, &s);
  stats_ = std::move(s);
  return y;
}

}  // namespace mineica
